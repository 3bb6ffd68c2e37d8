#pragma once

// Independent reference implementations used only by tests. They share no
// code with the library beyond the data model.

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ipps/instance.hpp"
#include "ipps/instance_io.hpp"

namespace oracle {

inline std::string data_path(const std::string& name) { return std::string(IPPS_DATA_DIR) + "/" + name; }

// Every OR-connector gets one branch (reached or not); the combination is
// the set of nodes reachable from start over AND edges and chosen OR edges.
inline std::set<std::vector<bool>> or_choice_sets(const ipps::JobGraph& job) {
  const int n = job.size();
  std::vector<std::vector<int>> or_out(n);
  std::vector<int> connectors;
  for (int e = 0; e < static_cast<int>(job.edges().size()); ++e)
    if (job.edges()[e].kind == ipps::LinkKind::Or) or_out[job.edges()[e].from].push_back(e);
  for (int v = 0; v < n; ++v)
    if (!or_out[v].empty()) connectors.push_back(v);

  std::set<std::vector<bool>> out;
  std::vector<std::size_t> pick(connectors.size(), 0);
  while (true) {
    std::set<int> chosen;
    for (std::size_t c = 0; c < connectors.size(); ++c) chosen.insert(or_out[connectors[c]][pick[c]]);
    std::vector<bool> seen(n, false);
    std::vector<int> stack{job.start()};
    seen[job.start()] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int e : job.out_edges(v)) {
        const auto& ed = job.edges()[e];
        if (ed.kind == ipps::LinkKind::Or && !chosen.count(e)) continue;
        if (!seen[ed.to]) {
          seen[ed.to] = true;
          stack.push_back(ed.to);
        }
      }
    }
    out.insert(seen);
    std::size_t c = 0;
    while (c < connectors.size() && ++pick[c] == or_out[connectors[c]].size()) pick[c++] = 0;
    if (c == connectors.size()) break;
  }
  return out;
}

// Optimal makespan by exhaustive search over schedule space: for each
// combination choice, every order of appending ready operations to machines.
// Appending in start order reaches every semi-active schedule, and some
// semi-active schedule is optimal.
inline std::int64_t schedule_space_optimum(const ipps::InstanceSpec& spec) {
  const int J = spec.job_count();
  std::vector<std::vector<std::vector<bool>>> sets(J);
  for (int j = 0; j < J; ++j) {
    auto s = or_choice_sets(spec.jobs[j]);
    sets[j].assign(s.begin(), s.end());
  }
  std::int64_t best = std::numeric_limits<std::int64_t>::max();

  struct Op {
    int job, pos;
    std::vector<int> preds;  // indices into ops
    std::vector<std::pair<int, std::int64_t>> options;
  };

  std::vector<std::size_t> choice(J, 0);
  std::function<void(int)> over_choices = [&](int j) {
    if (j < J) {
      for (std::size_t h = 0; h < sets[j].size(); ++h) {
        choice[j] = h;
        over_choices(j + 1);
      }
      return;
    }
    // Flatten chosen regular ops; precedence looks through zero-time nodes.
    std::vector<Op> ops;
    std::vector<std::vector<int>> index(J);
    for (int jj = 0; jj < J; ++jj) {
      const auto& job = spec.jobs[jj];
      index[jj].assign(job.size(), -1);
      for (int v = 0; v < job.size(); ++v)
        if (sets[jj][choice[jj]][v] && job.op(v).kind == ipps::NodeKind::Regular) {
          index[jj][v] = static_cast<int>(ops.size());
          Op o{jj, v, {}, {}};
          for (const auto& m : job.op(v).machines) o.options.push_back({m.machine, m.time.milli()});
          ops.push_back(o);
        }
    }
    for (auto& o : ops) {
      const auto& job = spec.jobs[o.job];
      const auto& member = sets[o.job][choice[o.job]];
      std::vector<int> stack(job.predecessors(o.pos).begin(), job.predecessors(o.pos).end());
      std::set<int> seen;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (!member[u] || !seen.insert(u).second) continue;
        if (index[o.job][u] >= 0) o.preds.push_back(index[o.job][u]);
        else
          for (int p : job.predecessors(u)) stack.push_back(p);
      }
    }
    const std::size_t n = ops.size();
    std::vector<std::int64_t> end(n, -1), machine_free(spec.machine_count, 0), job_free(J, 0);
    std::function<void(std::size_t, std::int64_t)> dfs = [&](std::size_t placed, std::int64_t span) {
      if (span >= best) return;
      if (placed == n) {
        best = span;
        return;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (end[i] >= 0) continue;
        std::int64_t ready = job_free[ops[i].job];
        bool ok = true;
        for (int p : ops[i].preds) {
          if (end[p] < 0) ok = false;
          else ready = std::max(ready, end[p]);
        }
        if (!ok) continue;
        for (auto [m, p] : ops[i].options) {
          const std::int64_t s = std::max(ready, machine_free[m]);
          const auto saved_m = machine_free[m];
          const auto saved_j = job_free[ops[i].job];
          end[i] = s + p;
          machine_free[m] = s + p;
          job_free[ops[i].job] = s + p;
          dfs(placed + 1, std::max(span, s + p));
          end[i] = -1;
          machine_free[m] = saved_m;
          job_free[ops[i].job] = saved_j;
        }
      }
    };
    dfs(0, 0);
  };
  over_choices(0);
  return best;
}

// Non-conforming links: for each OR-connector, a branch interior is what the
// head reaches minus what every head reaches. Nothing may enter an interior
// except the connector's own OR edge, and nothing may leave it except into
// the common part. Returns the number of offending edges.
inline int nonconforming_links(const ipps::JobGraph& job) {
  const int n = job.size();
  auto reach = [&](int h) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack{h};
    seen[h] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : job.successors(v))
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
    return seen;
  };
  int bad = 0;
  for (int c = 0; c < n; ++c) {
    std::vector<int> heads;
    for (int e : job.out_edges(c))
      if (job.edges()[e].kind == ipps::LinkKind::Or) heads.push_back(job.edges()[e].to);
    if (heads.empty()) continue;
    std::vector<std::vector<bool>> r;
    for (int h : heads) r.push_back(reach(h));
    std::vector<bool> common(n, true);
    for (const auto& x : r)
      for (int v = 0; v < n; ++v) common[v] = common[v] && x[v];
    for (std::size_t b = 0; b < heads.size(); ++b) {
      std::vector<bool> interior(n);
      for (int v = 0; v < n; ++v) interior[v] = r[b][v] && !common[v];
      for (const auto& e : job.edges()) {
        if (interior[e.to] && !interior[e.from] && !(e.from == c && e.to == heads[b])) ++bad;  // main -> sub
        if (interior[e.from] && !interior[e.to] && !common[e.to]) ++bad;                      // sub -> main
      }
    }
  }
  return bad;
}

}  // namespace oracle
