#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipps/env.hpp"

namespace ipps {

inline constexpr int kOperationFeatures = 5;
inline constexpr int kMachineFeatures = 6;
inline constexpr int kCombinationFeatures = 2;
inline constexpr int kJobFeatures = 1;

struct NodeSet {
  std::vector<int> ids;
  std::vector<std::vector<double>> features;  // one row per id
  friend bool operator==(const NodeSet&, const NodeSet&) = default;
};

using IdPair = std::pair<int, int>;

// Residual heterogeneous graph of a state. Node ids are global: operations
// and combinations are numbered across jobs in instance order; machines and
// jobs use their indices. Edges hold node ids, not row indices.
struct HeteroGraphSnapshot {
  NodeSet operations;  // #prerequisites, scheduled, feasible, waiting time, remaining time
  NodeSet machines;    // #neighbour ops, idle-at, utilization, working, idle time, remaining time
  NodeSet combinations;  // estimated end, ratio to the job's best
  NodeSet jobs;        // estimated end over the largest

  std::vector<IdPair> op_op;     // prerequisite -> dependent
  std::vector<IdPair> op_comb;
  std::vector<IdPair> comb_job;
  std::vector<IdPair> op_machine;
  std::vector<double> op_machine_time;  // parallel to op_machine

  std::vector<IdPair> mask;  // (op, machine) pairs in the action space
  bool wait = false;
  std::vector<IdPair> future_pairs;

  friend bool operator==(const HeteroGraphSnapshot&, const HeteroGraphSnapshot&) = default;
};

class GraphEncoder {
 public:
  explicit GraphEncoder(const Environment& env) : env_(&env) {
    const auto& spec = env.spec();
    for (int j = 0; j < spec.job_count(); ++j) {
      op_offset_.push_back(op_count_);
      comb_offset_.push_back(comb_count_);
      op_count_ += spec.jobs[j].size();
      comb_count_ += static_cast<int>(env.combinations().of(j).size());
    }
  }

  int op_id(OpRef r) const { return op_offset_[r.job] + r.op; }
  OpRef op_ref(int id) const {
    const auto it = std::upper_bound(op_offset_.begin(), op_offset_.end(), id);
    const int j = static_cast<int>(it - op_offset_.begin()) - 1;
    return {j, id - op_offset_[j]};
  }
  int op_count() const { return op_count_; }
  int combination_id(int job, int h) const { return comb_offset_[job] + h; }

  HeteroGraphSnapshot encode(const EnvState& s) const {
    const auto& spec = env_->spec();
    const auto& table = env_->combinations();
    HeteroGraphSnapshot g;
    const double now = s.clock.to_double();

    // Live regular operations: unscheduled and in play, or in progress.
    auto live = [&](int j, int v) {
      if (spec.jobs[j].op(v).kind != NodeKind::Regular) return false;
      const auto st = s.ops[j][v].status;
      return st == OpStatus::InProgress || (st == OpStatus::Unscheduled && s.in_play[j][v]);
    };

    std::vector<int> machine_degree(spec.machine_count, 0);
    for (int j = 0; j < spec.job_count(); ++j) {
      const auto& job = spec.jobs[j];
      for (int v = 0; v < job.size(); ++v) {
        if (!live(j, v)) continue;
        const auto& st = s.ops[j][v];
        const int id = op_id({j, v});
        int prereqs = 0;
        for (int u : regular_prerequisites(job, s.in_play[j], v))
          if (live(j, u)) {
            g.op_op.push_back({op_id({j, u}), id});
            ++prereqs;
          }
        const bool running = st.status == OpStatus::InProgress;
        g.operations.ids.push_back(id);
        g.operations.features.push_back({static_cast<double>(prereqs), running ? 1.0 : 0.0, st.ready ? 1.0 : 0.0,
                                         st.ready ? (s.clock - st.ready_since).to_double() : 0.0,
                                         running ? (st.end - s.clock).to_double() : 0.0});
        if (running) {
          g.op_machine.push_back({id, st.machine});
          g.op_machine_time.push_back((st.end - st.start).to_double());
          ++machine_degree[st.machine];
        } else {
          for (const auto& m : job.op(v).machines) {
            g.op_machine.push_back({id, m.machine});
            g.op_machine_time.push_back(m.time.to_double());
            ++machine_degree[m.machine];
          }
        }
      }
    }

    std::vector<double> busy(spec.machine_count, 0.0);
    for (const auto& r : s.partial.records) busy[r.machine] += (std::min(r.end, s.clock) - r.start).to_double();
    const double elapsed = std::max(now, 1.0);
    for (int m = 0; m < spec.machine_count; ++m) {
      if (machine_degree[m] == 0) continue;
      const auto& ms = s.machines[m];
      const bool working = ms.busy();
      g.machines.ids.push_back(m);
      g.machines.features.push_back({static_cast<double>(machine_degree[m]), working ? ms.busy_until.to_double() : now,
                                     busy[m] / elapsed, working ? 1.0 : 0.0,
                                     working ? 0.0 : (s.clock - ms.idle_since).to_double(),
                                     working ? (ms.busy_until - s.clock).to_double() : 0.0});
    }

    double max_job = 0;
    for (int j = 0; j < spec.job_count(); ++j)
      if (!s.jobs[j].finished) max_job = std::max(max_job, s.estimates.job_end[j]);
    for (int j = 0; j < spec.job_count(); ++j) {
      if (s.jobs[j].finished) continue;
      const auto& combos = table.of(j);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < combos.size(); ++h)
        if (s.estimates.combination_end[j][h]) best = std::min(best, *s.estimates.combination_end[j][h]);
      for (std::size_t h = 0; h < combos.size(); ++h) {
        const auto& end = s.estimates.combination_end[j][h];
        if (!end) continue;
        const int cid = combination_id(j, static_cast<int>(h));
        g.combinations.ids.push_back(cid);
        g.combinations.features.push_back({*end, best > 0 ? *end / best : 1.0});
        g.comb_job.push_back({cid, j});
        for (int v : combos[h].ops)
          if (live(j, v)) g.op_comb.push_back({op_id({j, v}), cid});
      }
      g.jobs.ids.push_back(j);
      g.jobs.features.push_back({max_job > 0 ? s.estimates.job_end[j] / max_job : 1.0});
    }

    for (const auto& a : env_->pairs(s)) g.mask.push_back({op_id(a.op), a.machine});
    g.wait = env_->wait_legal(s);
    for (int j = 0; j < spec.job_count(); ++j)
      for (int v = 0; v < spec.jobs[j].size(); ++v) {
        if (!s.ops[j][v].ready) continue;
        for (const auto& m : spec.jobs[j].op(v).machines) {
          const IdPair p{op_id({j, v}), m.machine};
          if (std::find(g.mask.begin(), g.mask.end(), p) == g.mask.end()) g.future_pairs.push_back(p);
        }
      }
    return g;
  }

 private:
  const Environment* env_;
  std::vector<int> op_offset_;
  std::vector<int> comb_offset_;
  int op_count_ = 0;
  int comb_count_ = 0;
};

inline nlohmann::json node_set_to_json(const NodeSet& n) { return {{"ids", n.ids}, {"features", n.features}}; }

inline NodeSet node_set_from_json(const nlohmann::json& j) {
  return {j.at("ids").get<std::vector<int>>(), j.at("features").get<std::vector<std::vector<double>>>()};
}

inline nlohmann::json snapshot_nodes_json(const HeteroGraphSnapshot& g) {
  return {{"operation", node_set_to_json(g.operations)},
          {"machine", node_set_to_json(g.machines)},
          {"combination", node_set_to_json(g.combinations)},
          {"job", node_set_to_json(g.jobs)}};
}

inline nlohmann::json snapshot_edges_json(const HeteroGraphSnapshot& g) {
  return {{"op_op", g.op_op},
          {"op_comb", g.op_comb},
          {"comb_job", g.comb_job},
          {"op_machine", g.op_machine},
          {"op_machine_time", g.op_machine_time}};
}

inline void snapshot_from_json(const nlohmann::json& nodes, const nlohmann::json& edges, const nlohmann::json& mask,
                               const nlohmann::json& future, HeteroGraphSnapshot& g) {
  g.operations = node_set_from_json(nodes.at("operation"));
  g.machines = node_set_from_json(nodes.at("machine"));
  g.combinations = node_set_from_json(nodes.at("combination"));
  g.jobs = node_set_from_json(nodes.at("job"));
  g.op_op = edges.at("op_op").get<std::vector<IdPair>>();
  g.op_comb = edges.at("op_comb").get<std::vector<IdPair>>();
  g.comb_job = edges.at("comb_job").get<std::vector<IdPair>>();
  g.op_machine = edges.at("op_machine").get<std::vector<IdPair>>();
  g.op_machine_time = edges.at("op_machine_time").get<std::vector<double>>();
  g.mask = mask.at("pairs").get<std::vector<IdPair>>();
  g.wait = mask.at("wait").get<bool>();
  g.future_pairs = future.get<std::vector<IdPair>>();
}

}  // namespace ipps
