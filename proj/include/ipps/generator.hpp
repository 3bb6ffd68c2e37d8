#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipps/instance.hpp"
#include "ipps/rng.hpp"

namespace ipps {

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool valid() const { return lo <= hi; }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct GenConfig {
  IntRange main_ops{3, 6};        // regular ops on the main path
  int max_out_degree = 2;         // main-path DAG
  double skip_probability = 0.3;  // extra forward AND edge per main node
  IntRange or_connectors{1, 3};
  IntRange or_branches{2, 3};     // sub-paths per connector
  IntRange sub_path_ops{1, 3};
  double and_path_probability = 0.3;  // per sub-path
  IntRange total_ops{4, 20};
  int machines = 5;
  IntRange time{1, 99};
  double machine_probability = 0.3;
  int jobs = 4;
  int retry_budget = 100;

  void validate() const {
    for (const auto* r : {&main_ops, &or_connectors, &or_branches, &sub_path_ops, &total_ops, &time})
      if (!r->valid()) throw std::invalid_argument("generator: empty range");
    if (main_ops.lo < 1) throw std::invalid_argument("generator: main path needs at least one operation");
    if (or_connectors.lo < 0) throw std::invalid_argument("generator: negative OR-connector count");
    if (or_branches.lo < 2) throw std::invalid_argument("generator: an OR-connector needs at least two branches");
    if (sub_path_ops.lo < 1) throw std::invalid_argument("generator: sub-paths need at least one operation");
    if (time.lo < 1) throw std::invalid_argument("generator: processing times must be positive");
    if (max_out_degree < 1) throw std::invalid_argument("generator: max out-degree must be >= 1");
    if (!(machine_probability > 0 && machine_probability <= 1)) throw std::invalid_argument("generator: machine probability must be in (0,1]");
    for (double p : {skip_probability, and_path_probability})
      if (p < 0 || p > 1) throw std::invalid_argument("generator: probability outside [0,1]");
    if (machines < 1) throw std::invalid_argument("generator: need at least one machine");
    if (jobs < 0) throw std::invalid_argument("generator: negative job count");
    if (retry_budget < 1) throw std::invalid_argument("generator: retry budget must be >= 1");
  }

  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

inline nlohmann::ordered_json gen_config_to_json(const GenConfig& c) {
  auto r = [](const IntRange& x) { return nlohmann::ordered_json::array({x.lo, x.hi}); };
  return {{"main_ops", r(c.main_ops)},
          {"max_out_degree", c.max_out_degree},
          {"skip_probability", c.skip_probability},
          {"or_connectors", r(c.or_connectors)},
          {"or_branches", r(c.or_branches)},
          {"sub_path_ops", r(c.sub_path_ops)},
          {"and_path_probability", c.and_path_probability},
          {"total_ops", r(c.total_ops)},
          {"machines", c.machines},
          {"time", r(c.time)},
          {"machine_probability", c.machine_probability},
          {"jobs", c.jobs},
          {"retry_budget", c.retry_budget}};
}

// Missing keys keep their defaults.
inline GenConfig gen_config_from_json(const nlohmann::json& j) {
  GenConfig c;
  auto range = [&](const char* k, IntRange& out) {
    if (!j.contains(k)) return;
    const auto& v = j[k];
    if (!v.is_array() || v.size() != 2) throw std::invalid_argument(std::string("generator config: ") + k + " must be [lo, hi]");
    out = {v[0].get<int>(), v[1].get<int>()};
  };
  auto num = [&](const char* k, auto& out) {
    if (j.contains(k)) out = j[k].get<std::decay_t<decltype(out)>>();
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const char* known[] = {"main_ops", "max_out_degree", "skip_probability", "or_connectors", "or_branches",
                                  "sub_path_ops", "and_path_probability", "total_ops", "machines", "time",
                                  "machine_probability", "jobs", "retry_budget"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }))
      throw std::invalid_argument("generator config: unknown key '" + it.key() + "'");
  }
  range("main_ops", c.main_ops);
  num("max_out_degree", c.max_out_degree);
  num("skip_probability", c.skip_probability);
  range("or_connectors", c.or_connectors);
  range("or_branches", c.or_branches);
  range("sub_path_ops", c.sub_path_ops);
  num("and_path_probability", c.and_path_probability);
  range("total_ops", c.total_ops);
  num("machines", c.machines);
  range("time", c.time);
  num("machine_probability", c.machine_probability);
  num("jobs", c.jobs);
  num("retry_budget", c.retry_budget);
  c.validate();
  return c;
}

class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Mutable job skeleton used while generating. region 0 is the main path;
// every sub-path gets its own region id.
struct Skeleton {
  std::vector<NodeKind> kind;
  std::vector<int> region;
  std::vector<PrecedenceEdge> edges;

  int add(NodeKind k, int r) {
    kind.push_back(k);
    region.push_back(r);
    return static_cast<int>(kind.size()) - 1;
  }
  int in_degree(int v) const {
    return static_cast<int>(std::count_if(edges.begin(), edges.end(), [&](const auto& e) { return e.to == v; }));
  }
  int out_degree(int v) const {
    return static_cast<int>(std::count_if(edges.begin(), edges.end(), [&](const auto& e) { return e.from == v; }));
  }
  bool has_or_out(int v) const {
    return std::any_of(edges.begin(), edges.end(), [&](const auto& e) { return e.from == v && e.kind == LinkKind::Or; });
  }
  bool has_edge(int a, int b) const {
    return std::any_of(edges.begin(), edges.end(), [&](const auto& e) { return e.from == a && e.to == b; });
  }
  int regular_count() const { return static_cast<int>(std::count(kind.begin(), kind.end(), NodeKind::Regular)); }
};

inline int draw(Rng& rng, IntRange r) { return static_cast<int>(uniform_int(rng, r.lo, r.hi)); }

// Replaces edge (u, v) by `branches` alternative OR sub-paths from u to v.
// When v already merges several paths the sub-paths meet in a new junction
// first. Returns the new region ids.
inline std::vector<int> insert_or_paths(Skeleton& s, std::size_t edge, int branches, const GenConfig& cfg, Rng& rng,
                                        int& next_region) {
  const int u = s.edges[edge].from;
  int v = s.edges[edge].to;
  s.edges.erase(s.edges.begin() + static_cast<std::ptrdiff_t>(edge));
  if (s.in_degree(v) >= 1) {
    const int j = s.add(NodeKind::Junction, s.region[u] == s.region[v] ? s.region[v] : s.region[u]);
    s.edges.push_back({j, v, LinkKind::And});
    v = j;
  }
  std::vector<int> regions;
  for (int b = 0; b < branches; ++b) {
    const int r = next_region++;
    regions.push_back(r);
    int prev = u;
    const int k = draw(rng, cfg.sub_path_ops);
    for (int i = 0; i < k; ++i) {
      const int x = s.add(NodeKind::Regular, r);
      s.edges.push_back({prev, x, i == 0 ? LinkKind::Or : LinkKind::And});
      prev = x;
    }
    s.edges.push_back({prev, v, LinkKind::And});
  }
  return regions;
}

// Adds a parallel AND path a -> q1 .. qk -> b next to an AND edge (a, b)
// whose source lies in `region`.
inline void insert_and_path(Skeleton& s, int region, const GenConfig& cfg, Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t e = 0; e < s.edges.size(); ++e)
    if (s.edges[e].kind == LinkKind::And && s.region[s.edges[e].from] == region && s.kind[s.edges[e].from] == NodeKind::Regular)
      eligible.push_back(e);
  if (eligible.empty()) return;
  const auto ed = s.edges[eligible[uniform_index(rng, eligible.size())]];
  int prev = ed.from;
  const int k = draw(rng, cfg.sub_path_ops);
  for (int i = 0; i < k; ++i) {
    const int x = s.add(NodeKind::Regular, region);
    s.edges.push_back({prev, x, LinkKind::And});
    prev = x;
  }
  s.edges.push_back({prev, ed.to, LinkKind::And});
}

inline Skeleton generate_skeleton(const GenConfig& cfg, Rng& rng) {
  Skeleton s;
  const int start = s.add(NodeKind::Start, 0);
  std::vector<int> main{start};
  const int n = draw(rng, cfg.main_ops);
  for (int i = 0; i < n; ++i) main.push_back(s.add(NodeKind::Regular, 0));
  const int end = s.add(NodeKind::End, 0);
  main.push_back(end);
  for (std::size_t i = 0; i + 1 < main.size(); ++i) s.edges.push_back({main[i], main[i + 1], LinkKind::And});
  // Forward skip edges turn the chain into a DAG.
  for (std::size_t i = 1; i + 2 < main.size(); ++i) {
    if (s.out_degree(main[i]) >= cfg.max_out_degree || !bernoulli(rng, cfg.skip_probability)) continue;
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i + 2), static_cast<std::int64_t>(main.size() - 1)));
    if (!s.has_edge(main[i], main[j])) s.edges.push_back({main[i], main[j], LinkKind::And});
  }

  int next_region = 1;
  const int connectors = draw(rng, cfg.or_connectors);
  for (int c = 0; c < connectors; ++c) {
    // AND edges whose source is not yet an OR-connector.
    std::vector<std::size_t> eligible;
    for (std::size_t e = 0; e < s.edges.size(); ++e)
      if (s.edges[e].kind == LinkKind::And && !s.has_or_out(s.edges[e].from)) eligible.push_back(e);
    if (eligible.empty()) break;
    const auto e = eligible[uniform_index(rng, eligible.size())];
    const auto regions = insert_or_paths(s, e, draw(rng, cfg.or_branches), cfg, rng, next_region);
    for (int r : regions)
      if (bernoulli(rng, cfg.and_path_probability)) insert_and_path(s, r, cfg, rng);
  }
  return s;
}

// Renumbers nodes in topological order: start gets id 0, regular ops and
// junctions follow, end gets the last id.
inline JobGraph skeleton_to_job(const Skeleton& s) {
  const int n = static_cast<int>(s.kind.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> succ(n);
  for (const auto& e : s.edges) {
    ++indeg[e.to];
    succ[e.from].push_back(e.to);
  }
  std::vector<int> order, ready;
  for (int v = n - 1; v >= 0; --v)
    if (indeg[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    const int v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (int w : succ[v])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  std::vector<OperationNode> ops(n);
  for (int v = 0; v < n; ++v) ops[pos[v]] = OperationNode{pos[v], s.kind[v], {}};
  // Placeholder option so the regular-op invariant holds until machines are assigned.
  for (auto& o : ops)
    if (o.kind == NodeKind::Regular) o.machines.push_back({0, Time::units(1)});
  std::vector<PrecedenceEdge> edges;
  for (const auto& e : s.edges) edges.push_back({pos[e.from], pos[e.to], e.kind});
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
  return JobGraph(std::move(ops), std::move(edges));
}

}  // namespace detail

// Structure only: every regular op carries a placeholder option.
inline JobGraph generate_job_structure(const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int attempt = 0; attempt < cfg.retry_budget; ++attempt) {
    const auto s = detail::generate_skeleton(cfg, rng);
    const int count = s.regular_count();
    if (count < cfg.total_ops.lo || count > cfg.total_ops.hi) continue;
    return detail::skeleton_to_job(s);
  }
  throw GeneratorError("generator: no job met the total-operation range within " + std::to_string(cfg.retry_budget) + " attempts");
}

// Each machine is offered to each regular op independently; an op that
// draws none gets one machine uniformly.
inline JobGraph assign_machines(const JobGraph& job, const GenConfig& cfg, Rng& rng) {
  std::vector<OperationNode> ops = job.ops();
  for (auto& o : ops) {
    if (o.kind != NodeKind::Regular) continue;
    o.machines.clear();
    for (int m = 0; m < cfg.machines; ++m)
      if (bernoulli(rng, cfg.machine_probability)) o.machines.push_back({m, Time::units(detail::draw(rng, cfg.time))});
    if (o.machines.empty())
      o.machines.push_back({static_cast<MachineId>(uniform_index(rng, static_cast<std::uint64_t>(cfg.machines))), Time::units(detail::draw(rng, cfg.time))});
  }
  return JobGraph(std::move(ops), job.edges());
}

inline JobGraph generate_job(const GenConfig& cfg, Rng& rng) { return assign_machines(generate_job_structure(cfg, rng), cfg, rng); }

// Job j is drawn from stream j of the seed, so jobs are independent of each
// other and of the job count.
inline InstanceSpec generate_instance(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  InstanceSpec spec;
  spec.name = "gen-" + std::to_string(cfg.jobs) + "x" + std::to_string(cfg.machines) + "-" + std::to_string(seed);
  spec.machine_count = cfg.machines;
  for (int j = 0; j < cfg.jobs; ++j) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(j));
    spec.jobs.push_back(generate_job(cfg, rng));
  }
  spec.validate();
  return spec;
}

// Small instances for exact search: two jobs of at most four regular ops on
// two machines, so at most eight ops and four combination choices.
inline GenConfig tiny_gen_config() {
  GenConfig c;
  c.main_ops = {1, 3};
  c.or_connectors = {0, 1};
  c.or_branches = {2, 2};
  c.sub_path_ops = {1, 1};
  c.and_path_probability = 0.2;
  c.total_ops = {1, 4};
  c.machines = 2;
  c.time = {1, 9};
  c.machine_probability = 0.5;
  c.jobs = 2;
  return c;
}

}  // namespace ipps
