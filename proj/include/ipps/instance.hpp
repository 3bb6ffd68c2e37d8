#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ipps/time.hpp"

namespace ipps {

using MachineId = int;

// Start/End are the job's supernodes. Junction is a zero-time interior node
// that closes a nested sub-path in front of an existing join node.
enum class NodeKind { Start, End, Junction, Regular };
enum class LinkKind { And, Or };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Start: return "start";
    case NodeKind::End: return "end";
    case NodeKind::Junction: return "junction";
    case NodeKind::Regular: return "regular";
  }
  return "?";
}

inline const char* to_string(LinkKind k) { return k == LinkKind::And ? "AND" : "OR"; }

class InstanceError : public std::runtime_error {
 public:
  InstanceError(std::string invariant, const std::string& message)
      : std::runtime_error(message), invariant_(std::move(invariant)) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

struct MachineOption {
  MachineId machine = 0;
  Time time;
  friend bool operator==(const MachineOption&, const MachineOption&) = default;
};

struct OperationNode {
  int id = 0;
  NodeKind kind = NodeKind::Regular;
  std::vector<MachineOption> machines;

  bool zero_time() const { return kind != NodeKind::Regular; }

  std::optional<Time> time_on(MachineId m) const {
    for (const auto& opt : machines)
      if (opt.machine == m) return opt.time;
    return std::nullopt;
  }
  Time min_time() const {
    Time best = machines.empty() ? Time{} : machines.front().time;
    for (const auto& opt : machines) best = std::min(best, opt.time);
    return best;
  }
  Time max_time() const {
    Time best;
    for (const auto& opt : machines) best = std::max(best, opt.time);
    return best;
  }
  // Mean over machine options, rounded to the time grid.
  Time mean_time() const {
    if (machines.empty()) return Time{};
    std::int64_t sum = 0;
    for (const auto& opt : machines) sum += opt.time.milli();
    const auto n = static_cast<std::int64_t>(machines.size());
    return Time::from_milli((sum + n / 2) / n);
  }

  friend bool operator==(const OperationNode&, const OperationNode&) = default;
};

// Endpoints are positions in JobGraph::ops, not operation ids.
struct PrecedenceEdge {
  int from = 0;
  int to = 0;
  LinkKind kind = LinkKind::And;
  friend bool operator==(const PrecedenceEdge&, const PrecedenceEdge&) = default;
};

// A job's AND/OR precedence graph. Immutable after construction; the
// constructor checks every structural invariant and throws InstanceError.
class JobGraph {
 public:
  JobGraph() : JobGraph(default_ops(), {PrecedenceEdge{0, 1, LinkKind::And}}) {}

  JobGraph(std::vector<OperationNode> ops, std::vector<PrecedenceEdge> edges)
      : ops_(std::move(ops)), edges_(std::move(edges)) {
    build();
  }

  const std::vector<OperationNode>& ops() const { return ops_; }
  const std::vector<PrecedenceEdge>& edges() const { return edges_; }
  const OperationNode& op(int pos) const { return ops_[static_cast<std::size_t>(pos)]; }
  int size() const { return static_cast<int>(ops_.size()); }

  int start() const { return start_; }
  int end() const { return end_; }

  // Edge indices.
  const std::vector<int>& in_edges(int v) const { return in_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& out_edges(int v) const { return out_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& predecessors(int v) const { return preds_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& successors(int v) const { return succs_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& topological_order() const { return topo_; }

  bool is_or_connector(int v) const {
    for (int e : out_edges(v))
      if (edges_[static_cast<std::size_t>(e)].kind == LinkKind::Or) return true;
    return false;
  }

  std::optional<int> position_of(int id) const {
    for (int i = 0; i < size(); ++i)
      if (ops_[static_cast<std::size_t>(i)].id == id) return i;
    return std::nullopt;
  }

  int regular_count() const {
    int n = 0;
    for (const auto& o : ops_) n += o.kind == NodeKind::Regular;
    return n;
  }

  // Nodes reachable from v (v included).
  std::vector<bool> reachable_from(int v) const {
    std::vector<bool> seen(ops_.size(), false);
    std::vector<int> stack{v};
    seen[static_cast<std::size_t>(v)] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int w : successors(u))
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          stack.push_back(w);
        }
    }
    return seen;
  }

  friend bool operator==(const JobGraph& a, const JobGraph& b) { return a.ops_ == b.ops_ && a.edges_ == b.edges_; }

 private:
  static std::vector<OperationNode> default_ops() {
    return {OperationNode{0, NodeKind::Start, {}}, OperationNode{1, NodeKind::End, {}}};
  }

  [[noreturn]] void fail(const std::string& invariant, const std::string& what, int pos = -1) const {
    std::string msg = what;
    if (pos >= 0) msg += " (node id " + std::to_string(ops_[static_cast<std::size_t>(pos)].id) + ")";
    throw InstanceError(invariant, msg);
  }

  void build();
  void check_or_scoping() const;

  std::vector<OperationNode> ops_;
  std::vector<PrecedenceEdge> edges_;
  int start_ = -1;
  int end_ = -1;
  std::vector<std::vector<int>> in_, out_, preds_, succs_;
  std::vector<int> topo_;
};

inline void JobGraph::build() {
  const int n = size();
  in_.assign(ops_.size(), {});
  out_.assign(ops_.size(), {});
  preds_.assign(ops_.size(), {});
  succs_.assign(ops_.size(), {});

  std::map<int, int> ids;
  for (int i = 0; i < n; ++i) {
    const auto& o = ops_[static_cast<std::size_t>(i)];
    if (!ids.emplace(o.id, i).second) fail("unique-op-id", "duplicate operation id", i);
    if (o.kind == NodeKind::Start) {
      if (start_ >= 0) fail("unique-start", "more than one start supernode", i);
      start_ = i;
    } else if (o.kind == NodeKind::End) {
      if (end_ >= 0) fail("unique-end", "more than one end supernode", i);
      end_ = i;
    }
    if (o.zero_time()) {
      for (const auto& m : o.machines)
        if (m.time != Time{}) fail("supernode-zero-time", "zero-time node with non-zero processing time", i);
    } else {
      if (o.machines.empty()) fail("machine-options", "regular operation without machine options", i);
      for (std::size_t a = 0; a < o.machines.size(); ++a) {
        if (o.machines[a].time <= Time{}) fail("positive-time", "processing time must be positive", i);
        if (o.machines[a].machine < 0) fail("machine-id", "negative machine id", i);
        for (std::size_t b = 0; b < a; ++b)
          if (o.machines[a].machine == o.machines[b].machine)
            fail("machine-options", "machine listed twice for one operation", i);
      }
    }
  }
  if (start_ < 0) fail("unique-start", "job has no start supernode");
  if (end_ < 0) fail("unique-end", "job has no end supernode");

  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const auto& ed = edges_[static_cast<std::size_t>(e)];
    if (ed.from < 0 || ed.from >= n || ed.to < 0 || ed.to >= n)
      fail("edge-endpoints", "edge references an unknown operation");
    if (ed.from == ed.to) fail("acyclic", "self loop", ed.from);
    for (int s : succs_[static_cast<std::size_t>(ed.from)])
      if (s == ed.to) fail("unique-edge", "duplicate edge", ed.from);
    out_[static_cast<std::size_t>(ed.from)].push_back(e);
    in_[static_cast<std::size_t>(ed.to)].push_back(e);
    succs_[static_cast<std::size_t>(ed.from)].push_back(ed.to);
    preds_[static_cast<std::size_t>(ed.to)].push_back(ed.from);
  }
  if (!in_[static_cast<std::size_t>(start_)].empty()) fail("start-in-degree", "start supernode has incoming edges", start_);
  if (!out_[static_cast<std::size_t>(end_)].empty()) fail("end-out-degree", "end supernode has outgoing edges", end_);

  // Kahn's algorithm; ties by position for a deterministic order.
  std::vector<int> indeg(ops_.size());
  for (int v = 0; v < n; ++v) indeg[static_cast<std::size_t>(v)] = static_cast<int>(preds_[static_cast<std::size_t>(v)].size());
  std::vector<int> ready;
  for (int v = n - 1; v >= 0; --v)
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    int v = ready.back();
    ready.pop_back();
    topo_.push_back(v);
    for (int w : succs_[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
  }
  if (static_cast<int>(topo_.size()) != n) fail("acyclic", "precedence graph contains a cycle");

  const auto from_start = reachable_from(start_);
  std::vector<bool> to_end(ops_.size(), false);
  to_end[static_cast<std::size_t>(end_)] = true;
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it)
    for (int w : succs_[static_cast<std::size_t>(*it)])
      if (to_end[static_cast<std::size_t>(w)]) to_end[static_cast<std::size_t>(*it)] = true;
  for (int v = 0; v < n; ++v)
    if (!from_start[static_cast<std::size_t>(v)] || !to_end[static_cast<std::size_t>(v)])
      fail("start-end-path", "node not on any start-to-end path", v);

  for (int v = 0; v < n; ++v) {
    int or_out = 0;
    for (int e : out_[static_cast<std::size_t>(v)]) or_out += edges_[static_cast<std::size_t>(e)].kind == LinkKind::Or;
    if (or_out == 1) fail("or-connector-branches", "OR-connector with <2 branches", v);
  }
  check_or_scoping();
}

// Every OR branch must own at least its head node, the head must be a regular
// operation, and no edge may cross between a branch interior and the rest of
// the graph except into nodes every branch reaches (the merge region).
inline void JobGraph::check_or_scoping() const {
  const int n = size();
  for (int c = 0; c < n; ++c) {
    std::vector<int> heads;
    for (int e : out_[static_cast<std::size_t>(c)])
      if (edges_[static_cast<std::size_t>(e)].kind == LinkKind::Or) heads.push_back(edges_[static_cast<std::size_t>(e)].to);
    if (heads.empty()) continue;

    std::vector<std::vector<bool>> reach;
    for (int h : heads) reach.push_back(reachable_from(h));
    for (std::size_t j = 0; j < heads.size(); ++j) {
      auto exclusive = [&](int v) {
        if (!reach[j][static_cast<std::size_t>(v)]) return false;
        for (std::size_t l = 0; l < heads.size(); ++l)
          if (l != j && reach[l][static_cast<std::size_t>(v)]) return false;
        return true;
      };
      auto common = [&](int v) {
        for (const auto& r : reach)
          if (!r[static_cast<std::size_t>(v)]) return false;
        return true;
      };
      if (!exclusive(heads[j])) fail("or-branch-exclusive", "OR branch without operations of its own", c);
      if (op(heads[j]).kind != NodeKind::Regular) fail("or-branch-exclusive", "OR branch must start with a regular operation", heads[j]);
      for (int v = 0; v < n; ++v) {
        if (!exclusive(v)) continue;
        for (int u : preds_[static_cast<std::size_t>(v)])
          if (!exclusive(u) && !(u == c && v == heads[j]))
            fail("main-sub-link", "link from outside an OR sub-path into its interior", v);
        for (int w : succs_[static_cast<std::size_t>(v)])
          if (!exclusive(w) && !common(w)) fail("sub-main-link", "link from an OR sub-path to a node outside its merge region", v);
      }
    }
  }
}

struct InstanceSpec {
  std::string name;
  int machine_count = 0;
  std::vector<JobGraph> jobs;

  int job_count() const { return static_cast<int>(jobs.size()); }

  void validate() const {
    if (machine_count < 0) throw InstanceError("machine-count", "negative machine count");
    for (std::size_t j = 0; j < jobs.size(); ++j)
      for (const auto& o : jobs[j].ops())
        for (const auto& m : o.machines)
          if (m.machine >= machine_count)
            throw InstanceError("machine-id", "job " + std::to_string(j) + " op " + std::to_string(o.id) +
                                                  " references machine " + std::to_string(m.machine) +
                                                  " >= machine count " + std::to_string(machine_count));
  }

  friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

// Adds a start and/or end supernode when a job description lacks them.
// Synthesized ids continue after the largest existing id.
inline void synthesize_supernodes(std::vector<OperationNode>& ops, std::vector<PrecedenceEdge>& edges) {
  const bool has_start = std::any_of(ops.begin(), ops.end(), [](const auto& o) { return o.kind == NodeKind::Start; });
  const bool has_end = std::any_of(ops.begin(), ops.end(), [](const auto& o) { return o.kind == NodeKind::End; });
  if (has_start && has_end) return;
  int next_id = 0;
  for (const auto& o : ops) next_id = std::max(next_id, o.id + 1);
  const int n = static_cast<int>(ops.size());
  std::vector<int> indeg(ops.size(), 0), outdeg(ops.size(), 0);
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) continue;
    ++outdeg[static_cast<std::size_t>(e.from)];
    ++indeg[static_cast<std::size_t>(e.to)];
  }
  if (!has_start) {
    const int s = static_cast<int>(ops.size());
    ops.push_back(OperationNode{next_id++, NodeKind::Start, {}});
    for (int v = 0; v < n; ++v)
      if (indeg[static_cast<std::size_t>(v)] == 0) edges.push_back({s, v, LinkKind::And});
  }
  if (!has_end) {
    const int t = static_cast<int>(ops.size());
    ops.push_back(OperationNode{next_id++, NodeKind::End, {}});
    for (int v = 0; v < n; ++v)
      if (outdeg[static_cast<std::size_t>(v)] == 0) edges.push_back({v, t, LinkKind::And});
    if (!has_start && n == 0) edges.push_back({t - 1, t, LinkKind::And});
  }
}

// Reference to an operation of an instance: job index and position in the
// job's op list.
struct OpRef {
  int job = 0;
  int op = 0;
  friend auto operator<=>(const OpRef&, const OpRef&) = default;
};

}  // namespace ipps
