#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipps/instance.hpp"

namespace ipps {

// One full assignment of OR choices of a job, reduced to the set of
// operations it makes indispensable.
struct Combination {
  int job = 0;
  std::vector<int> ops;         // sorted op positions
  std::vector<bool> member;     // indexed by op position
  std::map<int, int> or_choices;  // connector position -> chosen edge index

  bool contains(int pos) const { return member[static_cast<std::size_t>(pos)]; }
};

class CombinationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kCombinationCap = 10000;

// All distinct combinations of a job. OR-connectors are only branched on once
// they are reached, so connectors inside unchosen branches never multiply the
// count. Combinations with identical op sets collapse into one.
inline std::vector<Combination> enumerate_combinations(const JobGraph& job, int job_id = 0,
                                                       std::size_t cap = kCombinationCap) {
  const auto& topo = job.topological_order();
  const auto n = static_cast<std::size_t>(job.size());
  std::vector<Combination> out;
  std::set<std::vector<bool>> seen;
  std::size_t assignments = 0;

  std::vector<bool> included(n, false);
  std::map<int, int> choices;
  included[static_cast<std::size_t>(job.start())] = true;

  // Recursion over topological positions; `included` is restored on return.
  auto recurse = [&](auto&& self, std::size_t idx) -> void {
    while (idx < topo.size() && !included[static_cast<std::size_t>(topo[idx])]) ++idx;
    if (idx == topo.size()) {
      if (++assignments > cap * 16) throw CombinationLimitError("OR-choice assignments exceed the enumeration budget");
      if (seen.insert(included).second) {
        if (seen.size() > cap)
          throw CombinationLimitError("job " + std::to_string(job_id) + " has more than " + std::to_string(cap) + " combinations");
        Combination c;
        c.job = job_id;
        c.member = included;
        for (std::size_t v = 0; v < n; ++v)
          if (included[v]) c.ops.push_back(static_cast<int>(v));
        c.or_choices = choices;
        out.push_back(std::move(c));
      }
      return;
    }
    const int v = topo[idx];
    std::vector<int> newly;
    std::vector<int> or_edges;
    for (int e : job.out_edges(v)) {
      const auto& ed = job.edges()[static_cast<std::size_t>(e)];
      if (ed.kind == LinkKind::Or) {
        or_edges.push_back(e);
      } else if (!included[static_cast<std::size_t>(ed.to)]) {
        included[static_cast<std::size_t>(ed.to)] = true;
        newly.push_back(ed.to);
      }
    }
    if (or_edges.empty()) {
      self(self, idx + 1);
    } else {
      for (int e : or_edges) {
        const int to = job.edges()[static_cast<std::size_t>(e)].to;
        const bool was = included[static_cast<std::size_t>(to)];
        included[static_cast<std::size_t>(to)] = true;
        choices[v] = e;
        self(self, idx + 1);
        choices.erase(v);
        included[static_cast<std::size_t>(to)] = was;
      }
    }
    for (int w : newly) included[static_cast<std::size_t>(w)] = false;
  };
  recurse(recurse, 0);
  return out;
}

// Combinations of every job of an instance; shared read-only between
// environments.
struct CombinationTable {
  std::vector<std::vector<Combination>> per_job;

  static std::shared_ptr<const CombinationTable> build(const InstanceSpec& spec, std::size_t cap = kCombinationCap) {
    auto t = std::make_shared<CombinationTable>();
    for (int j = 0; j < spec.job_count(); ++j) t->per_job.push_back(enumerate_combinations(spec.jobs[static_cast<std::size_t>(j)], j, cap));
    return t;
  }

  const std::vector<Combination>& of(int job) const { return per_job[static_cast<std::size_t>(job)]; }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : per_job) n += c.size();
    return n;
  }
};

// The eligible-combination set: per job, which combinations survive given
// the operations scheduled so far.
class EligibleSet {
 public:
  EligibleSet() = default;
  explicit EligibleSet(std::shared_ptr<const CombinationTable> table) : table_(std::move(table)) {
    for (const auto& combos : table_->per_job) alive_.emplace_back(combos.size(), true);
  }

  const CombinationTable& table() const { return *table_; }
  const std::shared_ptr<const CombinationTable>& table_ptr() const { return table_; }
  int job_count() const { return static_cast<int>(alive_.size()); }

  bool alive(int job, int h) const { return alive_[static_cast<std::size_t>(job)][static_cast<std::size_t>(h)]; }
  int alive_count(int job) const {
    return static_cast<int>(std::count(alive_[static_cast<std::size_t>(job)].begin(), alive_[static_cast<std::size_t>(job)].end(), true));
  }
  std::vector<int> alive_ids(int job) const {
    std::vector<int> ids;
    const auto& a = alive_[static_cast<std::size_t>(job)];
    for (std::size_t h = 0; h < a.size(); ++h)
      if (a[h]) ids.push_back(static_cast<int>(h));
    return ids;
  }

  // Drops every combination of op.job that does not contain op.op. Returns
  // the ids removed. Throws if nothing would survive.
  std::vector<int> prune(OpRef op) {
    auto& a = alive_[static_cast<std::size_t>(op.job)];
    const auto& combos = table_->of(op.job);
    bool any = false;
    for (std::size_t h = 0; h < a.size(); ++h) any = any || (a[h] && combos[h].contains(op.op));
    if (!any)
      throw std::logic_error("prune_eligible: operation " + std::to_string(op.op) + " of job " + std::to_string(op.job) +
                             " is in no surviving combination");
    std::vector<int> removed;
    for (std::size_t h = 0; h < a.size(); ++h)
      if (a[h] && !combos[h].contains(op.op)) {
        a[h] = false;
        removed.push_back(static_cast<int>(h));
      }
    return removed;
  }

  // Keeps only combination h of job (used for pre-selected routes).
  void restrict_to(int job, int h) {
    auto& a = alive_[static_cast<std::size_t>(job)];
    if (!a[static_cast<std::size_t>(h)]) throw std::logic_error("restrict_to: combination already pruned");
    std::fill(a.begin(), a.end(), false);
    a[static_cast<std::size_t>(h)] = true;
  }

  // Union of the surviving combinations' ops, per job, indexed by op position.
  std::vector<bool> in_play(int job) const {
    const auto& combos = table_->of(job);
    std::vector<bool> mask(combos.empty() ? 0 : combos.front().member.size(), false);
    const auto& a = alive_[static_cast<std::size_t>(job)];
    for (std::size_t h = 0; h < a.size(); ++h)
      if (a[h])
        for (int v : combos[h].ops) mask[static_cast<std::size_t>(v)] = true;
    return mask;
  }

  // Set inclusion per job.
  bool subset_of(const EligibleSet& other) const {
    for (std::size_t j = 0; j < alive_.size(); ++j)
      for (std::size_t h = 0; h < alive_[j].size(); ++h)
        if (alive_[j][h] && !other.alive_[j][h]) return false;
    return true;
  }

  friend bool operator==(const EligibleSet& a, const EligibleSet& b) { return a.alive_ == b.alive_; }

 private:
  std::shared_ptr<const CombinationTable> table_;
  std::vector<std::vector<bool>> alive_;
};

inline EligibleSet prune_eligible(EligibleSet es, OpRef scheduled) {
  es.prune(scheduled);
  return es;
}

inline std::vector<OpRef> operations_in_play(const EligibleSet& es) {
  std::vector<OpRef> out;
  for (int j = 0; j < es.job_count(); ++j) {
    const auto mask = es.in_play(j);
    for (std::size_t v = 0; v < mask.size(); ++v)
      if (mask[v]) out.push_back({j, static_cast<int>(v)});
  }
  return out;
}

}  // namespace ipps
