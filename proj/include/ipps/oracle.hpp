#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ipps/combination.hpp"
#include "ipps/env.hpp"
#include "ipps/instance.hpp"
#include "ipps/schedule.hpp"

namespace ipps {

class OracleLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleLimits {
  int max_ops = 8;  // regular ops over the whole instance
  int max_machines = 3;
  std::size_t max_combination_product = 16;
};

inline void check_oracle_limits(const InstanceSpec& spec, const CombinationTable& table, const OracleLimits& lim) {
  int ops = 0;
  for (const auto& j : spec.jobs) ops += j.regular_count();
  std::size_t product = 1;
  for (int j = 0; j < spec.job_count(); ++j) product *= table.of(j).size();
  if (ops > lim.max_ops) throw OracleLimitError(std::to_string(ops) + " operations exceed the oracle limit of " + std::to_string(lim.max_ops));
  if (spec.machine_count > lim.max_machines)
    throw OracleLimitError(std::to_string(spec.machine_count) + " machines exceed the oracle limit of " + std::to_string(lim.max_machines));
  if (product > lim.max_combination_product)
    throw OracleLimitError(std::to_string(product) + " combination choices exceed the oracle limit of " +
                           std::to_string(lim.max_combination_product));
}

struct OracleResult {
  Time makespan;
  Schedule schedule;
  std::vector<int> combinations;
  std::uint64_t nodes = 0;  // search nodes expanded
};

// Exact optimum in schedule space. For every combination choice, ops are
// appended one at a time to a chosen machine at the earliest time the job,
// the machine and the prerequisites allow. Every semi-active schedule is
// reachable this way. Partial states already seen with no worse resource
// times are skipped.
inline OracleResult brute_force_optimum(const InstanceSpec& spec, const CombinationTable& table, const OracleLimits& lim = {}) {
  check_oracle_limits(spec, table, lim);
  const int J = spec.job_count();
  OracleResult best;
  best.makespan = Time::max();

  std::vector<int> choice(J, 0);
  std::function<void(int)> over = [&](int j) {
    if (j < J) {
      for (int h = 0; h < static_cast<int>(table.of(j).size()); ++h) {
        choice[j] = h;
        over(j + 1);
      }
      return;
    }
    struct Item {
      OpRef ref;
      std::vector<int> prereqs;
    };
    std::vector<Item> items;
    for (int jj = 0; jj < J; ++jj) {
      const auto& job = spec.jobs[jj];
      const auto& c = table.of(jj)[choice[jj]];
      std::vector<int> index(job.size(), -1);
      for (int v : c.ops)
        if (job.op(v).kind == NodeKind::Regular) {
          index[v] = static_cast<int>(items.size());
          items.push_back({{jj, v}, {}});
        }
      for (auto& it : items)
        if (it.ref.job == jj)
          for (int u : regular_prerequisites(job, c.member, it.ref.op)) it.prereqs.push_back(index[u]);
    }
    const int n = static_cast<int>(items.size());
    std::vector<Time> end(n), machine_free(spec.machine_count), job_free(J);
    std::vector<bool> placed(n, false);
    std::vector<ScheduleRecord> recs;
    std::set<std::tuple<std::vector<bool>, std::vector<Time>, std::vector<Time>, std::vector<Time>>> seen;

    std::function<void(int, Time)> dfs = [&](int count, Time span) {
      ++best.nodes;
      if (span >= best.makespan) return;
      if (count == n) {
        best.makespan = span;
        best.schedule.records = recs;
        best.combinations = choice;
        return;
      }
      if (!seen.emplace(placed, machine_free, job_free, end).second) return;
      for (int i = 0; i < n; ++i) {
        if (placed[i]) continue;
        Time ready = job_free[items[i].ref.job];
        bool ok = true;
        for (int p : items[i].prereqs) {
          if (!placed[p]) ok = false;
          else ready = std::max(ready, end[p]);
        }
        if (!ok) continue;
        for (const auto& opt : spec.jobs[items[i].ref.job].op(items[i].ref.op).machines) {
          const Time s = std::max(ready, machine_free[opt.machine]);
          const Time e = s + opt.time;
          const Time saved_m = machine_free[opt.machine];
          const Time saved_j = job_free[items[i].ref.job];
          placed[i] = true;
          end[i] = e;
          machine_free[opt.machine] = e;
          job_free[items[i].ref.job] = e;
          recs.push_back({items[i].ref, opt.machine, s, e});
          dfs(count + 1, std::max(span, e));
          recs.pop_back();
          placed[i] = false;
          end[i] = Time{};
          machine_free[opt.machine] = saved_m;
          job_free[items[i].ref.job] = saved_j;
        }
      }
    };
    dfs(0, Time{});
  };
  over(0);
  best.schedule.sort_by_start();
  return best;
}

inline OracleResult brute_force_optimum(const InstanceSpec& spec, const OracleLimits& lim = {}) {
  return brute_force_optimum(spec, *CombinationTable::build(spec), lim);
}

struct EnvSearchResult {
  Time makespan;
  std::vector<Action> actions;  // one optimal trajectory
  std::uint64_t nodes = 0;
  std::uint64_t leaves = 0;  // complete trajectories reached
};

// Minimum makespan over every trajectory of the environment. Without Wait,
// Wait is taken only when no pair is offered. With prune=false every
// trajectory is walked to the end.
inline EnvSearchResult exhaustive_env_search(const Environment& env, bool allow_wait, bool prune = true,
                                             const std::vector<int>& preselect = {}) {
  EnvSearchResult best;
  best.makespan = Time::max();
  std::vector<Action> path;
  std::function<void(const EnvState&)> dfs = [&](const EnvState& s) {
    ++best.nodes;
    if (s.terminal) {
      ++best.leaves;
      const Time m = s.partial.makespan();
      if (m < best.makespan) {
        best.makespan = m;
        best.actions = path;
      }
      return;
    }
    if (prune && s.max_end_scheduled >= best.makespan) return;
    auto actions = allow_wait ? env.action_space(s) : env.pairs(s);
    if (actions.empty()) actions = env.action_space(s);
    for (const auto& a : actions) {
      EnvState next = s;
      env.step(next, a);
      path.push_back(a);
      dfs(next);
      path.pop_back();
    }
  };
  dfs(env.reset(preselect));
  return best;
}

// Moves every start back to the largest value in {0} and the set of end
// times that does not exceed it, in original start order. Starts never
// increase and resource order is kept, so the result stays feasible and no
// longer. Schedules whose starts are already 0 or some end are fixpoints.
inline Schedule canonicalize(const InstanceSpec& spec, const CombinationTable& table, const Schedule& sched) {
  const auto rep = validate_schedule(spec, table, sched);
  if (!rep.feasible) throw std::invalid_argument("canonicalize: schedule is infeasible: " + rep.violations.front().message);
  std::vector<std::size_t> order(sched.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = sched.records[a];
    const auto& y = sched.records[b];
    return std::tie(x.start, x.end) < std::tie(y.start, y.end);
  });
  std::map<std::pair<int, int>, Time> end_of;
  std::set<Time> ends{Time{}};
  std::vector<Time> machine_free(spec.machine_count), job_free(spec.job_count());
  Schedule out;
  for (std::size_t i : order) {
    const auto& r = sched.records[i];
    const auto& c = table.of(r.op.job)[rep.chosen_combination[r.op.job]];
    Time bound = std::max(machine_free[r.machine], job_free[r.op.job]);
    for (int u : regular_prerequisites(spec.jobs[r.op.job], c.member, r.op.op)) bound = std::max(bound, end_of.at({r.op.job, u}));
    // Every record ending by r.start has already been placed.
    const Time s = std::max(bound, *std::prev(ends.upper_bound(r.start)));
    const Time e = s + (r.end - r.start);
    end_of[{r.op.job, r.op.op}] = e;
    machine_free[r.machine] = e;
    job_free[r.op.job] = e;
    ends.insert(e);
    out.records.push_back({r.op, r.machine, s, e});
  }
  out.sort_by_start();
  return out;
}

// Condition every replayable schedule meets: each start is 0 or an end.
inline bool starts_on_events(const Schedule& sched) {
  std::set<Time> ends{Time{}};
  for (const auto& r : sched.records) ends.insert(r.end);
  return std::all_of(sched.records.begin(), sched.records.end(), [&](const ScheduleRecord& r) { return ends.count(r.start) > 0; });
}

struct ReplayResult {
  bool ok = false;
  std::string message;
  std::vector<Action> actions;
  Schedule schedule;  // as produced by the environment
};

// Drives the environment to reproduce a schedule: at each decision point the
// first record starting at the current clock is paired, otherwise Wait.
inline ReplayResult replay_schedule(const Environment& env, const Schedule& sched) {
  ReplayResult out;
  std::vector<const ScheduleRecord*> pending;
  for (const auto& r : sched.records) pending.push_back(&r);
  std::stable_sort(pending.begin(), pending.end(), [](const ScheduleRecord* a, const ScheduleRecord* b) {
    return std::tie(a->start, a->op) < std::tie(b->start, b->op);
  });
  EnvState s = env.reset();
  try {
    while (!s.terminal) {
      Action a = Action::wait();
      for (auto it = pending.begin(); it != pending.end(); ++it) {
        if ((*it)->start < s.clock) {
          out.message = "record for job " + std::to_string((*it)->op.job) + " op " + std::to_string((*it)->op.op) +
                        " starts at " + (*it)->start.str() + " but the clock is already " + s.clock.str();
          return out;
        }
        if ((*it)->start == s.clock && env.pair_legal(s, (*it)->op, (*it)->machine)) {
          a = Action::pair((*it)->op, (*it)->machine);
          pending.erase(it);
          break;
        }
      }
      if (a.is_wait() && !env.wait_legal(s)) {
        out.message = "stuck at t=" + s.clock.str() + ": no record can start and nothing is running";
        return out;
      }
      env.step(s, a);
      out.actions.push_back(a);
    }
  } catch (const std::exception& e) {
    out.message = e.what();
    return out;
  }
  out.schedule = s.partial;
  if (!pending.empty()) {
    out.message = std::to_string(pending.size()) + " records were never scheduled";
    return out;
  }
  Schedule want = sched, got = s.partial;
  want.sort_by_start();
  got.sort_by_start();
  out.ok = want == got;
  if (!out.ok) out.message = "environment produced a different schedule";
  return out;
}

}  // namespace ipps
