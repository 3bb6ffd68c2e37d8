#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipps/combination.hpp"
#include "ipps/instance.hpp"
#include "ipps/rng.hpp"
#include "ipps/schedule.hpp"

namespace ipps {

enum class OpRule { MWKR, MOR, FIFO, Muhammad };
enum class MachineRule { SPT, EET, LUM };

inline constexpr std::array<OpRule, 4> kOpRules{OpRule::MWKR, OpRule::MOR, OpRule::FIFO, OpRule::Muhammad};
inline constexpr std::array<MachineRule, 3> kMachineRules{MachineRule::SPT, MachineRule::EET, MachineRule::LUM};

inline const char* to_string(OpRule r) {
  switch (r) {
    case OpRule::MWKR: return "MWKR";
    case OpRule::MOR: return "MOR";
    case OpRule::FIFO: return "FIFO";
    case OpRule::Muhammad: return "Muhammad";
  }
  return "?";
}

inline const char* to_string(MachineRule r) {
  switch (r) {
    case MachineRule::SPT: return "SPT";
    case MachineRule::EET: return "EET";
    case MachineRule::LUM: return "LUM";
  }
  return "?";
}

inline OpRule parse_op_rule(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "MWKR") return OpRule::MWKR;
  if (s == "MOR") return OpRule::MOR;
  if (s == "FIFO") return OpRule::FIFO;
  if (s == "MUHAMMAD") return OpRule::Muhammad;
  throw std::invalid_argument("unknown operation rule '" + s + "'");
}

inline MachineRule parse_machine_rule(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "SPT") return MachineRule::SPT;
  if (s == "EET" || s == "EFT") return MachineRule::EET;
  if (s == "LUM") return MachineRule::LUM;
  throw std::invalid_argument("unknown machine rule '" + s + "'");
}

struct RuleConfig {
  OpRule op = OpRule::MWKR;
  MachineRule machine = MachineRule::SPT;
  int repeats = 1;
  std::uint64_t seed = 0;

  std::string name() const { return std::string(to_string(op)) + "-" + to_string(machine); }
};

// Muhammad's job weight from the ratio of a job's minimum machining time to
// the critical (largest) one.
inline int muhammad_weight(double tm, double tc) {
  if (tm >= 0.95 * tc) return 5;
  if (tm >= 0.85 * tc) return 4;
  if (tm >= 0.70 * tc) return 3;
  if (tm >= 0.50 * tc) return 2;
  return 1;
}

inline int select_combination(const std::vector<Combination>& combos, Rng& rng) {
  if (combos.empty()) throw std::logic_error("job without combinations");
  return static_cast<int>(uniform_index(rng, combos.size()));
}

// Machine choice for an op that can start no earlier than `ready`.
// SPT: shortest time; EET: earliest start, then shorter time; LUM: least
// assigned load. Remaining ties go to the lowest machine id.
inline MachineId pick_machine(MachineRule rule, const OperationNode& op, Time ready, const std::vector<Time>& machine_free,
                              const std::vector<Time>& load) {
  MachineId best = -1;
  auto key = [&](const MachineOption& m) {
    switch (rule) {
      case MachineRule::SPT: return std::tuple(m.time, Time{}, m.machine);
      case MachineRule::EET: return std::tuple(std::max(ready, machine_free[m.machine]), m.time, m.machine);
      case MachineRule::LUM: return std::tuple(load[m.machine], Time{}, m.machine);
    }
    return std::tuple(Time{}, Time{}, m.machine);
  };
  std::tuple<Time, Time, MachineId> best_key{};
  for (const auto& m : op.machines) {
    const auto k = key(m);
    if (best < 0 || k < best_key) {
      best = m.machine;
      best_key = k;
    }
  }
  return best;
}

struct GreedyRun {
  Schedule schedule;
  Time makespan;
  std::vector<int> combinations;  // chosen per job
};

// One dispatching pass over fixed combinations. Decisions happen at a clock
// t that moves to the next completion when nothing is dispatchable: an op is
// a candidate when its prerequisites have ended and its job is idle by t. The
// chosen op starts at max(t, chosen machine free).
inline GreedyRun greedy_pass(const InstanceSpec& spec, const CombinationTable& table, const std::vector<int>& choice,
                             OpRule op_rule, MachineRule machine_rule, Rng& rng) {
  struct Item {
    OpRef ref;
    std::vector<int> prereqs;
    Time min_time;
  };
  const int J = spec.job_count();
  std::vector<Item> items;
  std::vector<std::vector<int>> of_job(J);
  for (int j = 0; j < J; ++j) {
    const auto& job = spec.jobs[j];
    const auto& c = table.of(j)[choice[j]];
    std::vector<int> index(job.size(), -1);
    for (int v : c.ops)
      if (job.op(v).kind == NodeKind::Regular) {
        index[v] = static_cast<int>(items.size());
        of_job[j].push_back(index[v]);
        items.push_back({{j, v}, {}, job.op(v).min_time()});
      }
    for (int i : of_job[j])
      for (int u : regular_prerequisites(job, c.member, items[i].ref.op)) items[i].prereqs.push_back(index[u]);
  }

  std::vector<double> weight(J, 1.0);
  if (op_rule == OpRule::Muhammad) {
    std::vector<double> tm(J, 0.0);
    double tc = 0;
    for (int j = 0; j < J; ++j) {
      for (int i : of_job[j]) tm[j] += items[i].min_time.to_double();
      tc = std::max(tc, tm[j]);
    }
    for (int j = 0; j < J; ++j) weight[j] = muhammad_weight(tm[j], tc);
  }

  const std::size_t n = items.size();
  std::vector<bool> done(n, false);
  std::vector<Time> end(n), job_free(J), machine_free(spec.machine_count), load(spec.machine_count);
  std::vector<Time> work_left(J);
  std::vector<int> ops_left(J, 0);
  for (int j = 0; j < J; ++j)
    for (int i : of_job[j]) {
      work_left[j] = work_left[j] + items[i].min_time;
      ++ops_left[j];
    }

  GreedyRun run;
  run.combinations = choice;
  Time t;
  for (std::size_t placed = 0; placed < n; ++placed) {
    // Candidates and the time each became dispatchable, in (job, position) order.
    std::vector<int> cand;
    std::vector<Time> ready(n);
    while (true) {
      Time next = Time::max();
      for (int j = 0; j < J; ++j)
        for (int i : of_job[j]) {
          if (done[i]) continue;
          bool ok = true;
          Time r = job_free[j];
          for (int p : items[i].prereqs) {
            if (!done[p]) ok = false;
            else r = std::max(r, end[p]);
          }
          if (!ok) continue;
          ready[i] = r;
          if (r <= t) cand.push_back(i);
          else next = std::min(next, r);
        }
      if (!cand.empty()) break;
      t = next;
    }

    int pick = -1;
    switch (op_rule) {
      case OpRule::MWKR:
        for (int i : cand)
          if (pick < 0 || work_left[items[i].ref.job] > work_left[items[pick].ref.job]) pick = i;
        break;
      case OpRule::MOR:
        for (int i : cand)
          if (pick < 0 || ops_left[items[i].ref.job] > ops_left[items[pick].ref.job]) pick = i;
        break;
      case OpRule::FIFO:
        for (int i : cand)
          if (pick < 0 || ready[i] < ready[pick]) pick = i;
        break;
      case OpRule::Muhammad: {
        std::vector<int> jobs;
        std::vector<double> w;
        for (int i : cand)
          if (jobs.empty() || jobs.back() != items[i].ref.job) {
            jobs.push_back(items[i].ref.job);
            w.push_back(weight[items[i].ref.job]);
          }
        const int job = jobs[weighted_index(rng, w)];
        for (int i : cand)
          if (items[i].ref.job == job) {
            pick = i;
            break;
          }
        break;
      }
    }

    const auto& item = items[pick];
    const auto& node = spec.jobs[item.ref.job].op(item.ref.op);
    const MachineId m = pick_machine(machine_rule, node, t, machine_free, load);
    const Time p = *node.time_on(m);
    const Time start = std::max(t, machine_free[m]);
    done[pick] = true;
    end[pick] = start + p;
    machine_free[m] = end[pick];
    job_free[item.ref.job] = end[pick];
    load[m] = load[m] + p;
    work_left[item.ref.job] = work_left[item.ref.job] - item.min_time;
    --ops_left[item.ref.job];
    run.schedule.records.push_back({item.ref, m, start, end[pick]});
  }
  run.makespan = run.schedule.makespan();
  return run;
}

struct GreedyResult {
  GreedyRun best;
  int best_repeat = 0;
  std::vector<Time> makespans;  // per repeat
};

// Best of cfg.repeats passes; repeat r draws from stream r of cfg.seed.
inline GreedyResult solve_greedy(const InstanceSpec& spec, const CombinationTable& table, const RuleConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  GreedyResult out;
  for (int r = 0; r < cfg.repeats; ++r) {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r));
    std::vector<int> choice;
    for (int j = 0; j < spec.job_count(); ++j) choice.push_back(select_combination(table.of(j), rng));
    auto run = greedy_pass(spec, table, choice, cfg.op, cfg.machine, rng);
    out.makespans.push_back(run.makespan);
    if (r == 0 || run.makespan < out.best.makespan) {
      out.best = std::move(run);
      out.best_repeat = r;
    }
  }
  return out;
}

inline GreedyResult solve_greedy(const InstanceSpec& spec, const RuleConfig& cfg) {
  return solve_greedy(spec, *CombinationTable::build(spec), cfg);
}

struct RuleTableRow {
  std::vector<RuleConfig> rules;  // 12 cells, op-rule major
  std::vector<GreedyResult> results;
  Time best_choice;               // min over the cells
  int best_cell = 0;
};

inline RuleTableRow solve_all_rules(const InstanceSpec& spec, const CombinationTable& table, int repeats, std::uint64_t seed) {
  RuleTableRow row;
  for (auto o : kOpRules)
    for (auto m : kMachineRules) {
      RuleConfig cfg{o, m, repeats, seed};
      row.results.push_back(solve_greedy(spec, table, cfg));
      row.rules.push_back(cfg);
      const auto k = static_cast<int>(row.results.size()) - 1;
      if (k == 0 || row.results.back().best.makespan < row.best_choice) {
        row.best_choice = row.results.back().best.makespan;
        row.best_cell = k;
      }
    }
  return row;
}

}  // namespace ipps
