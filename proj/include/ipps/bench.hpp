#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ipps/combination.hpp"
#include "ipps/env.hpp"
#include "ipps/greedy.hpp"
#include "ipps/instance.hpp"
#include "ipps/oracle.hpp"
#include "ipps/schedule.hpp"

namespace ipps {

struct BenchInstance {
  std::string name;
  InstanceSpec spec;
  std::optional<Time> lower_bound;
};

enum class GapReference { Auto, Oracle, LowerBound, None };

inline GapReference parse_gap_reference(const std::string& s) {
  if (s == "auto") return GapReference::Auto;
  if (s == "oracle") return GapReference::Oracle;
  if (s == "lb") return GapReference::LowerBound;
  if (s == "none") return GapReference::None;
  throw std::invalid_argument("unknown gap reference '" + s + "' (auto|oracle|lb|none)");
}

// Methods: greedy:<OP>-<MACHINE>, greedy:all (twelve cells plus best-choice
// and best-one), random, oracle. drl-g and drl-s need a connected agent and
// are reported as skipped.
struct BenchConfig {
  std::vector<std::string> methods{"greedy:all"};
  int repeats = 50;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
  GapReference reference = GapReference::Auto;
  bool keep_schedules = true;
};

struct BenchEntry {
  std::string method;
  Time makespan;
  double seconds = 0;
  bool feasible = false;
  std::optional<double> gap;
  Schedule schedule;
};

struct BenchInstanceReport {
  std::string name;
  std::optional<Time> reference;
  std::string reference_kind;  // "oracle", "lb" or ""
  std::vector<BenchEntry> entries;

  const BenchEntry* find(const std::string& method) const {
    for (const auto& e : entries)
      if (e.method == method) return &e;
    return nullptr;
  }
};

struct BenchAggregate {
  std::string method;
  double mean_makespan = 0;
  std::optional<double> mean_gap;
  double mean_seconds = 0;
  int count = 0;
};

struct BenchReport {
  std::vector<BenchInstanceReport> instances;
  std::vector<BenchAggregate> aggregates;
  std::vector<std::string> notices;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return static_cast<double>(ms) / 1000.0;
}

inline BenchEntry make_entry(const InstanceSpec& spec, const CombinationTable& table, std::string method, const Schedule& s,
                             double seconds) {
  BenchEntry e;
  e.method = std::move(method);
  e.schedule = s;
  e.seconds = seconds;
  const auto rep = validate_schedule(spec, table, s);
  e.feasible = rep.feasible;
  e.makespan = rep.makespan;
  return e;
}

inline void run_instance(const BenchInstance& inst, const BenchConfig& cfg, BenchInstanceReport& out) {
  const auto& spec = inst.spec;
  const auto table = CombinationTable::build(spec);
  out.name = inst.name;
  std::optional<OracleResult> optimum;
  auto oracle_once = [&]() -> const std::optional<OracleResult>& {
    if (!optimum) {
      try {
        optimum = brute_force_optimum(spec, *table);
      } catch (const OracleLimitError&) {
      }
    }
    return optimum;
  };
  double oracle_seconds = 0;

  for (const auto& m : cfg.methods) {
    if (m == "drl-g" || m == "drl-s") continue;
    const auto t0 = std::chrono::steady_clock::now();
    if (m == "greedy:all") {
      const auto row = solve_all_rules(spec, *table, cfg.repeats, cfg.seed);
      const double secs = seconds_since(t0);
      for (std::size_t c = 0; c < row.results.size(); ++c)
        out.entries.push_back(make_entry(spec, *table, "greedy:" + row.rules[c].name(), row.results[c].best.schedule, secs / 12));
      out.entries.push_back(make_entry(spec, *table, "greedy:best-choice", row.results[row.best_cell].best.schedule, secs));
    } else if (m.rfind("greedy:", 0) == 0) {
      const auto name = m.substr(7);
      const auto dash = name.find('-');
      if (dash == std::string::npos) throw std::invalid_argument("greedy method must be greedy:<OP>-<MACHINE>, got '" + m + "'");
      const RuleConfig rc{parse_op_rule(name.substr(0, dash)), parse_machine_rule(name.substr(dash + 1)), cfg.repeats, cfg.seed};
      const auto res = solve_greedy(spec, *table, rc);
      out.entries.push_back(make_entry(spec, *table, "greedy:" + rc.name(), res.best.schedule, seconds_since(t0)));
    } else if (m == "random") {
      const Environment env(std::make_shared<const InstanceSpec>(spec), table, RewardConfig{});
      std::optional<RolloutResult> best;
      for (int r = 0; r < cfg.repeats; ++r) {
        auto rng = std::make_shared<Rng>(make_stream(cfg.seed, static_cast<std::uint64_t>(r)));
        auto res = rollout(env, random_policy(rng));
        if (!best || res.makespan < best->makespan) best = std::move(res);
      }
      out.entries.push_back(make_entry(spec, *table, "random", best->schedule, seconds_since(t0)));
    } else if (m == "oracle") {
      const auto& o = oracle_once();
      oracle_seconds = seconds_since(t0);
      if (o) out.entries.push_back(make_entry(spec, *table, "oracle", o->schedule, oracle_seconds));
    } else {
      throw std::invalid_argument("unknown bench method '" + m + "'");
    }
  }

  const bool want_oracle = cfg.reference == GapReference::Oracle || (cfg.reference == GapReference::Auto && !inst.lower_bound);
  const bool want_lb = cfg.reference == GapReference::LowerBound || (cfg.reference == GapReference::Auto && inst.lower_bound);
  if (want_lb && inst.lower_bound) {
    out.reference = inst.lower_bound;
    out.reference_kind = "lb";
  } else if (want_oracle && oracle_once()) {
    out.reference = optimum->makespan;
    out.reference_kind = "oracle";
  }
  if (out.reference && out.reference->milli() > 0)
    for (auto& e : out.entries) e.gap = (e.makespan - *out.reference).to_double() / out.reference->to_double();
  if (!cfg.keep_schedules)
    for (auto& e : out.entries) e.schedule.records.clear();
}

}  // namespace detail

inline BenchReport run_bench(const std::vector<BenchInstance>& suite, const BenchConfig& cfg) {
  BenchReport rep;
  for (const auto& m : cfg.methods)
    if (m == "drl-g" || m == "drl-s") rep.notices.push_back(m + " skipped: no agent connected");
  rep.instances.resize(suite.size());

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(suite.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < suite.size(); i = next++) {
      try {
        detail::run_instance(suite[i], cfg, rep.instances[i]);
      } catch (const std::exception& e) {
        errors[i] = suite[i].name + ": " + e.what();
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(std::max<std::size_t>(suite.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("bench: " + e);

  // Best one: the greedy cell with the lowest mean over the suite.
  std::map<std::string, double> cell_sum;
  for (const auto& inst : rep.instances)
    for (const auto& e : inst.entries)
      if (e.method.rfind("greedy:", 0) == 0 && e.method != "greedy:best-choice") cell_sum[e.method] += e.makespan.to_double();
  const bool all_rules = std::find(cfg.methods.begin(), cfg.methods.end(), "greedy:all") != cfg.methods.end();
  if (all_rules && !cell_sum.empty()) {
    auto best = cell_sum.begin();
    for (auto it = cell_sum.begin(); it != cell_sum.end(); ++it)
      if (it->second < best->second) best = it;
    rep.notices.push_back("greedy:best-one is " + best->first);
    for (auto& inst : rep.instances) {
      BenchEntry e = *inst.find(best->first);
      e.method = "greedy:best-one";
      inst.entries.push_back(std::move(e));
    }
  }

  std::vector<std::string> order;
  for (const auto& inst : rep.instances)
    for (const auto& e : inst.entries)
      if (std::find(order.begin(), order.end(), e.method) == order.end()) order.push_back(e.method);
  for (const auto& m : order) {
    BenchAggregate a;
    a.method = m;
    double gap_sum = 0;
    int gaps = 0;
    for (const auto& inst : rep.instances)
      if (const auto* e = inst.find(m)) {
        a.mean_makespan += e->makespan.to_double();
        a.mean_seconds += e->seconds;
        ++a.count;
        if (e->gap) {
          gap_sum += *e->gap;
          ++gaps;
        }
      }
    if (a.count > 0) {
      a.mean_makespan /= a.count;
      a.mean_seconds /= a.count;
    }
    if (gaps > 0) a.mean_gap = gap_sum / gaps;
    rep.aggregates.push_back(a);
  }
  return rep;
}

// Rows per machine, bars per record.
inline nlohmann::ordered_json gantt_json(const InstanceSpec& spec, const Schedule& s) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (MachineId k = 0; k < spec.machine_count; ++k) {
    nlohmann::ordered_json bars = nlohmann::ordered_json::array();
    Schedule sorted = s;
    sorted.sort_by_start();
    for (const auto& r : sorted.records)
      if (r.machine == k)
        bars.push_back({{"job", r.op.job},
                        {"op", spec.jobs[r.op.job].op(r.op.op).id},
                        {"start", detail::time_json(r.start)},
                        {"end", detail::time_json(r.end)}});
    rows.push_back({{"machine", k}, {"bars", std::move(bars)}});
  }
  return {{"makespan", detail::time_json(s.makespan())}, {"machines", std::move(rows)}};
}

inline nlohmann::ordered_json bench_report_to_json(const BenchReport& rep, const std::vector<BenchInstance>& suite) {
  nlohmann::ordered_json out;
  nlohmann::ordered_json insts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.instances.size(); ++i) {
    const auto& ir = rep.instances[i];
    nlohmann::ordered_json j;
    j["name"] = ir.name;
    j["reference"] = ir.reference ? nlohmann::ordered_json(detail::time_json(*ir.reference)) : nlohmann::ordered_json();
    j["reference_kind"] = ir.reference_kind;
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (const auto& e : ir.entries) {
      nlohmann::ordered_json r;
      r["method"] = e.method;
      r["makespan"] = detail::time_json(e.makespan);
      r["feasible"] = e.feasible;
      r["seconds"] = e.seconds;
      r["gap"] = e.gap ? nlohmann::ordered_json(*e.gap) : nlohmann::ordered_json();
      if (!e.schedule.records.empty()) {
        r["schedule"] = schedule_to_json(suite[i].spec, e.schedule);
        r["gantt"] = gantt_json(suite[i].spec, e.schedule);
      }
      results.push_back(std::move(r));
    }
    j["results"] = std::move(results);
    insts.push_back(std::move(j));
  }
  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const auto& a : rep.aggregates)
    aggs.push_back({{"method", a.method},
                    {"mean_makespan", a.mean_makespan},
                    {"mean_gap", a.mean_gap ? nlohmann::ordered_json(*a.mean_gap) : nlohmann::ordered_json()},
                    {"mean_seconds", a.mean_seconds},
                    {"count", a.count}});
  out["instances"] = std::move(insts);
  out["aggregates"] = std::move(aggs);
  out["notices"] = rep.notices;
  return out;
}

}  // namespace ipps
