#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ipps/greedy.hpp"
#include "ipps/instance_io.hpp"

namespace ipps::kim {

inline constexpr int kProblems = 24;

// Published lower bounds per problem.
inline constexpr std::array<int, kProblems> kLowerBound{427, 343, 344, 306, 318, 427, 372, 343, 427, 427, 344, 318,
                                                        427, 372, 427, 427, 344, 318, 427, 372, 427, 427, 372, 427};

// Published best-of-twelve greedy makespan per problem.
inline constexpr std::array<int, kProblems> kGreedyBestChoice{427, 376, 374, 311, 364, 489, 388, 378, 427, 489, 420, 353,
                                                              500, 441, 483, 490, 452, 391, 513, 475, 506, 535, 487, 551};

// Published average of the best greedy rule.
inline constexpr double kGreedyAverage = 458.38;
inline constexpr double kGreedyTolerance = 0.10;

inline std::string problem_file(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "problem%02d.json", k);
  return buf;
}

struct Suite {
  std::vector<InstanceSpec> instances;  // index k-1 for problem k
  std::vector<std::string> missing;
  std::vector<std::string> errors;  // parse failures

  bool complete() const { return missing.empty() && errors.empty() && instances.size() == kProblems; }
};

inline Suite load_suite(const std::filesystem::path& dir) {
  Suite s;
  for (int k = 1; k <= kProblems; ++k) {
    const auto p = dir / problem_file(k);
    if (!std::filesystem::exists(p)) {
      s.missing.push_back(p.string());
      continue;
    }
    try {
      s.instances.push_back(load_instance(p.string()));
    } catch (const std::exception& e) {
      s.errors.push_back(p.string() + ": " + e.what());
    }
  }
  return s;
}

struct Report {
  bool fixtures_present = false;
  bool all_parse = false;
  bool all_feasible = false;
  bool all_above_lb = false;
  double best_choice_average = 0;
  bool average_within_tolerance = false;
  std::vector<RuleTableRow> rows;
  std::vector<std::string> problems;

  bool passed() const { return fixtures_present && all_parse && all_feasible && all_above_lb && average_within_tolerance; }
};

inline Report evaluate(const std::filesystem::path& dir, int repeats = 50, std::uint64_t seed = 0) {
  Report r;
  const auto suite = load_suite(dir);
  r.fixtures_present = suite.missing.empty();
  r.all_parse = suite.errors.empty() && r.fixtures_present;
  for (const auto& m : suite.missing) r.problems.push_back("missing " + m);
  for (const auto& e : suite.errors) r.problems.push_back("parse error " + e);
  if (!suite.complete()) return r;

  r.all_feasible = r.all_above_lb = true;
  double sum = 0;
  for (int k = 0; k < kProblems; ++k) {
    const auto& spec = suite.instances[k];
    const auto table = CombinationTable::build(spec);
    auto row = solve_all_rules(spec, *table, repeats, seed);
    for (std::size_t c = 0; c < row.results.size(); ++c) {
      const auto& best = row.results[c].best;
      const auto rep = validate_schedule(spec, *table, best.schedule);
      const std::string tag = problem_file(k + 1) + " " + row.rules[c].name();
      if (!rep.feasible) {
        r.all_feasible = false;
        r.problems.push_back(tag + " infeasible");
      }
      if (best.makespan < Time::units(kLowerBound[k])) {
        r.all_above_lb = false;
        r.problems.push_back(tag + " makespan " + best.makespan.str() + " below LB " + std::to_string(kLowerBound[k]));
      }
    }
    sum += row.best_choice.to_double();
    r.rows.push_back(std::move(row));
  }
  r.best_choice_average = sum / kProblems;
  r.average_within_tolerance = std::abs(r.best_choice_average - kGreedyAverage) <= kGreedyTolerance * kGreedyAverage;
  return r;
}

}  // namespace ipps::kim
