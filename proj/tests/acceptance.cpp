// Acceptance report: one PASS/FAIL line per criterion.
//   acceptance                 run all, exit 1 on any failure
//   acceptance --only <name>   run one
//   acceptance --report-only   run all, exit 1 only on failures whose inputs are present

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ipps/ipps.hpp"
#include "oracles.hpp"

using namespace ipps;

namespace {

struct Outcome {
  bool pass = false;
  bool blocked = false;  // inputs absent, not a defect in the code
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_s(double s) {
  std::ostringstream os;
  os.precision(3);
  os << s << "s";
  return os.str();
}

Outcome toy() {
  const auto t0 = Clock::now();
  const auto spec = load_instance(oracle::data_path("toy.json"));
  const Environment env(spec);
  const Time bf = brute_force_optimum(spec).makespan;
  const Time no_wait = exhaustive_env_search(env, false).makespan;
  Time min_wait = Time::max(), min_no_wait = Time::max();
  for (std::uint64_t s = 0; s < 1000; ++s) {
    min_wait = std::min(min_wait, rollout(env, random_policy(std::make_shared<Rng>(s), true)).makespan);
    min_no_wait = std::min(min_no_wait, rollout(env, random_policy(std::make_shared<Rng>(s), false)).makespan);
  }
  const double secs = elapsed(t0);
  Outcome o;
  o.pass = bf == Time::units(3) && no_wait == Time::units(4) && min_wait == Time::units(3) && min_no_wait == Time::units(4) && secs < 1.0;
  o.detail = "optimum " + bf.str() + ", no-wait search " + no_wait.str() + ", random min " + min_wait.str() + " with Wait / " +
             min_no_wait.str() + " without, " + fmt_s(secs);
  return o;
}

Outcome reward_identity() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<int, int>> sizes{{4, 5}, {5, 3}, {6, 5}};
  const auto configs = EstimateConfig::all();
  const int total = 10000, instances_per_size = 10;
  int done = 0, naive_bad = 0, terminal_bad = 0, telescope_bad = 0;
  for (std::size_t z = 0; z < sizes.size(); ++z) {
    GenConfig cfg;
    cfg.jobs = sizes[z].first;
    cfg.machines = sizes[z].second;
    const int share = total / 3 + (static_cast<int>(z) < total % 3 ? 1 : 0);
    std::vector<std::shared_ptr<const InstanceSpec>> specs;
    for (int i = 0; i < instances_per_size; ++i)
      specs.push_back(std::make_shared<const InstanceSpec>(generate_instance(cfg, 1000 * (z + 1) + i)));
    for (int k = 0; k < share; ++k) {
      const auto& spec = specs[k % instances_per_size];
      const auto est = configs[k % configs.size()];
      const Environment env(spec, CombinationTable::build(*spec), RewardConfig::estimated(est));
      const double initial = env.reset().estimates.total;
      const auto r = rollout(env, random_policy(std::make_shared<Rng>(make_stream(z, k))));
      const double makespan = r.makespan.to_double();
      naive_bad += r.naive_reward_sum != -makespan;
      telescope_bad += std::abs(r.estimated_reward_sum - (initial - makespan)) > 1e-6;
      for (const auto& c : configs) terminal_bad += env.compute_estimates(r.final_state, c).total != makespan;
      ++done;
    }
  }
  Outcome o;
  o.pass = done == total && naive_bad == 0 && terminal_bad == 0 && telescope_bad == 0;
  o.detail = std::to_string(done) + " rollouts, naive sum != -makespan: " + std::to_string(naive_bad) +
             ", terminal estimate != makespan (8 configs): " + std::to_string(terminal_bad) +
             ", estimated sum != T0 - makespan: " + std::to_string(telescope_bad) + ", " + fmt_s(elapsed(t0));
  return o;
}

// Random feasible schedule built without the environment: random combination,
// random ready op, random machine, random idle gap before the start.
Schedule random_feasible_schedule(const InstanceSpec& spec, const CombinationTable& table, Rng& rng) {
  struct Item {
    OpRef ref;
    std::vector<int> prereqs;
  };
  std::vector<Item> items;
  for (int j = 0; j < spec.job_count(); ++j) {
    const auto& c = table.of(j)[uniform_index(rng, table.of(j).size())];
    std::vector<int> index(spec.jobs[j].size(), -1);
    for (int v : c.ops)
      if (spec.jobs[j].op(v).kind == NodeKind::Regular) {
        index[v] = static_cast<int>(items.size());
        items.push_back({{j, v}, {}});
      }
    for (auto& it : items)
      if (it.ref.job == j)
        for (int u : regular_prerequisites(spec.jobs[j], c.member, it.ref.op)) it.prereqs.push_back(index[u]);
  }
  std::vector<bool> placed(items.size(), false);
  std::vector<Time> end(items.size()), mfree(spec.machine_count), jfree(spec.job_count());
  Schedule out;
  for (std::size_t n = 0; n < items.size(); ++n) {
    std::vector<int> ready;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (placed[i]) continue;
      bool ok = true;
      for (int p : items[i].prereqs) ok = ok && placed[p];
      if (ok) ready.push_back(static_cast<int>(i));
    }
    const int i = ready[uniform_index(rng, ready.size())];
    const auto& node = spec.jobs[items[i].ref.job].op(items[i].ref.op);
    const auto& opt = node.machines[uniform_index(rng, node.machines.size())];
    Time s = std::max(mfree[opt.machine], jfree[items[i].ref.job]);
    for (int p : items[i].prereqs) s = std::max(s, end[p]);
    s = s + Time::from_milli(uniform_int(rng, 0, 4) * 250);
    end[i] = s + opt.time;
    mfree[opt.machine] = jfree[items[i].ref.job] = end[i];
    placed[i] = true;
    out.records.push_back({items[i].ref, opt.machine, s, end[i]});
  }
  return out;
}

Outcome exact_oracle() {
  const auto t0 = Clock::now();
  const auto cfg = tiny_gen_config();
  int instances = 0, mismatch = 0, independent_mismatch = 0, schedules = 0, canon_bad = 0, max_ops = 0;
  for (std::uint64_t seed = 0; instances < 50; ++seed) {
    const auto spec = generate_instance(cfg, 5000 + seed);
    int ops = 0;
    for (const auto& j : spec.jobs) ops += j.regular_count();
    if (ops > 8) continue;
    max_ops = std::max(max_ops, ops);
    ++instances;
    const auto table = CombinationTable::build(spec);
    const Environment env(std::make_shared<const InstanceSpec>(spec), table, RewardConfig{});
    const auto bf = brute_force_optimum(spec, *table);
    const Time env_best = exhaustive_env_search(env, true).makespan;
    mismatch += bf.makespan != env_best;
    independent_mismatch += bf.makespan.milli() != oracle::schedule_space_optimum(spec);

    Rng rng = make_stream(seed, 77);
    std::vector<Schedule> inputs{bf.schedule};
    for (int k = 0; k < 3; ++k) inputs.push_back(random_feasible_schedule(spec, *table, rng));
    for (const auto& in : inputs) {
      ++schedules;
      const auto before = validate_schedule(spec, *table, in);
      const auto canon = canonicalize(spec, *table, in);
      const auto after = validate_schedule(spec, *table, canon);
      const auto replay = replay_schedule(env, canon);
      const bool ok = before.feasible && after.feasible && after.makespan <= before.makespan && starts_on_events(canon) &&
                      replay.ok && after.makespan >= bf.makespan;
      canon_bad += !ok;
    }
  }
  const double secs = elapsed(t0);
  Outcome o;
  o.pass = mismatch == 0 && independent_mismatch == 0 && canon_bad == 0 && secs < 300;
  o.detail = std::to_string(instances) + " instances (<= " + std::to_string(max_ops) + " ops), oracle != env search: " +
             std::to_string(mismatch) + ", oracle != independent search: " + std::to_string(independent_mismatch) + "; " +
             std::to_string(schedules) + " schedules canonicalized, failures: " + std::to_string(canon_bad) + ", " + fmt_s(secs);
  return o;
}

Outcome combinations() {
  const auto t0 = Clock::now();
  GenConfig cfg;
  cfg.total_ops = {4, 15};
  cfg.or_connectors = {0, 3};
  int jobs = 0, bad = 0, largest = 0, total = 0;
  for (std::uint64_t k = 0; jobs < 1000; ++k) {
    Rng rng = make_stream(42, k);
    const auto job = generate_job(cfg, rng);
    if (job.regular_count() > 15) continue;
    ++jobs;
    const auto combos = enumerate_combinations(job, 0);
    const auto want = oracle::or_choice_sets(job);
    std::set<std::vector<bool>> got;
    for (const auto& c : combos) got.insert(c.member);
    bad += got != want || combos.size() != want.size();
    largest = std::max(largest, static_cast<int>(combos.size()));
    total += static_cast<int>(combos.size());
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = std::to_string(jobs) + " jobs, " + std::to_string(total) + " combinations (max " + std::to_string(largest) +
             " per job), mismatches: " + std::to_string(bad) + ", " + fmt_s(elapsed(t0));
  return o;
}

Outcome kim_suite() {
  const auto t0 = Clock::now();
  const auto rep = kim::evaluate(std::filesystem::path(IPPS_DATA_DIR) / "kim", 50, 0);
  Outcome o;
  o.pass = rep.passed();
  if (!rep.fixtures_present) {
    o.blocked = true;
    int missing = 0;
    for (const auto& p : rep.problems) missing += p.rfind("missing", 0) == 0;
    o.detail = "fixtures absent (" + std::to_string(missing) + " of " + std::to_string(kim::kProblems) + " missing under data/kim)";
    return o;
  }
  std::ostringstream os;
  os << "parse " << (rep.all_parse ? "ok" : "failed") << ", feasible " << (rep.all_feasible ? "all" : "not all") << ", >= LB "
     << (rep.all_above_lb ? "all" : "not all") << ", best-choice average " << rep.best_choice_average << " vs "
     << kim::kGreedyAverage << " +-10%, " << fmt_s(elapsed(t0));
  if (!rep.problems.empty()) os << "; first problem: " << rep.problems.front();
  o.detail = os.str();
  return o;
}

Outcome milp() {
  const auto t0 = Clock::now();
  auto cfg = tiny_gen_config();
  cfg.jobs = 3;
  const bool solver = python_module_available("highspy");
  const std::string script = std::string(IPPS_TOOLS_DIR) + "/solve_lp.py";
  int instances = 0, check_bad = 0, solve_bad = 0;
  std::string first_problem;
  for (std::uint64_t seed = 0; instances < 5; ++seed) {
    const auto spec = generate_instance(cfg, 9000 + seed);
    int ops = 0;
    for (const auto& j : spec.jobs) ops += j.regular_count();
    if (ops > 8) continue;
    ++instances;
    const auto table = CombinationTable::build(spec);
    const auto model = build_model(spec, *table);
    const auto bf = brute_force_optimum(spec, *table);
    const auto chk = check_solution(spec, *table, model, values_from_schedule(spec, *table, model, bf.schedule));
    if (!chk.ok() || chk.makespan != bf.makespan) {
      ++check_bad;
      if (first_problem.empty() && !chk.problems.empty()) first_problem = chk.problems.front();
    }
    if (!solver) continue;
    const auto sol = solve_with_script(export_lp(model, spec.name), script);
    bool ok = sol && sol->objective && std::abs(*sol->objective - bf.makespan.to_double()) < 1e-6;
    if (ok) {
      const auto c = check_solution(spec, *table, model, sol->values);
      ok = c.ok() && c.makespan == bf.makespan;
      if (!ok && first_problem.empty() && !c.problems.empty()) first_problem = c.problems.front();
    }
    solve_bad += !ok;
  }
  Outcome o;
  o.pass = check_bad == 0 && solve_bad == 0;
  o.detail = std::to_string(instances) + " instances, oracle schedules through check_solution failing: " + std::to_string(check_bad);
  o.detail += solver ? ", solver optimum != oracle: " + std::to_string(solve_bad)
                     : ", NOTICE: highspy not installed, external solve skipped";
  if (!first_problem.empty()) o.detail += "; " + first_problem;
  o.detail += ", " + fmt_s(elapsed(t0));
  return o;
}

Outcome generator() {
  const auto t0 = Clock::now();
  const GenConfig cfg;
  int bad_links = 0, differ = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    Rng a = make_stream(7, k), b = make_stream(7, k);
    const auto ja = generate_job(cfg, a);
    const auto jb = generate_job(cfg, b);
    bad_links += oracle::nonconforming_links(ja);
    differ += job_to_json(ja).dump() != job_to_json(jb).dump();
  }
  Outcome o;
  o.pass = bad_links == 0 && differ == 0;
  o.detail = "1000 jobs, non-conforming links: " + std::to_string(bad_links) + ", runs differing: " + std::to_string(differ) + ", " +
             fmt_s(elapsed(t0));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance report"};
  std::string only;
  bool report_only = false;
  app.add_option("--only", only);
  app.add_flag("--report-only", report_only);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"toy", toy},
      {"reward-identity", reward_identity},
      {"exact-oracle", exact_oracle},
      {"combinations", combinations},
      {"kim", kim_suite},
      {"milp", milp},
      {"generator", generator},
  };
  bool known = only.empty();
  int failures = 0, gating = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && name != only) continue;
    known = true;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failures += !o.pass;
    gating += !o.pass && !o.blocked;
  }
  if (!known) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return (report_only ? gating : failures) > 0 ? 1 : 0;
}
