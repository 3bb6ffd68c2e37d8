#include <gtest/gtest.h>

#include "ipps/generator.hpp"
#include "ipps/greedy.hpp"
#include "ipps/oracle.hpp"
#include "oracles.hpp"

using namespace ipps;

namespace {

InstanceSpec load(const char* name) { return load_instance(oracle::data_path(name)); }

// Same order as the input, each op delayed by a random slack after its
// constraints. Feasible by construction and usually not left-justified.
Schedule delayed(const InstanceSpec& spec, const CombinationTable& table, const Schedule& sched, Rng& rng) {
  const auto rep = validate_schedule(spec, table, sched);
  Schedule in = sched;
  in.sort_by_start();
  std::map<std::pair<int, int>, Time> end_of;
  std::vector<Time> mfree(spec.machine_count), jfree(spec.job_count());
  Schedule out;
  for (const auto& r : in.records) {
    const auto& c = table.of(r.op.job)[rep.chosen_combination[r.op.job]];
    Time s = std::max(mfree[r.machine], jfree[r.op.job]);
    for (int u : regular_prerequisites(spec.jobs[r.op.job], c.member, r.op.op)) s = std::max(s, end_of.at({r.op.job, u}));
    s = s + Time::from_milli(static_cast<std::int64_t>(uniform_int(rng, 0, 3)) * 500);
    const Time e = s + (r.end - r.start);
    end_of[{r.op.job, r.op.op}] = e;
    mfree[r.machine] = jfree[r.op.job] = e;
    out.records.push_back({r.op, r.machine, s, e});
  }
  return out;
}

}  // namespace

TEST(Oracle, ToyOptimaWithAndWithoutWait) {
  const auto spec = load("toy.json");
  EXPECT_EQ(brute_force_optimum(spec).makespan, Time::units(3));
  const Environment env(spec);
  const auto with_wait = exhaustive_env_search(env, true);
  const auto no_wait = exhaustive_env_search(env, false);
  EXPECT_EQ(with_wait.makespan, Time::units(3));
  EXPECT_EQ(no_wait.makespan, Time::units(4));
  EXPECT_EQ(oracle::schedule_space_optimum(spec), 3000);
  // The optimal trajectory needs a Wait.
  EXPECT_TRUE(std::any_of(with_wait.actions.begin(), with_wait.actions.end(), [](const Action& a) { return a.is_wait(); }));
}

TEST(Oracle, UnprunedSearchAgrees) {
  const Environment env(load("toy.json"));
  const auto pruned = exhaustive_env_search(env, true, true);
  const auto full = exhaustive_env_search(env, true, false);
  EXPECT_EQ(pruned.makespan, full.makespan);
  EXPECT_GT(full.leaves, pruned.leaves);
}

TEST(Oracle, FixturesAgreeWithIndependentSearch) {
  for (const char* name : {"toy.json", "chain.json", "or_branch.json"}) {
    const auto spec = load(name);
    const auto bf = brute_force_optimum(spec);
    EXPECT_EQ(bf.makespan.milli(), oracle::schedule_space_optimum(spec)) << name;
    EXPECT_EQ(exhaustive_env_search(Environment(spec), true).makespan, bf.makespan) << name;
    const auto table = CombinationTable::build(spec);
    const auto rep = validate_schedule(spec, *table, bf.schedule);
    EXPECT_TRUE(rep.feasible) << name;
    EXPECT_EQ(rep.makespan, bf.makespan) << name;
  }
}

TEST(Oracle, TinyGeneratedOptimaMatchEnvironment) {
  const auto cfg = tiny_gen_config();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto spec = generate_instance(cfg, seed);
    const auto bf = brute_force_optimum(spec);
    ASSERT_EQ(bf.makespan.milli(), oracle::schedule_space_optimum(spec)) << "seed " << seed;
    ASSERT_EQ(exhaustive_env_search(Environment(spec), true).makespan, bf.makespan) << "seed " << seed;
  }
}

TEST(Oracle, CanonicalizeIsReplayableAndNoWorse) {
  const auto cfg = tiny_gen_config();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto spec = generate_instance(cfg, seed);
    const auto table = CombinationTable::build(spec);
    const Environment env(spec);
    Rng rng(seed);
    std::vector<Schedule> inputs{brute_force_optimum(spec, *table).schedule,
                                 solve_greedy(spec, *table, {OpRule::MOR, MachineRule::LUM, 1, seed}).best.schedule};
    inputs.push_back(delayed(spec, *table, inputs[0], rng));
    inputs.push_back(delayed(spec, *table, inputs[1], rng));
    for (const auto& in : inputs) {
      const auto canon = canonicalize(spec, *table, in);
      const auto rep = validate_schedule(spec, *table, canon);
      ASSERT_TRUE(rep.feasible) << "seed " << seed;
      EXPECT_LE(rep.makespan, in.makespan()) << "seed " << seed;
      const auto replay = replay_schedule(env, canon);
      ASSERT_TRUE(replay.ok) << "seed " << seed << ": " << replay.message;
    }
  }
}

TEST(Oracle, CanonicalizeRemovesSlack) {
  const auto spec = load("chain.json");
  const auto table = CombinationTable::build(spec);
  const Schedule slack{{{{0, 0}, 0, Time::units(1), Time::units(3)}, {{0, 1}, 0, Time::units(4), Time::units(7)}}};
  const auto canon = canonicalize(spec, *table, slack);
  EXPECT_EQ(canon.records[0].start, Time{});
  EXPECT_EQ(canon.records[1].start, Time::units(2));
  EXPECT_EQ(canon.makespan(), Time::units(5));
  // The slack version cannot be replayed: the env never idles a free machine forever.
  EXPECT_FALSE(replay_schedule(Environment(spec), slack).ok);
}

TEST(Oracle, InfeasibleInputRejected) {
  const auto spec = load("chain.json");
  const auto table = CombinationTable::build(spec);
  const Schedule bad{{{{0, 1}, 0, Time::units(0), Time::units(3)}, {{0, 0}, 0, Time::units(3), Time::units(5)}}};
  EXPECT_THROW(canonicalize(spec, *table, bad), std::invalid_argument);
}

TEST(Oracle, LimitsEnforced) {
  GenConfig cfg;
  cfg.jobs = 4;
  cfg.machines = 5;
  const auto spec = generate_instance(cfg, 1);
  EXPECT_THROW(brute_force_optimum(spec), OracleLimitError);
}

TEST(Oracle, CanonicalizeIsIdempotent) {
  const auto cfg = tiny_gen_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = generate_instance(cfg, seed);
    const auto table = CombinationTable::build(spec);
    Rng rng(seed + 100);
    const auto in = delayed(spec, *table, brute_force_optimum(spec, *table).schedule, rng);
    const auto once = canonicalize(spec, *table, in);
    EXPECT_TRUE(starts_on_events(once));
    EXPECT_EQ(canonicalize(spec, *table, once), once);
  }
}

TEST(Oracle, StartOnUnrelatedEndIsKept) {
  // Job 1 waits for job 0's end at 2 although nothing forces it.
  const auto spec = parse_instance(R"({"machines": 2, "jobs": [
    {"ops": [{"id":1,"machines":[[0,2]]}], "edges": []},
    {"ops": [{"id":1,"machines":[[1,1]]}], "edges": []}]})");
  const auto table = CombinationTable::build(spec);
  const Schedule s{{{{0, 0}, 0, Time::units(0), Time::units(2)}, {{1, 0}, 1, Time::units(2), Time::units(3)}}};
  EXPECT_EQ(canonicalize(spec, *table, s), s);
  EXPECT_TRUE(replay_schedule(Environment(spec), s).ok);
}

TEST(Oracle, SixOpTwoMachineMatchesUnprunedSearch) {
  auto cfg = tiny_gen_config();
  cfg.total_ops = {3, 3};
  cfg.main_ops = {3, 3};
  cfg.or_connectors = {0, 0};
  const auto spec = generate_instance(cfg, 7);
  int ops = 0;
  for (const auto& j : spec.jobs) ops += j.regular_count();
  ASSERT_EQ(ops, 6);
  const auto full = exhaustive_env_search(Environment(spec), true, false);
  EXPECT_EQ(brute_force_optimum(spec).makespan, full.makespan);
}
