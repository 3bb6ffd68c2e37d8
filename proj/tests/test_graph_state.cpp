#include <gtest/gtest.h>

#include <map>

#include "ipps/graph_state.hpp"
#include "ipps/instance_io.hpp"
#include "oracles.hpp"

using namespace ipps;

namespace {

OpRef ref(const InstanceSpec& s, int job, int id) { return {job, *s.jobs[job].position_of(id)}; }

const std::vector<double>* row(const NodeSet& n, int id) {
  for (std::size_t i = 0; i < n.ids.size(); ++i)
    if (n.ids[i] == id) return &n.features[i];
  return nullptr;
}

}  // namespace

TEST(GraphState, ResetFeatures) {
  const auto spec = load_instance(oracle::data_path("toy.json"));
  Environment env(spec);
  GraphEncoder enc(env);
  const auto g = enc.encode(env.reset());
  ASSERT_EQ(g.operations.ids.size(), 3u);
  for (const auto& f : g.operations.features) {
    ASSERT_EQ(f.size(), std::size_t(kOperationFeatures));
    EXPECT_EQ(f[1], 0.0);
  }
  ASSERT_EQ(g.machines.ids.size(), 2u);
  for (const auto& f : g.machines.features) {
    ASSERT_EQ(f.size(), std::size_t(kMachineFeatures));
    EXPECT_EQ(f[2], 0.0);
  }
  double top = 0;
  for (const auto& f : g.jobs.features) top = std::max(top, f[0]);
  EXPECT_EQ(top, 1.0);
  // ope1 -> ope2 is the only prerequisite edge.
  ASSERT_EQ(g.op_op.size(), 1u);
  EXPECT_EQ(g.op_op[0], (IdPair{enc.op_id(ref(spec, 0, 1)), enc.op_id(ref(spec, 0, 2))}));
  EXPECT_EQ((*row(g.operations, enc.op_id(ref(spec, 0, 2))))[0], 1.0);
  EXPECT_EQ((*row(g.operations, enc.op_id(ref(spec, 0, 2))))[2], 0.0);
  EXPECT_EQ(g.mask.size(), 4u);
  EXPECT_FALSE(g.wait);
  // Edge features are processing times.
  for (std::size_t e = 0; e < g.op_machine.size(); ++e) {
    const auto r = enc.op_ref(g.op_machine[e].first);
    EXPECT_EQ(g.op_machine_time[e], spec.jobs[r.job].op(r.op).time_on(g.op_machine[e].second)->to_double());
  }
}

TEST(GraphState, UtilizationIsBusyShareOfElapsedTime) {
  const auto spec = parse_instance(R"({"machines": 2, "jobs": [
    {"ops": [{"id": 1, "machines": [[0, 3]]}], "edges": []},
    {"ops": [{"id": 2, "machines": [[1, 10]]}, {"id": 3, "machines": [[0, 1], [1, 1]]}], "edges": [[2, 3]]}]})");
  Environment env(spec);
  GraphEncoder enc(env);
  auto s = env.reset();
  env.step(s, Action::pair(ref(spec, 0, 1), 0));
  env.step(s, Action::pair(ref(spec, 1, 2), 1));
  EXPECT_EQ(s.clock, Time::units(3));
  env.step(s, Action::wait());
  EXPECT_EQ(s.clock, Time::units(10));
  const auto g = enc.encode(s);
  const auto* m0 = row(g.machines, 0);
  ASSERT_NE(m0, nullptr);
  EXPECT_DOUBLE_EQ((*m0)[2], 0.3);
  EXPECT_EQ((*m0)[3], 0.0);
  EXPECT_DOUBLE_EQ((*m0)[4], 7.0);  // idle since 3
  const auto* m1 = row(g.machines, 1);
  ASSERT_NE(m1, nullptr);
  EXPECT_DOUBLE_EQ((*m1)[2], 1.0);
  // Finished job 0 is gone.
  EXPECT_EQ(g.jobs.ids, std::vector<int>{1});
}

TEST(GraphState, PrunedBranchDisappears) {
  const auto spec = load_instance(oracle::data_path("or_branch.json"));
  Environment env(spec);
  GraphEncoder enc(env);
  auto s = env.reset();
  env.step(s, Action::pair(ref(spec, 0, 1), 0));
  env.step(s, Action::wait());
  const auto before = enc.encode(s);
  EXPECT_NE(row(before.operations, enc.op_id(ref(spec, 0, 2))), nullptr);
  EXPECT_NE(row(before.combinations, enc.combination_id(0, 0)), nullptr);
  EXPECT_NE(row(before.combinations, enc.combination_id(0, 1)), nullptr);
  env.step(s, Action::pair(ref(spec, 0, 3), 1));
  const auto after = enc.encode(s);
  EXPECT_EQ(row(after.operations, enc.op_id(ref(spec, 0, 2))), nullptr);
  const int dead = env.combinations().of(0)[0].contains(ref(spec, 0, 2).op) ? 0 : 1;
  EXPECT_EQ(row(after.combinations, enc.combination_id(0, dead)), nullptr);
  for (const auto& [op, c] : after.op_comb) EXPECT_NE(c, enc.combination_id(0, dead));
}

TEST(GraphState, RolloutInvariants) {
  for (const char* f : {"toy.json", "or_branch.json"}) {
    const auto spec = load_instance(oracle::data_path(f));
    Environment env(spec);
    GraphEncoder enc(env);
    Rng rng(11);
    for (int ep = 0; ep < 100; ++ep) {
      auto s = env.reset();
      std::size_t prev[4] = {SIZE_MAX, SIZE_MAX, SIZE_MAX, SIZE_MAX};
      while (!s.terminal) {
        const auto g = enc.encode(s);
        const std::size_t now[4] = {g.operations.ids.size(), g.machines.ids.size(), g.combinations.ids.size(), g.jobs.ids.size()};
        for (int k = 0; k < 4; ++k) {
          ASSERT_LE(now[k], prev[k]);
          prev[k] = now[k];
        }
        // Mask completeness both ways.
        const auto pairs = env.pairs(s);
        ASSERT_EQ(pairs.size(), g.mask.size());
        for (const auto& [op, m] : g.mask) ASSERT_TRUE(env.pair_legal(s, enc.op_ref(op), m));
        ASSERT_EQ(g.wait, env.wait_legal(s));
        for (const auto& p : g.future_pairs) ASSERT_EQ(std::find(g.mask.begin(), g.mask.end(), p), g.mask.end());
        // Within each job the best combination has ratio 1.
        std::map<int, double> best;
        for (const auto& [c, j] : g.comb_job) {
          const double r = (*row(g.combinations, c))[1];
          best[j] = best.count(j) ? std::min(best[j], r) : r;
        }
        for (const auto& [j, r] : best) ASSERT_DOUBLE_EQ(r, 1.0);
        for (const auto& ff : g.combinations.features) ASSERT_EQ(ff.size(), std::size_t(kCombinationFeatures));
        for (const auto& ff : g.jobs.features) ASSERT_EQ(ff.size(), std::size_t(kJobFeatures));
        const auto actions = env.action_space(s);
        env.step(s, actions[uniform_index(rng, actions.size())]);
      }
    }
  }
}
