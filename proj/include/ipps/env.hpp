#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ipps/combination.hpp"
#include "ipps/instance.hpp"
#include "ipps/rng.hpp"
#include "ipps/schedule.hpp"

namespace ipps {

enum class Aggregate { Min, Mean, Max };

inline const char* to_string(Aggregate a) {
  switch (a) {
    case Aggregate::Min: return "min";
    case Aggregate::Mean: return "mean";
    case Aggregate::Max: return "max";
  }
  return "?";
}

// How estimated end times are aggregated: per operation over machine options,
// per job over surviving combinations, and over jobs for the whole problem.
struct EstimateConfig {
  Aggregate op = Aggregate::Min;     // min | mean
  Aggregate job = Aggregate::Min;    // min | mean
  Aggregate total = Aggregate::Max;  // max | mean

  std::string str() const { return std::string(to_string(op)) + "/" + to_string(job) + "/" + to_string(total); }
  friend bool operator==(const EstimateConfig&, const EstimateConfig&) = default;

  static std::vector<EstimateConfig> all() {
    std::vector<EstimateConfig> out;
    for (auto o : {Aggregate::Min, Aggregate::Mean})
      for (auto j : {Aggregate::Min, Aggregate::Mean})
        for (auto t : {Aggregate::Max, Aggregate::Mean}) out.push_back({o, j, t});
    return out;
  }
};

struct RewardConfig {
  enum class Kind { Naive, Estimated };
  Kind kind = Kind::Estimated;
  EstimateConfig estimate;
  // Naive T(s): max end over in-progress and finished ops (default) or over
  // finished ops only.
  bool naive_completed_only = false;

  static RewardConfig naive(bool completed_only = false) { return {Kind::Naive, {}, completed_only}; }
  static RewardConfig estimated(EstimateConfig c = {}) { return {Kind::Estimated, c, false}; }

  // "naive", "naive:done", "est", "est:<op>/<job>/<total>"
  static RewardConfig parse(const std::string& s) {
    if (s == "naive") return naive();
    if (s == "naive:done") return naive(true);
    if (s == "est") return estimated();
    if (s.rfind("est:", 0) == 0) {
      auto part = [](const std::string& p) {
        if (p == "min") return Aggregate::Min;
        if (p == "mean") return Aggregate::Mean;
        if (p == "max") return Aggregate::Max;
        throw std::invalid_argument("unknown aggregate '" + p + "'");
      };
      const std::string body = s.substr(4);
      const auto a = body.find('/');
      const auto b = body.find('/', a == std::string::npos ? a : a + 1);
      if (a == std::string::npos || b == std::string::npos) throw std::invalid_argument("reward config must be est:<op>/<job>/<total>");
      EstimateConfig c{part(body.substr(0, a)), part(body.substr(a + 1, b - a - 1)), part(body.substr(b + 1))};
      if (c.op == Aggregate::Max || c.job == Aggregate::Max || c.total == Aggregate::Min)
        throw std::invalid_argument("estimate aggregates are op:min|mean, job:min|mean, total:max|mean");
      return estimated(c);
    }
    throw std::invalid_argument("unknown reward config '" + s + "'");
  }
  std::string str() const {
    if (kind == Kind::Naive) return naive_completed_only ? "naive:done" : "naive";
    return "est:" + estimate.str();
  }
};

enum class OpStatus : std::uint8_t { Unscheduled, InProgress, Done, Pruned };

struct Action {
  enum class Kind { Wait, Pair };
  Kind kind = Kind::Wait;
  OpRef op;
  MachineId machine = -1;

  static Action wait() { return {}; }
  static Action pair(OpRef op, MachineId m) { return {Kind::Pair, op, m}; }
  bool is_wait() const { return kind == Kind::Wait; }

  friend bool operator==(const Action& a, const Action& b) {
    if (a.kind != b.kind) return false;
    return a.is_wait() || (a.op == b.op && a.machine == b.machine);
  }
};

class IllegalActionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DeadStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OpState {
  OpStatus status = OpStatus::Unscheduled;
  MachineId machine = -1;
  Time start;
  Time end;
  bool ready = false;  // feasible at the current clock
  Time ready_since;
};

struct MachineState {
  OpRef current{-1, -1};
  Time busy_until;
  Time idle_since;
  bool busy() const { return current.job >= 0; }
};

struct JobState {
  int running = -1;  // op position in progress, -1 when idle
  Time busy_until;
  bool finished = false;
  Time finish_time;
  Time last_end;
};

struct EstimateTable {
  EstimateConfig config;
  std::vector<std::vector<double>> op_estimate;  // p-hat per op
  std::vector<std::vector<std::optional<double>>> combination_end;  // nullopt for pruned
  std::vector<double> job_end;
  double total = 0;
};

struct EnvState {
  Time clock;
  std::vector<std::vector<OpState>> ops;
  std::vector<MachineState> machines;
  std::vector<JobState> jobs;
  EligibleSet eligible;
  std::vector<std::vector<bool>> in_play;
  Schedule partial;
  EstimateTable estimates;
  std::vector<std::vector<double>> remaining_estimate;  // per combination: sum of p-hat over unscheduled ops
  Time max_end_scheduled;
  Time max_end_done;
  int in_progress = 0;
  bool terminal = false;

  const OpState& op(OpRef r) const { return ops[r.job][r.op]; }
};

struct StepResult {
  double reward = 0;  // per the environment's reward config
  double naive_reward = 0;
  double estimated_reward = 0;
};

// Event-driven IPPS environment. Decision points are operation completion
// times; a Pair starts an op now, Wait jumps to the nearest completion.
class Environment {
 public:
  explicit Environment(std::shared_ptr<const InstanceSpec> spec, RewardConfig reward = {})
      : spec_(std::move(spec)), table_(CombinationTable::build(*spec_)), reward_(reward) {}
  Environment(const InstanceSpec& spec, RewardConfig reward = {})
      : Environment(std::make_shared<const InstanceSpec>(spec), reward) {}
  Environment(std::shared_ptr<const InstanceSpec> spec, std::shared_ptr<const CombinationTable> table, RewardConfig reward)
      : spec_(std::move(spec)), table_(std::move(table)), reward_(reward) {}

  const InstanceSpec& spec() const { return *spec_; }
  const std::shared_ptr<const InstanceSpec>& spec_ptr() const { return spec_; }
  const CombinationTable& combinations() const { return *table_; }
  const std::shared_ptr<const CombinationTable>& combinations_ptr() const { return table_; }
  const RewardConfig& reward_config() const { return reward_; }
  EstimateConfig estimate_config() const { return reward_.kind == RewardConfig::Kind::Estimated ? reward_.estimate : EstimateConfig{}; }

  // Optional pre-selected combination per job (-1 keeps all).
  EnvState reset(const std::vector<int>& preselect = {}) const {
    EnvState s;
    const auto& spec = *spec_;
    s.ops.resize(spec.jobs.size());
    for (std::size_t j = 0; j < spec.jobs.size(); ++j) s.ops[j].resize(spec.jobs[j].size());
    s.machines.resize(spec.machine_count);
    s.jobs.resize(spec.jobs.size());
    s.eligible = EligibleSet(table_);
    for (std::size_t j = 0; j < preselect.size() && j < spec.jobs.size(); ++j)
      if (preselect[j] >= 0) s.eligible.restrict_to(static_cast<int>(j), preselect[j]);
    s.in_play.resize(spec.jobs.size());
    for (int j = 0; j < spec.job_count(); ++j) refresh_in_play(s, j);

    s.estimates.config = estimate_config();
    s.estimates.op_estimate.resize(spec.jobs.size());
    for (std::size_t j = 0; j < spec.jobs.size(); ++j)
      for (const auto& o : spec.jobs[j].ops()) s.estimates.op_estimate[j].push_back(op_estimate(o, s.estimates.config.op));
    s.remaining_estimate.resize(spec.jobs.size());
    for (int j = 0; j < spec.job_count(); ++j) refresh_remaining(s, j);

    settle(s);
    finish_transition(s);
    return s;
  }

  bool pair_legal(const EnvState& s, OpRef op, MachineId m) const {
    if (s.terminal) return false;
    if (op.job < 0 || op.job >= spec_->job_count()) return false;
    const auto& job = spec_->jobs[op.job];
    if (op.op < 0 || op.op >= job.size()) return false;
    if (m < 0 || m >= spec_->machine_count) return false;
    const auto& st = s.ops[op.job][op.op];
    return st.ready && s.jobs[op.job].running < 0 && !s.machines[m].busy() && job.op(op.op).time_on(m).has_value();
  }

  bool wait_legal(const EnvState& s) const { return !s.terminal && s.in_progress > 0; }

  bool legal(const EnvState& s, const Action& a) const {
    return a.is_wait() ? wait_legal(s) : pair_legal(s, a.op, a.machine);
  }

  // Pairs ordered by (job, op position, machine); Wait last when offered.
  std::vector<Action> action_space(const EnvState& s) const {
    std::vector<Action> out = pairs(s);
    if (wait_legal(s)) out.push_back(Action::wait());
    return out;
  }

  std::vector<Action> pairs(const EnvState& s) const {
    std::vector<Action> out;
    if (s.terminal) return out;
    for (int j = 0; j < spec_->job_count(); ++j) {
      if (s.jobs[j].running >= 0) continue;
      const auto& job = spec_->jobs[j];
      for (int v = 0; v < job.size(); ++v) {
        if (!s.ops[j][v].ready) continue;
        for (const auto& opt : job.op(v).machines)
          if (!s.machines[opt.machine].busy()) out.push_back(Action::pair({j, v}, opt.machine));
      }
    }
    std::sort(out.begin(), out.end(), [](const Action& a, const Action& b) {
      return std::tie(a.op, a.machine) < std::tie(b.op, b.machine);
    });
    return out;
  }

  bool has_pair(const EnvState& s) const {
    if (s.terminal) return false;
    for (int j = 0; j < spec_->job_count(); ++j) {
      if (s.jobs[j].running >= 0) continue;
      const auto& job = spec_->jobs[j];
      for (int v = 0; v < job.size(); ++v) {
        if (!s.ops[j][v].ready) continue;
        for (const auto& opt : job.op(v).machines)
          if (!s.machines[opt.machine].busy()) return true;
      }
    }
    return false;
  }

  StepResult step(EnvState& s, const Action& a) const {
    if (!legal(s, a)) throw IllegalActionError(describe(a) + " is not in the action space at t=" + s.clock.str());
    const Time naive_before = naive_value(s);
    const double est_before = s.estimates.total;

    if (a.is_wait()) {
      advance(s);
    } else {
      start_op(s, a.op, a.machine);
      settle(s);
      if (!has_pair(s) && s.in_progress > 0) advance(s);
    }
    finish_transition(s);

    StepResult r;
    r.naive_reward = (naive_before - naive_value(s)).to_double();
    r.estimated_reward = est_before - s.estimates.total;
    r.reward = reward_.kind == RewardConfig::Kind::Naive ? r.naive_reward : r.estimated_reward;
    return r;
  }

  // T(s) for the naive reward.
  Time naive_value(const EnvState& s) const { return reward_.naive_completed_only ? s.max_end_done : s.max_end_scheduled; }

  // Estimates recomputed from scratch for any configuration.
  EstimateTable compute_estimates(const EnvState& s, EstimateConfig cfg) const {
    EstimateTable t;
    t.config = cfg;
    const auto& spec = *spec_;
    t.op_estimate.resize(spec.jobs.size());
    t.combination_end.resize(spec.jobs.size());
    t.job_end.resize(spec.jobs.size());
    for (int j = 0; j < spec.job_count(); ++j) {
      const auto& job = spec.jobs[j];
      for (const auto& o : job.ops()) t.op_estimate[j].push_back(op_estimate(o, cfg.op));
      const auto& combos = table_->of(j);
      t.combination_end[j].assign(combos.size(), std::nullopt);
      if (s.jobs[j].finished) {
        t.job_end[j] = s.jobs[j].finish_time.to_double();
        continue;
      }
      const double base = std::max(s.clock, s.jobs[j].busy_until).to_double();
      double agg = 0;
      int count = 0;
      for (std::size_t h = 0; h < combos.size(); ++h) {
        if (!s.eligible.alive(j, static_cast<int>(h))) continue;
        double rem = 0;
        for (int v : combos[h].ops)
          if (s.ops[j][v].status == OpStatus::Unscheduled) rem += t.op_estimate[j][v];
        const double end = base + rem;
        t.combination_end[j][h] = end;
        agg = count == 0 ? end : (cfg.job == Aggregate::Min ? std::min(agg, end) : agg + end);
        ++count;
      }
      t.job_end[j] = cfg.job == Aggregate::Mean && count > 0 ? agg / count : agg;
    }
    t.total = aggregate_total(s, t.job_end, cfg.total);
    return t;
  }

  std::string describe(const Action& a) const {
    if (a.is_wait()) return "Wait";
    std::string id = "?";
    if (a.op.job >= 0 && a.op.job < spec_->job_count() && a.op.op >= 0 && a.op.op < spec_->jobs[a.op.job].size())
      id = std::to_string(spec_->jobs[a.op.job].op(a.op.op).id);
    return "(job " + std::to_string(a.op.job) + " op " + id + ", machine " + std::to_string(a.machine) + ")";
  }

 private:
  static double op_estimate(const OperationNode& o, Aggregate agg) {
    if (o.zero_time()) return 0;
    if (agg == Aggregate::Min) return o.min_time().to_double();
    double sum = 0;
    for (const auto& m : o.machines) sum += m.time.to_double();
    return sum / static_cast<double>(o.machines.size());
  }

  double aggregate_total(const EnvState& s, const std::vector<double>& job_end, Aggregate agg) const {
    if (agg == Aggregate::Max) {
      double best = s.max_end_scheduled.to_double();
      bool any = false;
      for (double v : job_end) {
        best = any ? std::max(best, v) : v;
        any = true;
      }
      return any ? best : s.max_end_scheduled.to_double();
    }
    double sum = 0;
    int n = 0;
    for (std::size_t j = 0; j < job_end.size(); ++j)
      if (!s.jobs[j].finished) {
        sum += job_end[j];
        ++n;
      }
    return n == 0 ? s.max_end_scheduled.to_double() : sum / n;
  }

  void refresh_in_play(EnvState& s, int j) const {
    s.in_play[j] = s.eligible.in_play(j);
    for (std::size_t v = 0; v < s.in_play[j].size(); ++v)
      if (!s.in_play[j][v] && s.ops[j][v].status == OpStatus::Unscheduled) {
        s.ops[j][v].status = OpStatus::Pruned;
        s.ops[j][v].ready = false;
      }
  }

  void refresh_remaining(EnvState& s, int j) const {
    const auto& combos = table_->of(j);
    auto& rem = s.remaining_estimate[j];
    rem.assign(combos.size(), 0.0);
    for (std::size_t h = 0; h < combos.size(); ++h)
      for (int v : combos[h].ops)
        if (s.ops[j][v].status == OpStatus::Unscheduled) rem[h] += s.estimates.op_estimate[j][v];
  }

  bool preds_done(const EnvState& s, int j, int v) const {
    for (int u : spec_->jobs[j].predecessors(v))
      if (s.in_play[j][u] && s.ops[j][u].status != OpStatus::Done) return false;
    return true;
  }

  void mark_scheduled(EnvState& s, OpRef r) const {
    s.eligible.prune(r);
    refresh_in_play(s, r.job);
    refresh_remaining(s, r.job);
  }

  void start_op(EnvState& s, OpRef r, MachineId m) const {
    const Time p = *spec_->jobs[r.job].op(r.op).time_on(m);
    auto& st = s.ops[r.job][r.op];
    st.status = OpStatus::InProgress;
    st.machine = m;
    st.start = s.clock;
    st.end = s.clock + p;
    st.ready = false;
    s.machines[m].current = r;
    s.machines[m].busy_until = st.end;
    s.jobs[r.job].running = r.op;
    s.jobs[r.job].busy_until = st.end;
    ++s.in_progress;
    s.max_end_scheduled = std::max(s.max_end_scheduled, st.end);
    s.partial.records.push_back({r, m, st.start, st.end});
    mark_scheduled(s, r);
  }

  // Completes zero-time nodes that became feasible and refreshes the ready
  // flags, until nothing changes.
  void settle(EnvState& s) const {
    const auto& spec = *spec_;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int j = 0; j < spec.job_count(); ++j) {
        const auto& job = spec.jobs[j];
        for (int v : job.topological_order()) {
          auto& st = s.ops[j][v];
          if (st.status != OpStatus::Unscheduled) continue;
          const bool feasible = preds_done(s, j, v);
          if (feasible && job.op(v).zero_time()) {
            st.status = OpStatus::Done;
            st.start = st.end = s.clock;
            st.ready = false;
            mark_scheduled(s, {j, v});
            if (v == job.end()) {
              s.jobs[j].finished = true;
              s.jobs[j].finish_time = std::max(s.jobs[j].last_end, Time{});
            }
            changed = true;
          } else if (feasible && !st.ready) {
            st.ready = true;
            st.ready_since = s.clock;
          } else if (!feasible) {
            st.ready = false;
          }
        }
      }
    }
  }

  // Jumps to the nearest completion time and applies every completion there.
  void advance(EnvState& s) const {
    Time t = Time::max();
    for (const auto& m : s.machines)
      if (m.busy()) t = std::min(t, m.busy_until);
    if (t == Time::max()) return;
    s.clock = t;
    for (std::size_t k = 0; k < s.machines.size(); ++k) {
      auto& m = s.machines[k];
      if (!m.busy() || m.busy_until != t) continue;
      const OpRef r = m.current;
      auto& st = s.ops[r.job][r.op];
      st.status = OpStatus::Done;
      m.current = {-1, -1};
      m.idle_since = t;
      auto& js = s.jobs[r.job];
      js.running = -1;
      js.last_end = std::max(js.last_end, st.end);
      --s.in_progress;
      s.max_end_done = std::max(s.max_end_done, st.end);
    }
    settle(s);
  }

  void finish_transition(EnvState& s) const {
    s.terminal = std::all_of(s.jobs.begin(), s.jobs.end(), [](const JobState& j) { return j.finished; });
    update_estimates(s);
    if (!s.terminal && s.in_progress == 0 && !has_pair(s))
      throw DeadStateError("no schedulable pair and nothing in progress at t=" + s.clock.str() + " with unfinished jobs");
  }

  void update_estimates(EnvState& s) const {
    auto& t = s.estimates;
    const auto& spec = *spec_;
    t.combination_end.resize(spec.jobs.size());
    t.job_end.resize(spec.jobs.size());
    for (int j = 0; j < spec.job_count(); ++j) {
      const auto& combos = table_->of(j);
      t.combination_end[j].assign(combos.size(), std::nullopt);
      if (s.jobs[j].finished) {
        t.job_end[j] = s.jobs[j].finish_time.to_double();
        continue;
      }
      const double base = std::max(s.clock, s.jobs[j].busy_until).to_double();
      double agg = 0;
      int count = 0;
      for (std::size_t h = 0; h < combos.size(); ++h) {
        if (!s.eligible.alive(j, static_cast<int>(h))) continue;
        const double end = base + s.remaining_estimate[j][h];
        t.combination_end[j][h] = end;
        agg = count == 0 ? end : (t.config.job == Aggregate::Min ? std::min(agg, end) : agg + end);
        ++count;
      }
      t.job_end[j] = t.config.job == Aggregate::Mean && count > 0 ? agg / count : agg;
    }
    t.total = aggregate_total(s, t.job_end, t.config.total);
  }

  std::shared_ptr<const InstanceSpec> spec_;
  std::shared_ptr<const CombinationTable> table_;
  RewardConfig reward_;
};

using Policy = std::function<Action(const Environment&, const EnvState&)>;

struct RolloutResult {
  Schedule schedule;
  Time makespan;
  double reward_sum = 0;
  double naive_reward_sum = 0;
  double estimated_reward_sum = 0;
  int steps = 0;
  EnvState final_state;
};

inline RolloutResult rollout(const Environment& env, const Policy& policy, const std::vector<int>& preselect = {}) {
  RolloutResult out;
  EnvState s = env.reset(preselect);
  while (!s.terminal) {
    const Action a = policy(env, s);
    const auto r = env.step(s, a);
    out.reward_sum += r.reward;
    out.naive_reward_sum += r.naive_reward;
    out.estimated_reward_sum += r.estimated_reward;
    ++out.steps;
  }
  out.schedule = s.partial;
  out.makespan = s.partial.makespan();
  out.final_state = std::move(s);
  return out;
}

inline RolloutResult rollout(const InstanceSpec& spec, const Policy& policy, RewardConfig reward = {}) {
  return rollout(Environment(spec, reward), policy);
}

// Uniform over the action space. With allow_wait=false, Wait is only taken
// when it is the sole action.
inline Policy random_policy(std::shared_ptr<Rng> rng, bool allow_wait = true) {
  return [rng = std::move(rng), allow_wait](const Environment& env, const EnvState& s) {
    auto actions = allow_wait ? env.action_space(s) : env.pairs(s);
    if (actions.empty()) actions = env.action_space(s);
    return actions[uniform_index(*rng, actions.size())];
  };
}

}  // namespace ipps
