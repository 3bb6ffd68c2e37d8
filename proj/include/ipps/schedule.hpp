#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ipps/combination.hpp"
#include "ipps/instance.hpp"
#include "ipps/instance_io.hpp"

namespace ipps {

struct ScheduleRecord {
  OpRef op;
  MachineId machine = 0;
  Time start;
  Time end;
  friend bool operator==(const ScheduleRecord&, const ScheduleRecord&) = default;
};

// Records of regular operations only; zero-time nodes are implied.
struct Schedule {
  std::vector<ScheduleRecord> records;

  Time makespan() const {
    Time m;
    for (const auto& r : records) m = std::max(m, r.end);
    return m;
  }

  void sort_by_start() {
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
      if (a.start != b.start) return a.start < b.start;
      return std::tie(a.op, a.machine) < std::tie(b.op, b.machine);
    });
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

inline nlohmann::ordered_json schedule_to_json(const InstanceSpec& spec, const Schedule& s) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : s.records) {
    nlohmann::ordered_json j;
    j["job"] = r.op.job;
    j["op"] = spec.jobs[static_cast<std::size_t>(r.op.job)].op(r.op.op).id;
    j["machine"] = r.machine;
    j["start"] = detail::time_json(r.start);
    j["end"] = detail::time_json(r.end);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline Schedule schedule_from_json(const InstanceSpec& spec, const nlohmann::json& arr) {
  const nlohmann::json* records = &arr;
  if (arr.is_object()) records = &detail::field(arr, "schedule", "schedule document");
  if (!records->is_array()) throw ParseError("schedule: expected an array of records");
  Schedule s;
  for (std::size_t i = 0; i < records->size(); ++i) {
    const auto& r = (*records)[i];
    const std::string w = "schedule[" + std::to_string(i) + "]";
    const int job = detail::field(r, "job", w).get<int>();
    if (job < 0 || job >= spec.job_count()) throw ParseError(w + ": unknown job");
    const int id = detail::field(r, "op", w).get<int>();
    auto pos = spec.jobs[static_cast<std::size_t>(job)].position_of(id);
    if (!pos) throw ParseError(w + ": unknown operation id " + std::to_string(id));
    ScheduleRecord rec;
    rec.op = {job, *pos};
    rec.machine = detail::field(r, "machine", w).get<int>();
    rec.start = detail::time_from_json(detail::field(r, "start", w), w + ".start");
    rec.end = detail::time_from_json(detail::field(r, "end", w), w + ".end");
    s.records.push_back(rec);
  }
  return s;
}

// Nearest regular ancestors of x inside a combination, looking through
// zero-time nodes.
inline std::vector<int> regular_prerequisites(const JobGraph& job, const std::vector<bool>& member, int x) {
  std::vector<int> out;
  std::vector<bool> seen(static_cast<std::size_t>(job.size()), false);
  std::vector<int> stack(job.predecessors(x).begin(), job.predecessors(x).end());
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(u)] || !member[static_cast<std::size_t>(u)]) continue;
    seen[static_cast<std::size_t>(u)] = true;
    if (job.op(u).kind == NodeKind::Regular) {
      out.push_back(u);
    } else {
      for (int p : job.predecessors(u)) stack.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Violation {
  std::string condition;  // machine-overlap, job-overlap, precedence, combination, ...
  std::string message;
  int record = -1;
  int other = -1;
};

struct ScheduleReport {
  bool feasible = false;
  Time makespan;
  std::vector<Violation> violations;
  std::vector<int> chosen_combination;  // per job, -1 when none matches
};

inline ScheduleReport validate_schedule(const InstanceSpec& spec, const CombinationTable& table, const Schedule& sched) {
  ScheduleReport rep;
  const auto& recs = sched.records;
  auto add = [&](std::string cond, std::string msg, int a = -1, int b = -1) {
    rep.violations.push_back({std::move(cond), std::move(msg), a, b});
  };
  auto name = [&](int i) {
    const auto& r = recs[static_cast<std::size_t>(i)];
    return "record " + std::to_string(i) + " (job " + std::to_string(r.op.job) + " op " +
           std::to_string(spec.jobs[static_cast<std::size_t>(r.op.job)].op(r.op.op).id) + ")";
  };

  std::vector<std::vector<int>> by_job(static_cast<std::size_t>(spec.job_count()));
  for (int i = 0; i < static_cast<int>(recs.size()); ++i) {
    const auto& r = recs[static_cast<std::size_t>(i)];
    if (r.op.job < 0 || r.op.job >= spec.job_count() || r.op.op < 0 ||
        r.op.op >= spec.jobs[static_cast<std::size_t>(r.op.job)].size()) {
      add("reference", "record " + std::to_string(i) + " references an unknown operation", i);
      continue;
    }
    const auto& node = spec.jobs[static_cast<std::size_t>(r.op.job)].op(r.op.op);
    if (node.kind != NodeKind::Regular) {
      add("reference", name(i) + " schedules a zero-time node", i);
      continue;
    }
    auto p = node.time_on(r.machine);
    if (!p) {
      add("machine-capability", name(i) + " runs on machine " + std::to_string(r.machine) + " which cannot process it", i);
    } else if (r.end != r.start + *p) {
      add("duration", name(i) + " end differs from start + processing time", i);
    }
    if (r.start < Time{}) add("duration", name(i) + " starts before 0", i);
    for (int k : by_job[static_cast<std::size_t>(r.op.job)])
      if (recs[static_cast<std::size_t>(k)].op == r.op) add("duplicate", name(i) + " schedules the operation twice", k, i);
    by_job[static_cast<std::size_t>(r.op.job)].push_back(i);
  }

  rep.chosen_combination.assign(static_cast<std::size_t>(spec.job_count()), -1);
  for (int j = 0; j < spec.job_count(); ++j) {
    const auto& job = spec.jobs[static_cast<std::size_t>(j)];
    std::vector<bool> used(static_cast<std::size_t>(job.size()), false);
    for (int i : by_job[static_cast<std::size_t>(j)]) used[static_cast<std::size_t>(recs[static_cast<std::size_t>(i)].op.op)] = true;
    int match = -1;
    const auto& combos = table.of(j);
    for (std::size_t h = 0; h < combos.size() && match < 0; ++h) {
      bool same = true;
      for (int v = 0; v < job.size() && same; ++v)
        if (job.op(v).kind == NodeKind::Regular && used[static_cast<std::size_t>(v)] != combos[h].contains(v)) same = false;
      if (same) match = static_cast<int>(h);
    }
    if (match < 0) {
      add("combination", "job " + std::to_string(j) + ": scheduled operations are not exactly one combination");
      continue;
    }
    rep.chosen_combination[static_cast<std::size_t>(j)] = match;
    std::vector<int> rec_of(static_cast<std::size_t>(job.size()), -1);
    for (int i : by_job[static_cast<std::size_t>(j)]) rec_of[static_cast<std::size_t>(recs[static_cast<std::size_t>(i)].op.op)] = i;
    for (int i : by_job[static_cast<std::size_t>(j)]) {
      const auto& r = recs[static_cast<std::size_t>(i)];
      for (int p : regular_prerequisites(job, combos[static_cast<std::size_t>(match)].member, r.op.op)) {
        const int k = rec_of[static_cast<std::size_t>(p)];
        if (k >= 0 && recs[static_cast<std::size_t>(k)].end > r.start)
          add("precedence", name(i) + " starts before its prerequisite " + name(k) + " ends", k, i);
      }
    }
  }

  for (int a = 0; a < static_cast<int>(recs.size()); ++a)
    for (int b = a + 1; b < static_cast<int>(recs.size()); ++b) {
      const auto& x = recs[static_cast<std::size_t>(a)];
      const auto& y = recs[static_cast<std::size_t>(b)];
      const bool overlap = x.start < y.end && y.start < x.end;
      if (!overlap) continue;
      if (x.machine == y.machine) add("machine-overlap", name(a) + " and " + name(b) + " overlap on machine " + std::to_string(x.machine), a, b);
      if (x.op.job == y.op.job) add("job-overlap", name(a) + " and " + name(b) + " overlap within job " + std::to_string(x.op.job), a, b);
    }

  rep.makespan = sched.makespan();
  rep.feasible = rep.violations.empty();
  return rep;
}

inline ScheduleReport validate_schedule(const InstanceSpec& spec, const Schedule& sched) {
  return validate_schedule(spec, *CombinationTable::build(spec), sched);
}

}  // namespace ipps
