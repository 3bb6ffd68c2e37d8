#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "ipps/combination.hpp"
#include "ipps/instance.hpp"
#include "ipps/schedule.hpp"

namespace ipps {

// Mixed-integer model of an instance: combination selection Y, machine
// assignment X, completion times C, same-job order Z, same-machine order W
// and the makespan. Exported as CPLEX LP text.

struct MilpVar {
  enum class Type { Continuous, Binary };
  std::string name;
  Type type = Type::Continuous;
};

struct MilpConstraint {
  enum class Sense { Le, Ge, Eq };
  std::string tag;  // constraint family
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::Ge;
  double rhs = 0;
};

struct MilpModel {
  std::vector<MilpVar> vars;
  std::vector<MilpConstraint> constraints;
  std::map<std::string, int> index;
  double big_m = 0;
  int objective = -1;  // Cmax

  int add_var(std::string name, MilpVar::Type t) {
    const int id = static_cast<int>(vars.size());
    index.emplace(name, id);
    vars.push_back({std::move(name), t});
    return id;
  }
  // Repeated variables are merged so each appears once per row.
  void add(MilpConstraint c) {
    std::map<int, double> sum;
    for (const auto& [v, coef] : c.terms) sum[v] += coef;
    std::vector<std::pair<int, double>> terms;
    for (const auto& t : c.terms)
      if (auto it = sum.find(t.first); it != sum.end()) {
        if (it->second != 0) terms.push_back(*it);
        sum.erase(it);
      }
    c.terms = std::move(terms);
    constraints.push_back(std::move(c));
  }
  int var(const std::string& name) const { return index.at(name); }
  std::size_t count(const std::string& tag) const {
    std::size_t n = 0;
    for (const auto& c : constraints) n += c.tag == tag;
    return n;
  }
};

// Sum over regular ops of their largest processing time, plus one. Every
// semi-active schedule ends before this horizon.
inline double big_m(const InstanceSpec& spec) {
  Time sum;
  for (const auto& job : spec.jobs)
    for (const auto& o : job.ops())
      if (o.kind == NodeKind::Regular) sum = sum + o.max_time();
  return sum.to_double() + 1.0;
}

namespace detail {

inline std::string milp_name(const char* prefix, std::initializer_list<int> idx) {
  std::string s = prefix;
  for (int i : idx) s += "_" + std::to_string(i);
  return s;
}

// reach[u][v]: a directed path u -> v exists in the job graph.
inline std::vector<std::vector<bool>> transitive_closure(const JobGraph& job) {
  const int n = job.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  const auto& topo = job.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it)
    for (int w : job.successors(*it)) {
      reach[*it][w] = true;
      for (int x = 0; x < n; ++x)
        if (reach[w][x]) reach[*it][x] = true;
    }
  return reach;
}

inline std::string lp_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

}  // namespace detail

inline MilpModel build_model(const InstanceSpec& spec, const CombinationTable& table) {
  using T = MilpVar::Type;
  using S = MilpConstraint::Sense;
  MilpModel m;
  const double A = big_m(spec);
  m.big_m = A;
  const int J = spec.job_count();

  // Regular op positions per combination, in position order.
  auto regular_ops = [&](int i, int h) {
    std::vector<int> out;
    for (int v : table.of(i)[h].ops)
      if (spec.jobs[i].op(v).kind == NodeKind::Regular) out.push_back(v);
    return out;
  };
  auto id = [&](int i, int v) { return spec.jobs[i].op(v).id; };

  for (int i = 0; i < J; ++i)
    for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h) m.add_var(detail::milp_name("Y", {i, h}), T::Binary);
  for (int i = 0; i < J; ++i)
    for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h)
      for (int v : regular_ops(i, h)) {
        m.add_var(detail::milp_name("C", {i, h, id(i, v)}), T::Continuous);
        for (const auto& opt : spec.jobs[i].op(v).machines) m.add_var(detail::milp_name("X", {i, h, id(i, v), opt.machine}), T::Binary);
      }
  m.objective = m.add_var("Cmax", T::Continuous);

  auto X = [&](int i, int h, int v, int k) { return m.var(detail::milp_name("X", {i, h, id(i, v), k})); };
  auto C = [&](int i, int h, int v) { return m.var(detail::milp_name("C", {i, h, id(i, v)})); };
  auto Y = [&](int i, int h) { return m.var(detail::milp_name("Y", {i, h})); };
  // sum_k P_ivk X_ihvk as terms with an extra coefficient.
  auto duration_terms = [&](int i, int h, int v, double sign, std::vector<std::pair<int, double>>& terms) {
    for (const auto& opt : spec.jobs[i].op(v).machines) terms.push_back({X(i, h, v, opt.machine), sign * opt.time.to_double()});
  };

  for (int i = 0; i < J; ++i) {
    MilpConstraint c{"select-one", {}, S::Eq, 1};
    for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h) c.terms.push_back({Y(i, h), 1});
    m.add(std::move(c));
  }

  for (int i = 0; i < J; ++i)
    for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h)
      for (int v : regular_ops(i, h)) {
        MilpConstraint assign{"assign-machine", {}, S::Eq, 0};
        for (const auto& opt : spec.jobs[i].op(v).machines) assign.terms.push_back({X(i, h, v, opt.machine), 1});
        assign.terms.push_back({Y(i, h), -1});
        m.add(std::move(assign));
        m.add({"inactive-zero", {{Y(i, h), A}, {C(i, h, v), -1}}, S::Ge, 0});
        MilpConstraint dur{"duration", {{C(i, h, v), 1}}, S::Ge, 0};
        duration_terms(i, h, v, -1, dur.terms);
        m.add(std::move(dur));
        m.add({"makespan", {{m.objective, 1}, {C(i, h, v), -1}}, S::Ge, 0});
      }

  // Immediate precedence inside each combination, looking through zero-time nodes.
  for (int i = 0; i < J; ++i)
    for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h)
      for (int v : regular_ops(i, h))
        for (int u : regular_prerequisites(spec.jobs[i], table.of(i)[h].member, v)) {
          MilpConstraint c{"precedence", {{C(i, h, v), 1}, {C(i, h, u), -1}}, S::Ge, 0};
          duration_terms(i, h, v, -1, c.terms);
          m.add(std::move(c));
        }

  // Same-job order for ops not ordered by the graph.
  for (int i = 0; i < J; ++i) {
    const auto& job = spec.jobs[i];
    const auto reach = detail::transitive_closure(job);
    for (int a = 0; a < job.size(); ++a)
      for (int b = a + 1; b < job.size(); ++b) {
        if (job.op(a).kind != NodeKind::Regular || job.op(b).kind != NodeKind::Regular || reach[a][b] || reach[b][a]) continue;
        const int zab = m.add_var(detail::milp_name("Z", {i, id(i, a), id(i, b)}), T::Binary);
        const int zba = m.add_var(detail::milp_name("Z", {i, id(i, b), id(i, a)}), T::Binary);
        m.add({"job-order-pair", {{zab, 1}, {zba, 1}}, S::Eq, 1});
        for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h) {
          const auto& c = table.of(i)[h];
          if (!c.contains(a) || !c.contains(b)) continue;
          for (auto [x, y, z] : {std::tuple{a, b, zab}, std::tuple{b, a, zba}}) {
            // C_y >= C_x + p_y - A (1 - Z_xy)
            MilpConstraint k{"job-disjunctive", {{C(i, h, y), 1}, {C(i, h, x), -1}, {z, -A}}, S::Ge, -A};
            duration_terms(i, h, y, -1, k.terms);
            m.add(std::move(k));
          }
        }
      }
  }

  // Same-machine order between ops of different jobs.
  for (int i = 0; i < J; ++i)
    for (int i2 = i + 1; i2 < J; ++i2)
      for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h)
        for (int h2 = 0; h2 < static_cast<int>(table.of(i2).size()); ++h2)
          for (int v : regular_ops(i, h))
            for (int v2 : regular_ops(i2, h2)) {
              int w = -1;
              for (const auto& o1 : spec.jobs[i].op(v).machines) {
                const auto p2 = spec.jobs[i2].op(v2).time_on(o1.machine);
                if (!p2) continue;
                const int k = o1.machine;
                if (w < 0) w = m.add_var(detail::milp_name("W", {i, h, id(i, v), i2, h2, id(i2, v2)}), T::Binary);
                const int x1 = X(i, h, v, k), x2 = X(i2, h2, v2, k);
                // W = 1: (i,v) before (i2,v2).
                m.add({"machine-disjunctive",
                                         {{C(i2, h2, v2), 1}, {C(i, h, v), -1}, {x2, -p2->to_double()}, {w, -A}, {x1, -A}, {x2, -A}},
                                         S::Ge,
                                         -3 * A});
                m.add({"machine-disjunctive",
                                         {{C(i, h, v), 1}, {C(i2, h2, v2), -1}, {x1, -o1.time.to_double()}, {w, A}, {x1, -A}, {x2, -A}},
                                         S::Ge,
                                         -2 * A});
              }
            }
  return m;
}

inline MilpModel build_model(const InstanceSpec& spec) { return build_model(spec, *CombinationTable::build(spec)); }

inline std::string export_lp(const MilpModel& m, const std::string& title = "") {
  std::ostringstream os;
  if (!title.empty()) os << "\\ " << title << "\n";
  os << "\\ big-M " << detail::lp_number(m.big_m) << "\n";
  os << "Minimize\n obj: " << m.vars[m.objective].name << "\nSubject To\n";
  std::map<std::string, int> seq;
  for (const auto& c : m.constraints) {
    std::string tag = c.tag;
    for (auto& ch : tag)
      if (ch == '-') ch = '_';
    os << " " << tag << "_" << seq[c.tag]++ << ":";
    for (const auto& [v, coef] : c.terms) {
      os << (coef < 0 ? " - " : " + ");
      const double a = std::fabs(coef);
      if (a != 1) os << detail::lp_number(a) << " ";
      os << m.vars[v].name;
    }
    os << (c.sense == MilpConstraint::Sense::Eq ? " = " : c.sense == MilpConstraint::Sense::Ge ? " >= " : " <= ")
       << detail::lp_number(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : m.vars)
    if (v.type == MilpVar::Type::Continuous) os << " " << v.name << " >= 0\n";
  os << "Binaries\n";
  for (const auto& v : m.vars)
    if (v.type == MilpVar::Type::Binary) os << " " << v.name << "\n";
  os << "End\n";
  return os.str();
}

// Solver output: {"status": "...", "objective": v, "values": {"name": value, ...}}.
struct MilpCheck {
  bool complete = false;        // every variable has a value
  bool model_feasible = false;  // all constraints hold within tolerance
  bool schedule_feasible = false;
  bool makespan_consistent = false;  // Cmax equals the reconstructed makespan
  Schedule schedule;
  Time makespan;
  double cmax = 0;
  std::vector<std::string> problems;

  bool ok() const { return complete && model_feasible && schedule_feasible && makespan_consistent; }
};

inline MilpCheck check_solution(const InstanceSpec& spec, const CombinationTable& table, const MilpModel& m,
                                const std::map<std::string, double>& values, double tol = 1e-6) {
  MilpCheck out;
  std::vector<double> x(m.vars.size(), 0.0);
  out.complete = true;
  for (std::size_t v = 0; v < m.vars.size(); ++v) {
    auto it = values.find(m.vars[v].name);
    if (it == values.end()) {
      out.complete = false;
      out.problems.push_back("missing value for " + m.vars[v].name);
      continue;
    }
    x[v] = it->second;
    if (m.vars[v].type == MilpVar::Type::Binary && std::fabs(x[v] - std::round(x[v])) > tol)
      out.problems.push_back(m.vars[v].name + " is not integral");
  }
  out.model_feasible = out.problems.empty();
  const double scale_tol = tol * std::max(1.0, m.big_m);
  for (std::size_t c = 0; c < m.constraints.size(); ++c) {
    const auto& con = m.constraints[c];
    double lhs = 0;
    for (const auto& [v, coef] : con.terms) lhs += coef * x[v];
    const bool ok = con.sense == MilpConstraint::Sense::Eq   ? std::fabs(lhs - con.rhs) <= scale_tol
                    : con.sense == MilpConstraint::Sense::Ge ? lhs >= con.rhs - scale_tol
                                                             : lhs <= con.rhs + scale_tol;
    if (!ok) {
      out.model_feasible = false;
      out.problems.push_back("constraint " + con.tag + " #" + std::to_string(c) + " violated");
    }
  }

  // Reconstruct the schedule from Y, X and C.
  bool rebuilt = true;
  for (int i = 0; i < spec.job_count() && rebuilt; ++i) {
    int chosen = -1;
    for (int h = 0; h < static_cast<int>(table.of(i).size()); ++h)
      if (std::lround(x[m.var(detail::milp_name("Y", {i, h}))]) == 1) {
        if (chosen >= 0) out.problems.push_back("job " + std::to_string(i) + " selects several combinations");
        chosen = h;
      }
    if (chosen < 0) {
      out.problems.push_back("job " + std::to_string(i) + " selects no combination");
      rebuilt = false;
      break;
    }
    for (int v : table.of(i)[chosen].ops) {
      const auto& node = spec.jobs[i].op(v);
      if (node.kind != NodeKind::Regular) continue;
      MachineId k = -1;
      for (const auto& opt : node.machines)
        if (std::lround(x[m.var(detail::milp_name("X", {i, chosen, node.id, opt.machine}))]) == 1) k = opt.machine;
      if (k < 0) {
        out.problems.push_back("job " + std::to_string(i) + " op " + std::to_string(node.id) + " has no machine");
        rebuilt = false;
        break;
      }
      const Time end = Time::from_double(x[m.var(detail::milp_name("C", {i, chosen, node.id}))]);
      const Time p = *node.time_on(k);
      out.schedule.records.push_back({{i, v}, k, end - p, end});
    }
  }
  out.cmax = x[m.objective];
  if (rebuilt) {
    const auto rep = validate_schedule(spec, table, out.schedule);
    out.schedule_feasible = rep.feasible;
    for (const auto& v : rep.violations) out.problems.push_back(v.condition + ": " + v.message);
    out.makespan = rep.makespan;
    out.makespan_consistent = std::fabs(out.cmax - out.makespan.to_double()) <= scale_tol;
    if (!out.makespan_consistent) out.problems.push_back("Cmax differs from the reconstructed makespan");
  }
  return out;
}

inline std::map<std::string, double> solution_values_from_json(const nlohmann::json& doc) {
  const auto& vals = doc.contains("values") ? doc.at("values") : doc;
  if (!vals.is_object()) throw std::invalid_argument("solution: expected an object of variable values");
  std::map<std::string, double> out;
  for (auto it = vals.begin(); it != vals.end(); ++it) {
    if (!it.value().is_number()) throw std::invalid_argument("solution: value of " + it.key() + " is not a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

// Assignment that encodes a given feasible schedule, for round-trip checks.
// Unordered pairs take the order the schedule realises.
inline std::map<std::string, double> values_from_schedule(const InstanceSpec& spec, const CombinationTable& table,
                                                          const MilpModel& m, const Schedule& sched) {
  const auto rep = validate_schedule(spec, table, sched);
  std::map<std::string, double> vals;
  for (const auto& v : m.vars) vals[v.name] = 0;
  std::map<std::pair<int, int>, const ScheduleRecord*> rec;
  for (const auto& r : sched.records) rec[{r.op.job, r.op.op}] = &r;
  auto id = [&](int i, int v) { return spec.jobs[i].op(v).id; };
  for (int i = 0; i < spec.job_count(); ++i) {
    const int h = rep.chosen_combination[i];
    if (h < 0) continue;
    vals[detail::milp_name("Y", {i, h})] = 1;
    for (const auto& r : sched.records) {
      if (r.op.job != i) continue;
      vals[detail::milp_name("X", {i, h, id(i, r.op.op), r.machine})] = 1;
      vals[detail::milp_name("C", {i, h, id(i, r.op.op)})] = r.end.to_double();
    }
  }
  vals["Cmax"] = sched.makespan().to_double();
  auto before = [&](int i, int a, int i2, int b) {
    auto x = rec.find({i, a});
    auto y = rec.find({i2, b});
    if (x == rec.end() || y == rec.end()) return true;
    return x->second->start < y->second->start;
  };
  for (const auto& v : m.vars) {
    int a[6];
    if (std::sscanf(v.name.c_str(), "Z_%d_%d_%d", &a[0], &a[1], &a[2]) == 3 && v.name[0] == 'Z') {
      const auto pa = spec.jobs[a[0]].position_of(a[1]);
      const auto pb = spec.jobs[a[0]].position_of(a[2]);
      vals[v.name] = before(a[0], *pa, a[0], *pb) ? 1 : 0;
    } else if (v.name[0] == 'W' && std::sscanf(v.name.c_str(), "W_%d_%d_%d_%d_%d_%d", &a[0], &a[1], &a[2], &a[3], &a[4], &a[5]) == 6) {
      const auto pa = spec.jobs[a[0]].position_of(a[2]);
      const auto pb = spec.jobs[a[3]].position_of(a[5]);
      vals[v.name] = before(a[0], *pa, a[3], *pb) ? 1 : 0;
    }
  }
  // Both members of a Z pair: the second is the complement of the first when only one was ordered.
  for (const auto& v : m.vars)
    if (v.name[0] == 'Z') {
      int i, p, q;
      std::sscanf(v.name.c_str(), "Z_%d_%d_%d", &i, &p, &q);
      const auto other = detail::milp_name("Z", {i, q, p});
      if (vals[v.name] + vals[other] != 1) vals[other] = 1 - vals[v.name];
    }
  return vals;
}

struct ExternalSolution {
  std::string status;
  std::optional<double> objective;
  std::map<std::string, double> values;
};

inline bool python_module_available(const std::string& module) {
  const std::string cmd = "python3 -c 'import " + module + "' >/dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

// Writes the LP to a temp file, runs the solver script and parses its JSON.
// Returns nothing when the script fails to produce a solution.
inline std::optional<ExternalSolution> solve_with_script(const std::string& lp_text, const std::string& script,
                                                         double time_limit = 60) {
  namespace fs = std::filesystem;
  static int counter = 0;
  const auto dir = fs::temp_directory_path();
  const auto stem = "ipps-milp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const auto lp = dir / (stem + ".lp");
  const auto out = dir / (stem + ".json");
  std::ofstream(lp) << lp_text;
  const std::string cmd = "python3 '" + script + "' '" + lp.string() + "' -o '" + out.string() +
                          "' --time-limit " + std::to_string(time_limit) + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  std::optional<ExternalSolution> sol;
  if (rc == 0 && fs::exists(out)) {
    std::ifstream in(out);
    const auto doc = nlohmann::json::parse(in);
    ExternalSolution s;
    s.status = doc.value("status", "");
    if (doc.contains("objective") && doc["objective"].is_number()) s.objective = doc["objective"].get<double>();
    s.values = solution_values_from_json(doc);
    sol = std::move(s);
  }
  std::error_code ec;
  fs::remove(lp, ec);
  fs::remove(out, ec);
  return sol;
}

}  // namespace ipps
