#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipps/ipps.hpp"

using namespace ipps;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

ojson combinations_json(const InstanceSpec& spec) {
  const auto table = CombinationTable::build(spec);
  ojson jobs = ojson::array();
  for (int j = 0; j < spec.job_count(); ++j) {
    ojson sets = ojson::array();
    for (const auto& c : table->of(j)) {
      ojson ids = ojson::array();
      for (int v : c.ops)
        if (spec.jobs[j].op(v).kind == NodeKind::Regular) ids.push_back(spec.jobs[j].op(v).id);
      sets.push_back(std::move(ids));
    }
    jobs.push_back({{"job", j}, {"count", table->of(j).size()}, {"combinations", std::move(sets)}});
  }
  return {{"instance", spec.name}, {"jobs", std::move(jobs)}};
}

ojson rule_table_json(const RuleTableRow& row) {
  ojson cells = ojson::array();
  for (std::size_t c = 0; c < row.results.size(); ++c)
    cells.push_back({{"rule", row.rules[c].name()}, {"makespan", detail::time_json(row.results[c].best.makespan)}});
  return {{"cells", std::move(cells)},
          {"best_choice", detail::time_json(row.best_choice)},
          {"best_choice_rule", row.rules[row.best_cell].name()}};
}

std::vector<BenchInstance> load_suite(const std::string& suite, const std::string& kim_dir) {
  std::vector<BenchInstance> out;
  if (suite == "kim") {
    const auto s = kim::load_suite(kim_dir);
    if (!s.complete()) {
      std::string why = s.missing.empty() ? s.errors.front() : "missing " + s.missing.front();
      throw std::runtime_error("kim suite incomplete (" + std::to_string(s.missing.size()) + " missing, " +
                               std::to_string(s.errors.size()) + " unreadable): " + why);
    }
    for (int k = 0; k < kim::kProblems; ++k)
      out.push_back({kim::problem_file(k + 1), s.instances[k], Time::units(kim::kLowerBound[k])});
    return out;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(suite))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back({f.filename().string(), load_instance(f.string()), std::nullopt});
  if (out.empty()) throw std::runtime_error("no .json instances in " + suite);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated process planning and scheduling engine"};
  app.require_subcommand(1);

  std::string instance, second, output, reward = "naive";

  auto* combos = app.add_subcommand("combinations", "List the combinations of every job");
  combos->add_option("instance", instance)->required();

  auto* validate = app.add_subcommand("validate", "Check an instance, and a schedule against it");
  validate->add_option("instance", instance)->required();
  validate->add_option("schedule", second);

  std::string policy = "random";
  int seeds = 1;
  std::uint64_t seed = 0;
  auto* roll = app.add_subcommand("rollout", "Random rollouts in the environment, one JSON line each");
  roll->add_option("instance", instance)->required();
  roll->add_option("--policy", policy)->check(CLI::IsMember({"random", "no-wait-random"}));
  roll->add_option("--seeds", seeds);
  roll->add_option("--seed", seed, "first seed");
  roll->add_option("--reward", reward);

  std::string transport = "stdio";
  auto* serve = app.add_subcommand("serve", "Serve the environment over the line protocol");
  serve->add_option("instance", instance)->required();
  serve->add_option("--transport", transport, "stdio or tcp:<port>");
  serve->add_option("--reward", reward);

  std::string op_rule = "MWKR", machine_rule = "SPT";
  int repeats = 50;
  bool all_rules = false;
  auto* greedy = app.add_subcommand("greedy", "Dispatching-rule baseline");
  greedy->add_option("instance", instance)->required();
  greedy->add_option("--op-rule", op_rule);
  greedy->add_option("--machine-rule", machine_rule);
  greedy->add_option("--repeats", repeats);
  greedy->add_option("--seed", seed);
  greedy->add_flag("--all-rules", all_rules);

  int jobs = -1, machines = -1, count = 1;
  std::string cfg_file;
  bool tiny = false;
  auto* gen = app.add_subcommand("generate", "Generate instances");
  gen->add_option("--jobs", jobs);
  gen->add_option("--machines", machines);
  gen->add_option("--seed", seed);
  gen->add_option("--cfg", cfg_file, "generator config JSON");
  gen->add_flag("--tiny", tiny, "small preset for exact search");
  gen->add_option("--count", count, "instances to emit; seeds seed..seed+count-1, -o is a directory");
  gen->add_option("-o,--output", output);

  auto* export_milp = app.add_subcommand("export-milp", "Write the MILP model as CPLEX LP text");
  export_milp->add_option("instance", instance)->required();
  export_milp->add_option("-o,--output", output);

  auto* check_milp = app.add_subcommand("check-milp", "Check a solver solution against the model");
  check_milp->add_option("instance", instance)->required();
  check_milp->add_option("solution", second)->required();

  std::string suite = "kim", methods = "greedy:all", kim_dir = "data/kim", reference = "auto";
  int threads = 0;
  auto* bench = app.add_subcommand("bench", "Run methods over a suite");
  bench->add_option("--suite", suite, "kim or a directory of instances");
  bench->add_option("--kim-dir", kim_dir);
  bench->add_option("--methods", methods, "comma separated");
  bench->add_option("--repeats", repeats);
  bench->add_option("--seed", seed);
  bench->add_option("--threads", threads);
  bench->add_option("--reference", reference, "auto, oracle, lb or none");
  bench->add_option("-o,--output", output);

  bool no_wait = false;
  auto* oracle = app.add_subcommand("oracle", "Exact optimum for tiny instances");
  oracle->add_option("instance", instance)->required();
  oracle->add_flag("--env", "also search every environment trajectory");
  oracle->add_flag("--no-wait", no_wait, "environment search without Wait");

  auto* canon = app.add_subcommand("canonicalize", "Move starts onto event times");
  canon->add_option("instance", instance)->required();
  canon->add_option("schedule", second)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*combos) {
      std::cout << combinations_json(load_instance(instance)).dump(1) << "\n";
    } else if (*validate) {
      const auto spec = load_instance(instance);
      ojson out{{"instance", spec.name}, {"valid", true}};
      if (!second.empty()) {
        const auto rep = validate_schedule(spec, schedule_from_json(spec, read_json(second)));
        ojson v = ojson::array();
        for (const auto& x : rep.violations) v.push_back({{"condition", x.condition}, {"message", x.message}});
        out["feasible"] = rep.feasible;
        out["makespan"] = detail::time_json(rep.makespan);
        out["violations"] = std::move(v);
        std::cout << out.dump(1) << "\n";
        return rep.feasible ? 0 : 1;
      }
      std::cout << out.dump(1) << "\n";
    } else if (*roll) {
      const Environment env(load_instance(instance), RewardConfig::parse(reward));
      for (int k = 0; k < seeds; ++k) {
        auto rng = std::make_shared<Rng>(seed + static_cast<std::uint64_t>(k));
        const auto r = rollout(env, random_policy(rng, policy == "random"));
        ojson line{{"seed", seed + static_cast<std::uint64_t>(k)},
                   {"makespan", detail::time_json(r.makespan)},
                   {"reward_sum", r.reward_sum},
                   {"steps", r.steps},
                   {"schedule", schedule_to_json(env.spec(), r.schedule)}};
        std::cout << line.dump() << "\n";
      }
    } else if (*serve) {
      Session session{Environment(load_instance(instance), RewardConfig::parse(reward))};
      if (transport == "stdio") {
        serve_stream(session, std::cin, std::cout);
      } else if (transport.rfind("tcp:", 0) == 0) {
        TcpListener listener(std::stoi(transport.substr(4)));
        std::cerr << "listening on 127.0.0.1:" << listener.port() << std::endl;
        serve_tcp(session, listener);
      } else {
        throw std::invalid_argument("transport must be stdio or tcp:<port>");
      }
    } else if (*greedy) {
      const auto spec = load_instance(instance);
      const auto table = CombinationTable::build(spec);
      if (all_rules) {
        auto out = rule_table_json(solve_all_rules(spec, *table, repeats, seed));
        out["instance"] = spec.name;
        std::cout << out.dump(1) << "\n";
      } else {
        const RuleConfig rc{parse_op_rule(op_rule), parse_machine_rule(machine_rule), repeats, seed};
        const auto res = solve_greedy(spec, *table, rc);
        ojson out{{"instance", spec.name},
                  {"rule", rc.name()},
                  {"makespan", detail::time_json(res.best.makespan)},
                  {"best_repeat", res.best_repeat},
                  {"schedule", schedule_to_json(spec, res.best.schedule)}};
        std::cout << out.dump(1) << "\n";
      }
    } else if (*gen) {
      GenConfig cfg = tiny ? tiny_gen_config() : GenConfig{};
      if (!cfg_file.empty()) cfg = gen_config_from_json(read_json(cfg_file));
      if (jobs >= 0) cfg.jobs = jobs;
      if (machines >= 0) cfg.machines = machines;
      if (count <= 1) {
        write_text(output, serialize_instance(generate_instance(cfg, seed)));
      } else {
        if (output.empty()) throw std::invalid_argument("--count > 1 needs -o <directory>");
        fs::create_directories(output);
        for (int k = 0; k < count; ++k) {
          const auto spec = generate_instance(cfg, seed + static_cast<std::uint64_t>(k));
          save_instance(spec, (fs::path(output) / (spec.name + ".json")).string());
        }
      }
    } else if (*export_milp) {
      const auto spec = load_instance(instance);
      write_text(output, export_lp(build_model(spec), spec.name));
    } else if (*check_milp) {
      const auto spec = load_instance(instance);
      const auto table = CombinationTable::build(spec);
      const auto model = build_model(spec, *table);
      const auto chk = check_solution(spec, *table, model, solution_values_from_json(read_json(second)));
      ojson out{{"ok", chk.ok()},
                {"complete", chk.complete},
                {"model_feasible", chk.model_feasible},
                {"schedule_feasible", chk.schedule_feasible},
                {"makespan_consistent", chk.makespan_consistent},
                {"cmax", chk.cmax},
                {"problems", chk.problems}};
      if (chk.schedule_feasible) {
        out["makespan"] = detail::time_json(chk.makespan);
        out["schedule"] = schedule_to_json(spec, chk.schedule);
      }
      std::cout << out.dump(1) << "\n";
      return chk.ok() ? 0 : 1;
    } else if (*bench) {
      BenchConfig cfg;
      cfg.methods.clear();
      std::stringstream ss(methods);
      for (std::string m; std::getline(ss, m, ',');)
        if (!m.empty()) cfg.methods.push_back(m);
      cfg.repeats = repeats;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.reference = parse_gap_reference(reference);
      const auto instances = load_suite(suite, kim_dir);
      const auto rep = run_bench(instances, cfg);
      for (const auto& n : rep.notices) std::cerr << "notice: " << n << "\n";
      for (const auto& a : rep.aggregates)
        std::cerr << a.method << ": mean makespan " << a.mean_makespan
                  << (a.mean_gap ? ", mean gap " + std::to_string(*a.mean_gap) : std::string()) << "\n";
      write_text(output, bench_report_to_json(rep, instances).dump(1) + "\n");
    } else if (*oracle) {
      const auto spec = load_instance(instance);
      const auto res = brute_force_optimum(spec);
      ojson out{{"instance", spec.name},
                {"makespan", detail::time_json(res.makespan)},
                {"combinations", res.combinations},
                {"schedule", schedule_to_json(spec, res.schedule)}};
      if (oracle->count("--env") > 0 || no_wait) {
        const auto env_res = exhaustive_env_search(Environment(spec), !no_wait);
        out["env_makespan"] = detail::time_json(env_res.makespan);
        out["env_wait"] = !no_wait;
      }
      std::cout << out.dump(1) << "\n";
    } else if (*canon) {
      const auto spec = load_instance(instance);
      const auto table = CombinationTable::build(spec);
      const auto in = schedule_from_json(spec, read_json(second));
      const auto out = canonicalize(spec, *table, in);
      const auto replay = replay_schedule(Environment(spec), out);
      ojson doc{{"makespan_before", detail::time_json(in.makespan())},
                {"makespan", detail::time_json(out.makespan())},
                {"replayable", replay.ok},
                {"schedule", schedule_to_json(spec, out)}};
      std::cout << doc.dump(1) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
