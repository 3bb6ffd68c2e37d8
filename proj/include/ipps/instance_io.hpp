#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ipps/instance.hpp"

namespace ipps {

// Canonical instance format (UTF-8 JSON):
//
//   {
//     "name": "toy",                       optional
//     "machines": 2,
//     "jobs": [
//       { "ops":   [ {"id": 1, "kind": "regular", "machines": [[0, 1], [1, 1]]}, ... ],
//         "edges": [ [from_id, to_id, "AND" | "OR"], ... ] }
//     ]
//   }
//
// "kind" is one of start | end | junction | regular (default regular).
// Machine options are [machine_id, processing_time] pairs; times are
// non-negative numbers kept at three decimal places. Jobs without explicit
// start/end supernodes get them synthesized.

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " at byte " + std::to_string(position)), position_(position) {}
  explicit ParseError(const std::string& message) : std::runtime_error(message) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_ = 0;
};

namespace detail {

inline nlohmann::ordered_json time_json(Time t) {
  if (t.is_integral()) return t.milli() / Time::kScale;
  return t.to_double();
}

inline Time time_from_json(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  if (v.is_number_integer()) return Time::units(v.get<std::int64_t>());
  return Time::from_double(v.get<double>());
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

inline NodeKind kind_from_string(const std::string& s, const std::string& where) {
  if (s == "regular") return NodeKind::Regular;
  if (s == "start") return NodeKind::Start;
  if (s == "end") return NodeKind::End;
  if (s == "junction") return NodeKind::Junction;
  throw ParseError(where + ": unknown node kind '" + s + "'");
}

inline JobGraph job_from_json(const nlohmann::json& j, const std::string& where) {
  const auto& ops_json = field(j, "ops", where);
  if (!ops_json.is_array()) throw ParseError(where + ".ops: expected an array");
  std::vector<OperationNode> ops;
  std::map<int, int> pos_of;
  for (std::size_t i = 0; i < ops_json.size(); ++i) {
    const auto& o = ops_json[i];
    const std::string w = where + ".ops[" + std::to_string(i) + "]";
    const auto& id = field(o, "id", w);
    if (!id.is_number_integer()) throw ParseError(w + ".id: expected an integer");
    OperationNode node;
    node.id = id.get<int>();
    if (auto k = o.find("kind"); k != o.end()) {
      if (!k->is_string()) throw ParseError(w + ".kind: expected a string");
      node.kind = kind_from_string(k->get<std::string>(), w);
    }
    if (auto ms = o.find("machines"); ms != o.end()) {
      if (!ms->is_array()) throw ParseError(w + ".machines: expected an array");
      for (const auto& m : *ms) {
        if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer())
          throw ParseError(w + ".machines: expected [machine_id, time] pairs");
        Time t = time_from_json(m[1], w + ".machines");
        if (t < Time{}) throw InstanceError("positive-time", w + ": negative processing time");
        node.machines.push_back({m[0].get<int>(), t});
      }
    }
    // Supernodes take zero time on every machine; the options carry no information.
    if (node.zero_time()) {
      for (const auto& m : node.machines)
        if (m.time != Time{}) throw InstanceError("supernode-zero-time", w + ": supernode with non-zero processing time");
      node.machines.clear();
    }
    if (!pos_of.emplace(node.id, static_cast<int>(ops.size())).second)
      throw InstanceError("unique-op-id", w + ": duplicate operation id " + std::to_string(node.id));
    ops.push_back(std::move(node));
  }

  std::vector<PrecedenceEdge> edges;
  if (auto es = j.find("edges"); es != j.end()) {
    if (!es->is_array()) throw ParseError(where + ".edges: expected an array");
    for (std::size_t i = 0; i < es->size(); ++i) {
      const auto& e = (*es)[i];
      const std::string w = where + ".edges[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() < 2 || e.size() > 3 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ParseError(w + ": expected [from, to, \"AND\"|\"OR\"]");
      LinkKind kind = LinkKind::And;
      if (e.size() == 3) {
        if (!e[2].is_string()) throw ParseError(w + ": link kind must be a string");
        const auto s = e[2].get<std::string>();
        if (s == "OR" || s == "or") kind = LinkKind::Or;
        else if (s != "AND" && s != "and") throw ParseError(w + ": unknown link kind '" + s + "'");
      }
      auto from = pos_of.find(e[0].get<int>());
      auto to = pos_of.find(e[1].get<int>());
      if (from == pos_of.end() || to == pos_of.end())
        throw InstanceError("edge-endpoints", w + ": edge references an unknown operation id");
      edges.push_back({from->second, to->second, kind});
    }
  }
  synthesize_supernodes(ops, edges);
  try {
    return JobGraph(std::move(ops), std::move(edges));
  } catch (const InstanceError& e) {
    throw InstanceError(e.invariant(), where + ": " + e.what());
  }
}

}  // namespace detail

inline InstanceSpec instance_from_json(const nlohmann::json& doc) {
  InstanceSpec spec;
  if (auto n = doc.find("name"); n != doc.end() && n->is_string()) spec.name = n->get<std::string>();
  const auto& m = detail::field(doc, "machines", "instance");
  if (!m.is_number_integer()) throw ParseError("instance.machines: expected an integer");
  spec.machine_count = m.get<int>();
  const auto& jobs = detail::field(doc, "jobs", "instance");
  if (!jobs.is_array()) throw ParseError("instance.jobs: expected an array");
  for (std::size_t i = 0; i < jobs.size(); ++i) spec.jobs.push_back(detail::job_from_json(jobs[i], "jobs[" + std::to_string(i) + "]"));
  spec.validate();
  return spec;
}

inline InstanceSpec parse_instance(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what(), e.byte);
  }
  return instance_from_json(doc);
}

inline nlohmann::ordered_json job_to_json(const JobGraph& job) {
  nlohmann::ordered_json ops = nlohmann::ordered_json::array();
  for (const auto& o : job.ops()) {
    nlohmann::ordered_json node;
    node["id"] = o.id;
    node["kind"] = to_string(o.kind);
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (const auto& m : o.machines) ms.push_back({m.machine, detail::time_json(m.time)});
    node["machines"] = std::move(ms);
    ops.push_back(std::move(node));
  }
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& e : job.edges()) edges.push_back({job.op(e.from).id, job.op(e.to).id, to_string(e.kind)});
  nlohmann::ordered_json j;
  j["ops"] = std::move(ops);
  j["edges"] = std::move(edges);
  return j;
}

// Deterministic, diff-friendly layout: one operation per line.
inline std::string serialize_instance(const InstanceSpec& spec) {
  std::ostringstream os;
  os << "{\n  \"name\": " << nlohmann::json(spec.name).dump() << ",\n";
  os << "  \"machines\": " << spec.machine_count << ",\n  \"jobs\": [";
  for (std::size_t j = 0; j < spec.jobs.size(); ++j) {
    const auto jj = job_to_json(spec.jobs[j]);
    os << (j ? "," : "") << "\n    {\n      \"ops\": [";
    for (std::size_t i = 0; i < jj["ops"].size(); ++i) os << (i ? "," : "") << "\n        " << jj["ops"][i].dump();
    os << "\n      ],\n      \"edges\": " << jj["edges"].dump() << "\n    }";
  }
  os << (spec.jobs.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return os.str();
}

inline InstanceSpec load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto spec = parse_instance(ss.str());
  if (spec.name.empty()) {
    auto slash = path.find_last_of('/');
    spec.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  }
  return spec;
}

inline void save_instance(const InstanceSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << serialize_instance(spec);
}

}  // namespace ipps
