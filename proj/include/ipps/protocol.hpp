#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ipps/env.hpp"
#include "ipps/graph_state.hpp"
#include "ipps/schedule.hpp"

// Wire protocol, line-delimited JSON, one message per line.
//
//   server -> client
//     {"type":"hello","schema":1,"instance":name,"machines":M,"jobs":J,"reward":cfg,
//      "operations":[{"id":gid,"job":j,"op":external_id}, ...]}
//     {"type":"state","seq":k,"nodes":{...},"edges":{...},"mask":{"pairs":[[op,m],...],"wait":bool},
//      "future_pairs":[[op,m],...],"reward":r,"done":false}
//     {"type":"terminal","seq":k,"reward":r,"done":true,"makespan":T,"schedule":[...]}
//     {"type":"error","code":"unknown-pair"|"stale-seq"|"schema-mismatch"|"bad-message"|"no-episode","message":...}
//
//   client -> server
//     {"type":"act","seq":k,"pair":[op,m]}  or  {"type":"act","seq":k,"wait":true}
//     {"type":"reset"}   {"type":"bye"}
//
// Any client message may carry "schema"; a value other than 1 is rejected.
// An error on "act" aborts the episode; the client may "reset".

namespace ipps {

inline constexpr int kProtocolSchema = 1;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class Session {
 public:
  explicit Session(Environment env) : env_(std::move(env)), encoder_(env_) {}
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const Environment& environment() const { return env_; }
  const GraphEncoder& encoder() const { return encoder_; }
  bool active() const { return state_.has_value() && !state_->terminal; }
  const std::optional<EnvState>& state() const { return state_; }

  nlohmann::json hello() const {
    const auto& spec = env_.spec();
    nlohmann::json ops = nlohmann::json::array();
    for (int j = 0; j < spec.job_count(); ++j)
      for (int v = 0; v < spec.jobs[j].size(); ++v)
        if (spec.jobs[j].op(v).kind == NodeKind::Regular)
          ops.push_back({{"id", encoder_.op_id({j, v})}, {"job", j}, {"op", spec.jobs[j].op(v).id}});
    return {{"type", "hello"},        {"schema", kProtocolSchema}, {"instance", spec.name},
            {"machines", spec.machine_count}, {"jobs", spec.job_count()},  {"reward", env_.reward_config().str()},
            {"operations", std::move(ops)}};
  }

  nlohmann::json reset() {
    state_ = env_.reset();
    seq_ = 0;
    return emit(0.0);
  }

  // Parses an act message against the current state.
  Action read_action(const nlohmann::json& msg) const {
    check_schema(msg);
    if (!state_ || state_->terminal) throw ProtocolError("no-episode", "no episode in progress");
    if (!msg.contains("seq") || !msg["seq"].is_number_integer()) throw ProtocolError("bad-message", "act without integer seq");
    const auto seq = msg["seq"].get<long long>();
    if (seq != seq_) throw ProtocolError("stale-seq", "act seq " + std::to_string(seq) + " does not match state seq " + std::to_string(seq_));
    if (msg.value("wait", false)) {
      if (!env_.wait_legal(*state_)) throw ProtocolError("unknown-pair", "wait is not in the action space");
      return Action::wait();
    }
    if (!msg.contains("pair") || !msg["pair"].is_array() || msg["pair"].size() != 2 || !msg["pair"][0].is_number_integer() ||
        !msg["pair"][1].is_number_integer())
      throw ProtocolError("bad-message", "act needs \"pair\":[op,machine] or \"wait\":true");
    const int op = msg["pair"][0].get<int>();
    const int m = msg["pair"][1].get<int>();
    if (op < 0 || op >= encoder_.op_count() || !env_.pair_legal(*state_, encoder_.op_ref(op), m))
      throw ProtocolError("unknown-pair", "pair [" + std::to_string(op) + "," + std::to_string(m) + "] is not in the current mask");
    return Action::pair(encoder_.op_ref(op), m);
  }

  // Replies to one client message. Returns an empty vector for "bye".
  std::vector<nlohmann::json> handle(const nlohmann::json& msg) {
    try {
      if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
        throw ProtocolError("bad-message", "message without a type");
      const auto type = msg["type"].get<std::string>();
      if (type == "bye") return {};
      check_schema(msg);
      if (type == "reset") return {reset()};
      if (type != "act") throw ProtocolError("bad-message", "unknown message type '" + type + "'");
      const Action a = read_action(msg);
      const auto r = env_.step(*state_, a);
      ++seq_;
      return {emit(r.reward)};
    } catch (const ProtocolError& e) {
      if (msg.is_object() && msg.value("type", "") == "act") state_.reset();
      return {error(e.code(), e.what())};
    }
  }

  static nlohmann::json error(const std::string& code, const std::string& message) {
    return {{"type", "error"}, {"code", code}, {"message", message}};
  }

 private:
  static void check_schema(const nlohmann::json& msg) {
    if (msg.contains("schema") && msg["schema"] != kProtocolSchema)
      throw ProtocolError("schema-mismatch", "schema " + msg["schema"].dump() + " is not supported (expected 1)");
  }

  nlohmann::json emit(double reward) const {
    const auto& s = *state_;
    if (s.terminal) {
      return {{"type", "terminal"}, {"seq", seq_},
              {"reward", reward},   {"done", true},
              {"makespan", detail::time_json(s.partial.makespan())},
              {"schedule", schedule_to_json(env_.spec(), s.partial)}};
    }
    const auto g = encoder_.encode(s);
    return {{"type", "state"},
            {"seq", seq_},
            {"nodes", snapshot_nodes_json(g)},
            {"edges", snapshot_edges_json(g)},
            {"mask", {{"pairs", g.mask}, {"wait", g.wait}}},
            {"future_pairs", g.future_pairs},
            {"reward", reward},
            {"done", false}};
  }

  Environment env_;
  GraphEncoder encoder_;
  std::optional<EnvState> state_;
  long long seq_ = 0;
};

inline HeteroGraphSnapshot snapshot_from_message(const nlohmann::json& msg) {
  if (msg.value("type", "") != "state") throw ProtocolError("bad-message", "not a state message");
  HeteroGraphSnapshot g;
  snapshot_from_json(msg.at("nodes"), msg.at("edges"), msg.at("mask"), msg.at("future_pairs"), g);
  return g;
}

// Runs one connection: hello, first state, then request/response until
// "bye" or end of input. Returns the number of finished episodes.
inline int serve_lines(Session& session, const std::function<std::optional<std::string>()>& read_line,
                       const std::function<bool(const std::string&)>& write_line) {
  int finished = 0;
  if (!write_line(session.hello().dump())) return finished;
  if (!write_line(session.reset().dump())) return finished;
  while (auto line = read_line()) {
    if (line->empty()) continue;
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error& e) {
      if (!write_line(Session::error("bad-message", e.what()).dump())) break;
      continue;
    }
    const auto replies = session.handle(msg);
    if (replies.empty()) break;
    for (const auto& r : replies) {
      if (r.value("type", "") == "terminal") ++finished;
      if (!write_line(r.dump())) return finished;
    }
  }
  return finished;
}

inline int serve_stream(Session& session, std::istream& in, std::ostream& out) {
  return serve_lines(
      session,
      [&]() -> std::optional<std::string> {
        std::string line;
        if (!std::getline(in, line)) return std::nullopt;
        return line;
      },
      [&](const std::string& s) {
        out << s << '\n';
        out.flush();
        return static_cast<bool>(out);
      });
}

}  // namespace ipps
