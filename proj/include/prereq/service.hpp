#pragma once

// HTTP/JSON front end. Sessions live in memory, one private bus each; the
// student event log is the only thing written to disk.
//
//   POST /sessions                     {student, desired} -> 201 {id, question | recommendation}
//   GET  /sessions/{id}/question       current question, or {"status":"done"}
//   POST /sessions/{id}/answer         {text} -> {feedback, question | recommendation}
//   GET  /sessions/{id}/result         recommendation once classified
//   GET  /students/{student}/history   per-session timing analysis
//   GET  /rules/estimate?c=&n=         {"r": R}
//   GET  /rules/sweep?c=A..B&n=A..B    CSV
//   GET  /rules?format=json|text
//   GET  /ontology                     serialized graph
//   GET  /healthz
//
// Errors are {"code": "...", "message": "..."} with a 4xx/5xx status.

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "prereq/error.hpp"
#include "prereq/ontology.hpp"
#include "prereq/question_bank.hpp"
#include "prereq/rule_calc.hpp"
#include "prereq/rule_gen.hpp"
#include "prereq/session.hpp"
#include "prereq/student_model.hpp"

namespace prereq {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path ontology_path;
  std::filesystem::path bank_path;
  std::filesystem::path log_path;
  ClassifyPolicy policy;
  CalcConfig calc;
  std::size_t max_messages = 10'000;
  std::chrono::seconds idle_timeout{30 * 60};
  // Honour the X-Test-Clock header (comma-separated ISO timestamps).
  bool allow_test_clock = false;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::StorageError, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// "A..B" or a single integer "A".
inline IntRange parse_int_range(std::string_view text) {
  auto parse_int = [&](std::string_view part) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      fail(ErrorCode::BadRequest, "bad range '" + std::string(text) + "', expected A..B");
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const auto v = parse_int(text);
    return {v, v};
  }
  return {parse_int(text.substr(0, dots)), parse_int(text.substr(dots + 2))};
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidLiteral: return 400;
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::WrongPhase:
    case ErrorCode::IncompleteOutcome: return 409;
    case ErrorCode::StorageError:
    case ErrorCode::NonTermination:
    case ErrorCode::BindError: return 500;
    default: return 422;
  }
}

inline nlohmann::json to_json(const QuizPrompt& q) {
  return {{"leaf", q.leaf.str()},
          {"attempt", q.attempt},
          {"prompt", q.prompt},
          {"asked_at", format_timestamp(q.asked_at)}};
}

inline nlohmann::json to_json(const EvalFeedback& f) {
  return {{"leaf", f.leaf.str()},
          {"attempt", f.attempt},
          {"verdict", std::string(to_string(f.verdict))},
          {"message", f.message},
          {"retry", f.retry}};
}

class Service {
 public:
  explicit Service(ServerConfig config)
      : config_(std::move(config)),
        graph_(load_ontology(read_text_file(config_.ontology_path))),
        rules_(generate_rules(graph_, config_.policy)),
        bank_(load_bank(read_text_file(config_.bank_path), graph_)),
        log_(config_.log_path) {
    routes();
  }

  ~Service() { stop(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the socket and returns the actual port.
  int bind() {
    const int port = config_.port == 0 ? server_.bind_to_any_port(config_.host)
                                       : (server_.bind_to_port(config_.host, config_.port) ? config_.port : -1);
    if (port < 0) fail(ErrorCode::BindError, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    port_ = port;
    return port;
  }

  // Blocks until stop().
  void run() {
    if (port_ < 0) bind();
    server_.listen_after_bind();
  }

  // Binds and serves on a background thread; returns the port.
  int start_background() {
    const int port = bind();
    worker_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    server_.stop();
    if (worker_.joinable()) worker_.join();
  }

  std::size_t live_sessions() {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
  }

  const OntologyGraph& graph() const noexcept { return graph_; }
  const RuleSet& rules() const noexcept { return rules_; }

 private:
  struct Entry {
    std::mutex mutex;
    std::optional<Session> session;
    std::chrono::steady_clock::time_point last_used;
  };

  static void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    reply_json(res, http_status(code), {{"code", std::string(to_string(code))}, {"message", message}});
  }

  // Runs a handler, turning failures into JSON error bodies.
  template <typename Fn>
  static httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        reply_error(res, e.code(), e.detail());
      } catch (const std::exception& e) {
        reply_error(res, ErrorCode::StorageError, e.what());
      }
    };
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      auto body = nlohmann::json::parse(req.body);
      if (!body.is_object()) fail(ErrorCode::BadRequest, "request body must be a JSON object");
      return body;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::BadRequest, std::string("request body is not JSON: ") + e.what());
    }
  }

  static std::string string_field(const nlohmann::json& body, const char* name) {
    if (!body.contains(name) || !body[name].is_string()) {
      fail(ErrorCode::BadRequest, std::string("missing string field '") + name + "'");
    }
    return body[name].get<std::string>();
  }

  static std::int64_t int_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) fail(ErrorCode::BadRequest, std::string("missing query parameter '") + name + "'");
    const auto range = parse_int_range(req.get_param_value(name));
    if (range.lo != range.hi) fail(ErrorCode::BadRequest, std::string("'") + name + "' must be a single integer");
    return range.lo;
  }

  std::string new_id() {
    std::lock_guard lock(rng_mutex_);
    std::uniform_int_distribution<std::uint64_t> dist;
    std::ostringstream out;
    out << std::hex << dist(rng_) << dist(rng_);
    return out.str();
  }

  Clock clock_for(const httplib::Request& req) const {
    if (!config_.allow_test_clock || !req.has_header("X-Test-Clock")) return system_clock_source();
    std::vector<Timestamp> instants;
    std::stringstream list(req.get_header_value("X-Test-Clock"));
    std::string item;
    while (std::getline(list, item, ',')) {
      const auto first = item.find_first_not_of(' ');
      if (first == std::string::npos) continue;
      try {
        instants.push_back(parse_timestamp(item.substr(first, item.find_last_not_of(' ') - first + 1)));
      } catch (const Error& e) {
        fail(ErrorCode::BadRequest, "X-Test-Clock: " + e.detail());
      }
    }
    if (instants.empty()) fail(ErrorCode::BadRequest, "X-Test-Clock is empty");
    return scripted_clock(std::move(instants));
  }

  void expire_idle_locked() {
    const auto now = std::chrono::steady_clock::now();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock entry_lock(it->second->mutex, std::try_to_lock);
      if (entry_lock.owns_lock() && now - it->second->last_used > config_.idle_timeout) {
        entry_lock.unlock();
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::shared_ptr<Entry> find_session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    expire_idle_locked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no session '" + id + "'");
    return it->second;
  }

  nlohmann::json recommendation_body(const Session& s) const {
    const auto& st = s.state();
    nlohmann::json body = to_json(*st.recommendation);
    body["desired"] = st.desired.str();
    body["remark"] = st.remark;
    body["rule"] = st.rule_label ? nlohmann::json(*st.rule_label) : nlohmann::json(nullptr);
    return body;
  }

  // Moves the session to the next question, or classifies when none is left.
  void advance(Session& s, nlohmann::json& body) {
    if (auto q = s.next_question()) {
      body["question"] = to_json(*q);
    } else {
      s.finalize();
      body["recommendation"] = recommendation_body(s);
    }
  }

  void routes() {
    server_.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
                  reply_json(res, 200, {{"status", "ok"}});
                }));

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const auto body = parse_body(req);
                   const auto student = string_field(body, "student");
                   const auto desired = string_field(body, "desired");

                   SessionEnv env;
                   env.graph = &graph_;
                   env.rules = &rules_;
                   env.bank = &bank_;
                   env.log = &log_;
                   env.policy = config_.policy;
                   env.clock = clock_for(req);
                   env.bus.max_messages = config_.max_messages;

                   auto entry = std::make_shared<Entry>();
                   entry->session.emplace(Session::start(student, desired, std::move(env)));
                   entry->last_used = std::chrono::steady_clock::now();
                   auto& s = *entry->session;

                   nlohmann::json out;
                   out["desired"] = s.state().desired.str();
                   out["assessed_prereq"] = s.state().assessed_prereq ? nlohmann::json(s.state().assessed_prereq->str())
                                                                      : nlohmann::json(nullptr);
                   if (s.state().phase == Phase::recommended) {
                     s.finalize();
                     out["recommendation"] = recommendation_body(s);
                   } else {
                     advance(s, out);
                   }
                   {
                     std::lock_guard lock(sessions_mutex_);
                     expire_idle_locked();
                     std::string id;
                     do {
                       id = new_id();
                     } while (sessions_.count(id) != 0);
                     sessions_.emplace(id, std::move(entry));
                     out["id"] = id;
                   }
                   reply_json(res, 201, out);
                 }));

    server_.Get(R"(/sessions/([^/]+)/question)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto entry = find_session(req.matches[1]);
                  std::lock_guard lock(entry->mutex);
                  entry->last_used = std::chrono::steady_clock::now();
                  const auto& st = entry->session->state();
                  if (st.phase == Phase::question_asked && st.current) {
                    reply_json(res, 200, {{"status", "question"}, {"question", to_json(*st.current)}});
                  } else {
                    reply_json(res, 200, {{"status", std::string(to_string(st.phase))}});
                  }
                }));

    server_.Post(R"(/sessions/([^/]+)/answer)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const auto body = parse_body(req);
                   const auto text = string_field(body, "text");
                   auto entry = find_session(req.matches[1]);
                   std::lock_guard lock(entry->mutex);
                   entry->last_used = std::chrono::steady_clock::now();
                   auto& s = *entry->session;
                   nlohmann::json out;
                   out["feedback"] = to_json(s.submit_answer(text));
                   advance(s, out);
                   reply_json(res, 200, out);
                 }));

    server_.Get(R"(/sessions/([^/]+)/result)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto entry = find_session(req.matches[1]);
                  std::lock_guard lock(entry->mutex);
                  entry->last_used = std::chrono::steady_clock::now();
                  const auto& s = *entry->session;
                  if (s.state().phase != Phase::done) {
                    fail(ErrorCode::WrongPhase, "session is still in phase " + std::string(to_string(s.state().phase)));
                  }
                  reply_json(res, 200, recommendation_body(s));
                }));

    server_.Get(R"(/students/([^/]+)/history)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  nlohmann::json list = nlohmann::json::array();
                  for (const auto& summary : analyze(log_.load_history(req.matches[1]))) list.push_back(to_json(summary));
                  reply_json(res, 200, list);
                }));

    server_.Get("/rules/estimate", guarded([](const httplib::Request& req, httplib::Response& res) {
                  const auto r = estimate_rules(int_param(req, "c"), int_param(req, "n"));
                  reply_json(res, 200, {{"r", r.value}});
                }));

    server_.Get("/rules/sweep", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  if (!req.has_param("c") || !req.has_param("n")) fail(ErrorCode::BadRequest, "need c and n ranges");
                  const auto grid = sweep(parse_int_range(req.get_param_value("c")),
                                          parse_int_range(req.get_param_value("n")), config_.calc);
                  res.status = 200;
                  res.set_content(emit_dataset_csv(grid), "text/csv");
                }));

    server_.Get("/rules", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto format = req.has_param("format") ? req.get_param_value("format") : "json";
                  if (format == "json") {
                    reply_json(res, 200, rules_to_json(rules_));
                  } else if (format == "text") {
                    res.status = 200;
                    res.set_content(rules_to_text(rules_), "text/plain");
                  } else {
                    fail(ErrorCode::BadRequest, "format must be json or text");
                  }
                }));

    server_.Get("/ontology", guarded([this](const httplib::Request&, httplib::Response& res) {
                  res.status = 200;
                  res.set_content(serialize_ontology(graph_), "text/plain");
                }));
  }

  ServerConfig config_;
  OntologyGraph graph_;
  RuleSet rules_;
  Bank bank_;
  EventLog log_;

  httplib::Server server_;
  std::thread worker_;
  int port_ = -1;

  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;

  std::mutex rng_mutex_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace prereq
