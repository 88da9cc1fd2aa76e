#pragma once

// In-process agent message bus with speech-act performatives.
//
// Semantics:
//   tell / broadcast_tell  the literal joins the receiver's belief base,
//                          annotated with source(sender); belief plans fire.
//   achieve                the receiver's goal plans fire; beliefs untouched.
//   ask_one                synchronous query against another agent's beliefs.
//
// Delivery is a single FIFO queue with run-to-completion plans, so identical
// setups yield identical traces. Beliefs are never retracted.

#include <cctype>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prereq/error.hpp"

namespace prereq::mas {

class AgentId {
 public:
  explicit AgentId(std::string name) : name_(std::move(name)) {
    if (name_.empty()) fail(ErrorCode::UnknownAgent, "agent id must not be empty");
    for (char c : name_) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
        fail(ErrorCode::UnknownAgent, "agent id '" + name_ + "' may only contain [A-Za-z0-9_]");
      }
    }
  }

  const std::string& str() const noexcept { return name_; }

  friend bool operator==(const AgentId&, const AgentId&) = default;
  friend auto operator<=>(const AgentId&, const AgentId&) = default;

 private:
  std::string name_;
};

enum class Performative { tell, achieve, ask_one, broadcast_tell };

constexpr std::string_view to_string(Performative p) noexcept {
  switch (p) {
    case Performative::tell: return "tell";
    case Performative::achieve: return "achieve";
    case Performative::ask_one: return "askOne";
    case Performative::broadcast_tell: return "broadcast";
  }
  return "?";
}

struct Term {
  enum class Kind { atom, string, number, wildcard };

  Kind kind = Kind::atom;
  std::string text;

  static Term atom(std::string s) { return {Kind::atom, std::move(s)}; }
  static Term str(std::string s) { return {Kind::string, std::move(s)}; }
  static Term num(std::int64_t v) { return {Kind::number, std::to_string(v)}; }
  static Term any() { return {Kind::wildcard, "_"}; }

  bool matches(const Term& value) const {
    return kind == Kind::wildcard || (kind == value.kind && text == value.text);
  }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

// functor(arg1, arg2)[source(agent)]
struct Literal {
  std::string functor;
  std::vector<Term> args;
  std::string source;  // empty when not annotated

  Literal with_source(std::string src) const {
    Literal out = *this;
    out.source = std::move(src);
    return out;
  }

  // Functor and arity agree, and each pattern argument matches.
  bool unifies_with(const Literal& pattern) const {
    if (functor != pattern.functor || args.size() != pattern.args.size()) return false;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (!pattern.args[i].matches(args[i])) return false;
    }
    return true;
  }

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '|': out += "\\|"; break;  // keeps trace lines splittable on '|'
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string render(const Term& t) {
  return t.kind == Term::Kind::string ? quote(t.text) : t.text;
}

inline std::string render(const Literal& lit) {
  std::string out = lit.functor;
  if (!lit.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < lit.args.size(); ++i) {
      if (i) out += ", ";
      out += render(lit.args[i]);
    }
    out += ')';
  }
  if (!lit.source.empty()) out += "[source(" + lit.source + ")]";
  return out;
}

namespace detail {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view text) : s_(text) {}

  Literal parse() {
    Literal lit;
    lit.functor = identifier();
    if (lit.functor.empty() || !std::isalpha(static_cast<unsigned char>(lit.functor[0]))) {
      error("functor must start with a letter");
    }
    skip_ws();
    if (peek('(')) {
      ++pos_;
      skip_ws();
      if (!peek(')')) {
        for (;;) {
          lit.args.push_back(term());
          skip_ws();
          if (peek(',')) {
            ++pos_;
            continue;
          }
          break;
        }
      }
      expect(')');
    }
    skip_ws();
    if (peek('[')) {
      ++pos_;
      skip_ws();
      if (identifier() != "source") error("only source(...) annotations are supported");
      expect('(');
      lit.source = identifier();
      if (lit.source.empty()) error("empty source annotation");
      expect(')');
      expect(']');
    }
    skip_ws();
    if (pos_ != s_.size()) error("trailing characters");
    return lit;
  }

 private:
  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (!peek(c)) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }

  Term term() {
    skip_ws();
    if (peek('"')) {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        char c = s_[pos_++];
        if (c == '\\') {
          if (pos_ >= s_.size()) error("dangling escape");
          char e = s_[pos_++];
          out += e == 'n' ? '\n' : e;
        } else {
          out += c;
        }
      }
      if (!peek('"')) error("unterminated string");
      ++pos_;
      return Term::str(std::move(out));
    }
    if (peek('-') || (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))) {
      std::size_t start = pos_++;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string digits(s_.substr(start, pos_ - start));
      if (digits == "-") error("bad number");
      return Term{Term::Kind::number, digits};
    }
    std::string id = identifier();
    if (id.empty()) error("expected a term");
    if (id == "_") return Term::any();
    return Term::atom(std::move(id));
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::InvalidLiteral, what + " at offset " + std::to_string(pos_) + " in '" +
                                        std::string(s_) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Literal parse_literal(std::string_view text) { return detail::LiteralParser(text).parse(); }

// Source-annotated beliefs with set semantics, kept in insertion order.
class BeliefBase {
 public:
  // Returns false when the identical literal (with source) is already held.
  bool add(Literal lit) {
    if (!index_.insert(lit).second) return false;
    beliefs_.push_back(std::move(lit));
    return true;
  }

  bool contains(const Literal& lit) const { return index_.count(lit) != 0; }

  // Oldest belief unifying with `pattern`; the pattern's source, when set,
  // must match too.
  std::optional<Literal> first_match(const Literal& pattern) const {
    for (const auto& b : beliefs_) {
      if (b.unifies_with(pattern) && (pattern.source.empty() || pattern.source == b.source)) return b;
    }
    return std::nullopt;
  }

  std::vector<Literal> all_matches(const Literal& pattern) const {
    std::vector<Literal> out;
    for (const auto& b : beliefs_) {
      if (b.unifies_with(pattern) && (pattern.source.empty() || pattern.source == b.source)) {
        out.push_back(b);
      }
    }
    return out;
  }

  const std::vector<Literal>& items() const noexcept { return beliefs_; }
  std::size_t size() const noexcept { return beliefs_.size(); }

  friend bool operator==(const BeliefBase& a, const BeliefBase& b) { return a.beliefs_ == b.beliefs_; }

 private:
  std::vector<Literal> beliefs_;
  std::set<Literal> index_;
};

struct Message {
  AgentId sender;
  AgentId receiver;
  Performative performative = Performative::tell;
  Literal content;
  std::uint64_t seq = 0;  // assigned on delivery, starting at 1
};

// seq|sender|performative|receiver|literal
inline std::string render(const Message& m) {
  std::ostringstream out;
  out << m.seq << '|' << m.sender.str() << '|' << to_string(m.performative) << '|'
      << m.receiver.str() << '|' << render(m.content);
  return out.str();
}

using MessageTrace = std::vector<Message>;

inline std::string serialize_trace(const MessageTrace& trace) {
  std::string out;
  for (const auto& m : trace) out += render(m) + '\n';
  return out;
}

class Bus;
class Agent;

// Handler runs to completion; it may send further messages on the bus.
using PlanHandler = std::function<void(Bus&, Agent& self, const Message&)>;
using PlanGuard = std::function<bool(const Agent& self, const Message&)>;

enum class Trigger {
  belief_added,  // tell and broadcast_tell
  goal,          // achieve
};

struct Plan {
  Trigger trigger = Trigger::belief_added;
  std::string functor;
  PlanGuard guard;  // empty: always applicable
  PlanHandler handler;
};

class Agent {
 public:
  explicit Agent(AgentId id) : id_(std::move(id)) {}

  const AgentId& id() const noexcept { return id_; }
  const BeliefBase& beliefs() const noexcept { return beliefs_; }

  // Initial beliefs, annotated source(self).
  void seed(const Literal& lit) { beliefs_.add(lit.with_source("self")); }

  Agent& on_belief(std::string functor, PlanHandler handler, PlanGuard guard = {}) {
    plans_.push_back({Trigger::belief_added, std::move(functor), std::move(guard), std::move(handler)});
    return *this;
  }

  Agent& on_goal(std::string functor, PlanHandler handler, PlanGuard guard = {}) {
    plans_.push_back({Trigger::goal, std::move(functor), std::move(guard), std::move(handler)});
    return *this;
  }

 private:
  friend class Bus;

  AgentId id_;
  BeliefBase beliefs_;
  std::vector<Plan> plans_;
};

struct BusConfig {
  std::size_t max_messages = 10'000;
};

// Confined to one thread of control at a time.
class Bus {
 public:
  explicit Bus(BusConfig config = {}) : config_(config) {}

  Bus(const Bus&) = delete;
  Bus& operator=(const Bus&) = delete;

  Agent& register_agent(AgentId id) {
    if (find(id) != nullptr) fail(ErrorCode::DuplicateAgent, "'" + id.str() + "' already registered");
    agents_.push_back(std::make_unique<Agent>(std::move(id)));
    return *agents_.back();
  }

  Agent& agent(const AgentId& id) {
    Agent* a = find(id);
    if (a == nullptr) fail(ErrorCode::UnknownAgent, "'" + id.str() + "'");
    return *a;
  }

  const Agent& agent(const AgentId& id) const { return const_cast<Bus*>(this)->agent(id); }

  std::vector<AgentId> agent_ids() const {
    std::vector<AgentId> out;
    for (const auto& a : agents_) out.push_back(a->id());
    return out;
  }

  void send(const AgentId& sender, const AgentId& receiver, Performative performative, Literal content) {
    agent(sender);
    agent(receiver);
    if (sender == receiver) fail(ErrorCode::UnknownAgent, "point-to-point message to self");
    if (performative == Performative::ask_one) {
      fail(ErrorCode::InvalidLiteral, "askOne is synchronous; use ask_one()");
    }
    queue_.push_back(Message{sender, receiver, performative, std::move(content), 0});
  }

  void tell(const AgentId& sender, const AgentId& receiver, Literal content) {
    send(sender, receiver, Performative::tell, std::move(content));
  }

  void achieve(const AgentId& sender, const AgentId& receiver, Literal content) {
    send(sender, receiver, Performative::achieve, std::move(content));
  }

  // One tell per registered agent other than the sender, in registration order.
  void broadcast(const AgentId& sender, const Literal& content) {
    agent(sender);
    for (const auto& a : agents_) {
      if (a->id() == sender) continue;
      queue_.push_back(Message{sender, a->id(), Performative::broadcast_tell, content, 0});
    }
  }

  std::optional<Literal> ask_one(const AgentId& asker, const AgentId& target, const Literal& pattern) const {
    agent(asker);
    return agent(target).beliefs().first_match(pattern);
  }

  std::size_t pending() const noexcept { return queue_.size(); }

  // Delivers the head of the queue; nullopt when empty.
  std::optional<Message> dispatch_one() {
    if (queue_.empty()) return std::nullopt;
    Message msg = std::move(queue_.front());
    queue_.pop_front();
    msg.seq = ++last_seq_;
    Agent& receiver = agent(msg.receiver);
    Trigger trigger = Trigger::goal;
    if (msg.performative != Performative::achieve) {
      receiver.beliefs_.add(msg.content.with_source(msg.sender.str()));
      trigger = Trigger::belief_added;
    }
    history_.push_back(msg);
    // First applicable plan wins, as in plan-library order.
    for (const auto& plan : receiver.plans_) {
      if (plan.trigger != trigger || plan.functor != msg.content.functor) continue;
      if (plan.guard && !plan.guard(receiver, msg)) continue;
      const PlanHandler handler = plan.handler;
      handler(*this, receiver, msg);
      break;
    }
    return msg;
  }

  MessageTrace dispatch_until_quiescent() {
    MessageTrace trace;
    while (!queue_.empty()) {
      if (trace.size() >= config_.max_messages) {
        fail(ErrorCode::NonTermination,
             "more than " + std::to_string(config_.max_messages) + " deliveries without quiescence");
      }
      trace.push_back(*dispatch_one());
    }
    return trace;
  }

  // Every delivery since construction.
  const MessageTrace& history() const noexcept { return history_; }

 private:
  Agent* find(const AgentId& id) const {
    for (const auto& a : agents_) {
      if (a->id() == id) return a.get();
    }
    return nullptr;
  }

  BusConfig config_;
  std::vector<std::unique_ptr<Agent>> agents_;
  std::deque<Message> queue_;
  MessageTrace history_;
  std::uint64_t last_seq_ = 0;
};

}  // namespace prereq::mas
