#pragma once

// One pre-assessment episode. The learner names a desired concept; its
// immediate prerequisite's leaves are quizzed in order (with retries), the
// outcome vector is classified and learning material is recommended.
//
// Every step is carried out as messages between five agents on a private bus:
//   ag_interface  user-facing; broadcasts the desired concept, shows questions
//   ag_support    sorts the quiz, evaluates answers, gives feedback
//   ag_modelling  classifier holding the rule set
//   ag_student    persists the time-stamped activity record
//   ag_material   ontology holder; checks concepts exist and serves URLs

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prereq/concept_id.hpp"
#include "prereq/error.hpp"
#include "prereq/mas.hpp"
#include "prereq/ontology.hpp"
#include "prereq/question_bank.hpp"
#include "prereq/rule_gen.hpp"
#include "prereq/student_model.hpp"

namespace prereq {

namespace agents {
inline const mas::AgentId& interface() { static const mas::AgentId id{"ag_interface"}; return id; }
inline const mas::AgentId& support() { static const mas::AgentId id{"ag_support"}; return id; }
inline const mas::AgentId& modelling() { static const mas::AgentId id{"ag_modelling"}; return id; }
inline const mas::AgentId& student() { static const mas::AgentId id{"ag_student"}; return id; }
inline const mas::AgentId& material() { static const mas::AgentId id{"ag_material"}; return id; }
}  // namespace agents

using Clock = std::function<Timestamp()>;

inline Clock system_clock_source() {
  return [] { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); };
}

// Returns the given instants in order, then keeps returning the last one.
inline Clock scripted_clock(std::vector<Timestamp> instants) {
  if (instants.empty()) fail(ErrorCode::InvalidEvent, "scripted clock needs at least one instant");
  auto state = std::make_shared<std::pair<std::vector<Timestamp>, std::size_t>>(std::move(instants), 0);
  return [state] {
    auto& [times, next] = *state;
    return times[std::min(next++, times.size() - 1)];
  };
}

enum class Phase {
  await_desired,
  quiz_sorted,
  question_asked,
  answer_received,
  feedback_given,
  classified,
  recommended,
  done,
};

constexpr std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::await_desired: return "await_desired";
    case Phase::quiz_sorted: return "quiz_sorted";
    case Phase::question_asked: return "question_asked";
    case Phase::answer_received: return "answer_received";
    case Phase::feedback_given: return "feedback_given";
    case Phase::classified: return "classified";
    case Phase::recommended: return "recommended";
    case Phase::done: return "done";
  }
  return "?";
}

constexpr bool is_valid_transition(Phase from, Phase to) noexcept {
  switch (from) {
    case Phase::await_desired: return to == Phase::quiz_sorted || to == Phase::recommended;
    case Phase::quiz_sorted: return to == Phase::question_asked;
    case Phase::question_asked: return to == Phase::answer_received;
    case Phase::answer_received: return to == Phase::feedback_given;
    case Phase::feedback_given: return to == Phase::question_asked || to == Phase::classified;
    case Phase::classified: return to == Phase::recommended;
    case Phase::recommended: return to == Phase::done;
    case Phase::done: return false;
  }
  return false;
}

struct QuizPrompt {
  ConceptId leaf;
  int attempt = 1;
  std::string prompt;
  Timestamp asked_at;
};

struct EvalFeedback {
  ConceptId leaf;
  int attempt = 1;
  AnswerVerdict verdict = AnswerVerdict::not_passed;
  std::string message;
  bool retry = false;  // the same leaf will be asked again
};

struct SessionState {
  StudentId student;
  ConceptId desired{"unset"};
  std::optional<ConceptId> assessed_prereq;
  std::deque<std::pair<ConceptId, int>> queue;  // (leaf, next attempt number)
  std::optional<QuizPrompt> current;
  OutcomeVector outcome;
  Phase phase = Phase::await_desired;
  std::vector<Phase> phase_history{Phase::await_desired};
  std::vector<StudentEvent> events;
  std::optional<std::string> rule_label;
  std::optional<Recommendation> recommendation;
  std::string remark;
};

struct SessionEnv {
  const OntologyGraph* graph = nullptr;
  const RuleSet* rules = nullptr;
  const Bank* bank = nullptr;
  EventLog* log = nullptr;  // optional
  ClassifyPolicy policy;
  Clock clock = system_clock_source();
  mas::BusConfig bus;
};

namespace detail {

inline std::string attribute_text(const ConceptId& leaf, bool passed) {
  return passed ? "The student has passed the " + leaf.upper() + " question."
                : "The student has NOT passed the " + leaf.upper() + " question.";
}

inline mas::Literal event_literal(const StudentEvent& e) {
  using mas::Term;
  return {"record",
          {Term::str(e.student), Term::str(e.desired.str()), Term::str(e.question.str()),
           Term::num(e.attempt), Term::str(std::string(to_string(e.outcome))),
           Term::str(format_timestamp(e.asked_at)), Term::str(format_timestamp(e.answered_at))},
          {}};
}

}  // namespace detail

class Session {
 public:
  static Session start(StudentId student, std::string_view desired_raw, SessionEnv env) {
    if (env.graph == nullptr || env.rules == nullptr || env.bank == nullptr) {
      fail(ErrorCode::WrongPhase, "session needs an ontology, rules and a question bank");
    }
    if (env.policy.max_attempts < 1) fail(ErrorCode::WrongPhase, "max_attempts must be >= 1");
    if (student.empty()) fail(ErrorCode::InvalidEvent, "student id is empty");
    Session session(std::move(env));
    session.impl_->begin(std::move(student), desired_raw);
    return session;
  }

  Session(Session&&) noexcept = default;
  Session& operator=(Session&&) noexcept = default;

  std::optional<QuizPrompt> next_question() { return impl_->next_question(); }
  EvalFeedback submit_answer(std::string_view text) { return impl_->submit_answer(text); }
  Recommendation finalize() { return impl_->finalize(); }

  const SessionState& state() const noexcept { return impl_->state; }
  const mas::Bus& bus() const noexcept { return impl_->bus; }
  const mas::MessageTrace& trace() const noexcept { return impl_->bus.history(); }

 private:
  struct Impl {
    explicit Impl(SessionEnv e) : env(std::move(e)), bus(env.bus), state{} {}

    SessionEnv env;
    mas::Bus bus;
    SessionState state;
    std::vector<Target> delivered;
    std::optional<Verdict> classified_verdict;

    void transition(Phase to) {
      if (!is_valid_transition(state.phase, to)) {
        fail(ErrorCode::WrongPhase, std::string("illegal transition ") + std::string(to_string(state.phase)) +
                                        " -> " + std::string(to_string(to)));
      }
      state.phase = to;
      state.phase_history.push_back(to);
    }

    void require_phase(std::initializer_list<Phase> allowed, std::string_view op) const {
      for (Phase p : allowed) {
        if (state.phase == p) return;
      }
      fail(ErrorCode::WrongPhase, std::string(op) + " not allowed in phase " + std::string(to_string(state.phase)));
    }

    void wire_agents() {
      using mas::Literal;
      using mas::Term;
      const auto& graph = *env.graph;

      bus.register_agent(agents::interface())
          .on_belief("material", [this](mas::Bus&, mas::Agent&, const mas::Message& m) {
            delivered.push_back({ConceptId(m.content.args.at(0).text), m.content.args.at(1).text});
          });
      bus.register_agent(agents::support());

      bus.register_agent(agents::modelling())
          .on_goal(
              "recommendMaterial",
              [this](mas::Bus& b, mas::Agent& self, const mas::Message&) { classify_from_beliefs(b, self); },
              [](const mas::Agent& self, const mas::Message&) {
                return self.beliefs()
                    .first_match(Literal{"desired_concept", {Term::any()}, agents::support().str()})
                    .has_value();
              });

      bus.register_agent(agents::student())
          .on_belief("record", [this](mas::Bus&, mas::Agent&, const mas::Message& m) {
            auto event = parse_event(mas::render(m.content) + ".");
            if (env.log != nullptr) env.log->record_event(event);
            state.events.push_back(std::move(event));
          });

      auto& material = bus.register_agent(agents::material());
      for (const auto& parent : graph.parents()) {
        material.seed(Literal{"exists", {Term::atom(parent.id.str())}, {}});
        material.seed(Literal{"hasContent", {Term::atom(parent.id.str()), Term::str(parent.content)}, {}});
        if (auto p = prerequisite_of(graph, parent.id)) {
          material.seed(Literal{"hasPrerequisite", {Term::atom(parent.id.str()), Term::atom(p->str())}, {}});
        }
        for (const auto& leaf : parent.leaves) {
          material.seed(Literal{"exists", {Term::atom(leaf.id.str())}, {}});
          material.seed(Literal{"hasContent", {Term::atom(leaf.id.str()), Term::str(leaf.content)}, {}});
        }
      }
      // Which arguments of each recommendation literal name the nodes to serve.
      auto serve = [](std::size_t first_arg, std::size_t last_arg) {
        return [first_arg, last_arg](mas::Bus& b, mas::Agent& self, const mas::Message& m) {
          const auto& args = m.content.args;
          for (std::size_t i = first_arg; i < std::min(last_arg, args.size()); ++i) {
            auto url = self.beliefs().first_match(Literal{"hasContent", {args[i], Term::any()}, {}});
            if (!url) fail(ErrorCode::UnknownConcept, "no content for '" + args[i].text + "'");
            b.tell(self.id(), agents::interface(), Literal{"material", {args[i], url->args[1]}, {}});
          }
        };
      };
      material.on_goal("hasPrerequisite", serve(0, 1))
          .on_goal("has_KB", serve(1, static_cast<std::size_t>(-1)))
          .on_goal("descend", serve(1, 2))
          .on_goal("content", serve(0, 1));
    }

    // Rebuilds the outcome vector from passed/failed beliefs told by
    // ag_support and fires the matching rule.
    void classify_from_beliefs(mas::Bus& b, mas::Agent& self) {
      using mas::Literal;
      using mas::Term;
      const auto& beliefs = self.beliefs();
      const auto desired_belief =
          beliefs.first_match(Literal{"desired_concept", {Term::any()}, agents::support().str()});
      const ConceptId desired(desired_belief->args.at(0).text);

      OutcomeVector outcome;
      if (const auto prereq = prerequisite_of(*env.graph, desired)) {
        for (const auto& leaf : leaves_of(*env.graph, *prereq)) {
          const std::string src = agents::support().str();
          if (beliefs.contains(Literal{"passed", {Term::str(detail::attribute_text(leaf.id, true))}, src})) {
            outcome.push_back(Outcome::pass);
          } else if (beliefs.contains(Literal{"failed", {Term::str(detail::attribute_text(leaf.id, false))}, src})) {
            outcome.push_back(Outcome::fail);
          } else {
            fail(ErrorCode::IncompleteOutcome, "no classification attribute for '" + leaf.id.str() + "'");
          }
        }
      }
      const auto& rule = classify_rule(*env.rules, desired, outcome);
      state.rule_label = rule.label;
      classified_verdict = rule.action.verdict;

      Literal request;
      const auto& targets = rule.action.targets;
      switch (rule.action.verdict) {
        case Verdict::ready_for_desired:
          request = {"hasPrerequisite", {Term::atom(desired.str()), Term::atom(rule.assessed_prereq->str())}, {}};
          break;
        case Verdict::remediate_leaves:
          request = {"has_KB", {Term::atom(rule.assessed_prereq->str())}, {}};
          for (const auto& t : targets) request.args.push_back(Term::atom(t.id.str()));
          break;
        case Verdict::descend_prerequisite:
          request = {"descend", {Term::atom(rule.assessed_prereq->str()), Term::atom(targets.front().id.str())}, {}};
          break;
        case Verdict::direct_content:
          request = {"content", {Term::atom(desired.str())}, {}};
          break;
      }
      b.achieve(self.id(), agents::material(), std::move(request));
    }

    void begin(StudentId student, std::string_view desired_raw) {
      using mas::Literal;
      using mas::Term;
      wire_agents();
      state.student = std::move(student);

      std::string shown(desired_raw);
      if (auto first = shown.find_first_not_of(" \t\r\n"); first != std::string::npos) {
        shown = shown.substr(first, shown.find_last_not_of(" \t\r\n") - first + 1);
      } else {
        shown.clear();
      }
      bus.broadcast(agents::interface(), Literal{"value", {Term::str(shown)}, {}});
      bus.dispatch_until_quiescent();

      const auto id = ConceptId::try_parse(shown);
      const bool exists =
          id && bus.ask_one(agents::interface(), agents::material(), Literal{"exists", {Term::atom(id->str())}, {}});
      if (!exists || env.graph->find_parent(*id) == nullptr) {
        bus.tell(agents::material(), agents::interface(), Literal{"unknown_concept", {Term::str(shown)}, {}});
        bus.dispatch_until_quiescent();
        fail(ErrorCode::UnknownDesiredConcept,
             exists ? "'" + shown + "' is a leaf topic, not a concept that can be requested"
                    : "'" + shown + "' is not in the ontology");
      }

      state.desired = *id;
      state.assessed_prereq = prerequisite_of(*env.graph, *id);
      bus.tell(agents::support(), agents::modelling(), Literal{"desired_concept", {Term::atom(id->str())}, {}});
      if (!state.assessed_prereq) {
        bus.achieve(agents::support(), agents::modelling(), Literal{"recommendMaterial", {}, {}});
        bus.dispatch_until_quiescent();
        finish_recommendation();
        return;
      }
      for (const auto& leaf : leaves_of(*env.graph, *state.assessed_prereq)) state.queue.emplace_back(leaf.id, 1);
      bus.dispatch_until_quiescent();
      transition(Phase::quiz_sorted);
    }

    std::optional<QuizPrompt> next_question() {
      using mas::Literal;
      using mas::Term;
      require_phase({Phase::quiz_sorted, Phase::feedback_given}, "next_question");
      if (state.queue.empty()) return std::nullopt;
      const auto& [leaf, attempt] = state.queue.front();
      const auto& item = env.bank->question_for_leaf(leaf);
      QuizPrompt prompt{leaf, attempt, item.prompt, env.clock()};
      bus.tell(agents::support(), agents::interface(),
               Literal{"question", {Term::atom(leaf.str()), Term::num(attempt), Term::str(item.prompt)}, {}});
      bus.dispatch_until_quiescent();
      state.current = prompt;
      transition(Phase::question_asked);
      return prompt;
    }

    EvalFeedback submit_answer(std::string_view text) {
      using mas::Literal;
      using mas::Term;
      require_phase({Phase::question_asked}, "submit_answer");
      if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        fail(ErrorCode::EmptyAnswer, "answer text is empty");
      }
      const QuizPrompt prompt = *state.current;
      const StudentEvent probe{state.student, state.desired, prompt.leaf, prompt.attempt,
                               AnswerVerdict::not_passed, prompt.asked_at, env.clock()};
      validate_event(probe);

      transition(Phase::answer_received);
      bus.tell(agents::interface(), agents::support(),
               Literal{"answer", {Term::atom(prompt.leaf.str()), Term::num(prompt.attempt), Term::str(std::string(text))}, {}});
      bus.dispatch_until_quiescent();

      StudentEvent event = probe;
      event.outcome = evaluate_answer(env.bank->question_for_leaf(prompt.leaf), text);
      const bool passed = event.outcome == AnswerVerdict::passed;
      bus.tell(agents::support(), agents::student(), detail::event_literal(event));
      bus.tell(agents::support(), agents::interface(),
               Literal{"feedback",
                       {Term::atom(prompt.leaf.str()), Term::num(prompt.attempt),
                        Term::str(std::string(to_string(event.outcome)))},
                       {}});
      bus.dispatch_until_quiescent();

      const bool retry = !passed && prompt.attempt < env.policy.max_attempts;
      if (retry) {
        state.queue.front().second += 1;
      } else {
        state.queue.pop_front();
        state.outcome.push_back(passed ? Outcome::pass : Outcome::fail);
      }
      state.current.reset();
      transition(Phase::feedback_given);

      EvalFeedback feedback{prompt.leaf, prompt.attempt, event.outcome, {}, retry};
      feedback.message = prompt.leaf.upper() + ": " + (passed ? "Passed" : "Not Passed") + " (attempt " +
                         std::to_string(prompt.attempt) + " of " + std::to_string(env.policy.max_attempts) + ")";
      return feedback;
    }

    Recommendation finalize() {
      using mas::Literal;
      using mas::Term;
      if (state.phase == Phase::recommended) {
        transition(Phase::done);
        return *state.recommendation;
      }
      const auto& leaves = leaves_of(*env.graph, *state.assessed_prereq);
      if (state.outcome.size() != leaves.size()) {
        fail(ErrorCode::IncompleteOutcome, std::to_string(state.outcome.size()) + " of " +
                                               std::to_string(leaves.size()) + " leaves resolved");
      }
      require_phase({Phase::feedback_given}, "finalize");

      for (std::size_t i = 0; i < leaves.size(); ++i) {
        const bool passed = state.outcome[i] == Outcome::pass;
        bus.tell(agents::support(), agents::modelling(),
                 Literal{passed ? "passed" : "failed", {Term::str(detail::attribute_text(leaves[i].id, passed))}, {}});
      }
      bus.achieve(agents::support(), agents::modelling(), Literal{"recommendMaterial", {}, {}});
      bus.dispatch_until_quiescent();
      transition(Phase::classified);
      finish_recommendation();
      transition(Phase::done);
      return *state.recommendation;
    }

    void finish_recommendation() {
      using mas::Literal;
      using mas::Term;
      if (!classified_verdict || delivered.empty()) {
        fail(ErrorCode::IncompleteOutcome, "classification produced no material");
      }
      state.recommendation = Recommendation{delivered, *classified_verdict};
      const bool prepared =
          *classified_verdict == Verdict::ready_for_desired || *classified_verdict == Verdict::direct_content;
      std::vector<ConceptId> recommended;
      if (!prepared) {
        for (const auto& t : delivered) recommended.push_back(t.id);
      }
      state.remark = make_remark(state.desired, prepared, recommended);
      transition(Phase::recommended);
      bus.tell(agents::support(), agents::student(),
               Literal{"session_summary",
                       {Term::atom(state.desired.str()), Term::atom(std::string(to_string(*classified_verdict))),
                        Term::str(state.remark)},
                       {}});
      bus.dispatch_until_quiescent();
    }
  };

  explicit Session(SessionEnv env) : impl_(std::make_unique<Impl>(std::move(env))) {}

  std::unique_ptr<Impl> impl_;
};

}  // namespace prereq
