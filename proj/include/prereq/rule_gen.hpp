#pragma once

// One-vs-all classified rule generation over a regular ontology.
//
// For every concept D with prerequisite P (leaves l1..lN) there is one rule per
// pass/fail outcome vector over P's leaves, 2^N in total, enumerated from
// all-pass down to all-fail with l1 as the most significant bit (pass = 1).
// The least concept gets a single default rule that serves its own content.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prereq/concept_id.hpp"
#include "prereq/error.hpp"
#include "prereq/ontology.hpp"
#include "prereq/rule_calc.hpp"

namespace prereq {

enum class Outcome { pass, fail };

using OutcomeVector = std::vector<Outcome>;

// "PF" style rendering, one character per leaf.
inline std::string to_pf_string(const OutcomeVector& v) {
  std::string out;
  out.reserve(v.size());
  for (auto o : v) out.push_back(o == Outcome::pass ? 'P' : 'F');
  return out;
}

inline OutcomeVector parse_pf_string(std::string_view s) {
  OutcomeVector out;
  for (char ch : s) {
    if (ch == 'P' || ch == 'p') {
      out.push_back(Outcome::pass);
    } else if (ch == 'F' || ch == 'f') {
      out.push_back(Outcome::fail);
    } else {
      fail(ErrorCode::ParseError, "outcome vector may only contain P/F, got '" + std::string(s) + "'");
    }
  }
  return out;
}

enum class Verdict { ready_for_desired, remediate_leaves, descend_prerequisite, direct_content };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::ready_for_desired: return "ready_for_desired";
    case Verdict::remediate_leaves: return "remediate_leaves";
    case Verdict::descend_prerequisite: return "descend_prerequisite";
    case Verdict::direct_content: return "direct_content";
  }
  return "unknown";
}

struct Target {
  ConceptId id;
  std::string url;

  friend bool operator==(const Target&, const Target&) = default;
};

struct Recommendation {
  std::vector<Target> targets;
  Verdict verdict = Verdict::direct_content;

  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

struct ClassifyPolicy {
  // All-fail on the assessed prerequisite sends the learner one level further
  // down instead of to the failed leaves.
  bool deep_descent = false;
  int max_attempts = 2;
};

struct ClassifiedRule {
  std::string label;
  ConceptId desired;
  std::optional<ConceptId> assessed_prereq;
  std::optional<OutcomeVector> condition;  // nullopt for the default rule
  Recommendation action;

  friend bool operator==(const ClassifiedRule&, const ClassifiedRule&) = default;
};

struct RuleSet {
  std::vector<ClassifiedRule> rules;
  RegularParams params;
};

// Enumerates all 2^n vectors, all-pass first, first leaf most significant.
inline std::vector<OutcomeVector> enumerate_outcomes(std::size_t n) {
  if (n >= 63) fail(ErrorCode::Overflow, "too many leaves to enumerate");
  std::vector<OutcomeVector> out;
  const std::uint64_t count = std::uint64_t{1} << n;
  out.reserve(count);
  for (std::uint64_t mask = count; mask-- > 0;) {
    OutcomeVector v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = (mask >> (n - 1 - i)) & 1U ? Outcome::pass : Outcome::fail;
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline RuleSet generate_rules(const OntologyGraph& graph, const ClassifyPolicy& policy = {}) {
  RuleSet set;
  try {
    set.params = validate_regular(graph);
  } catch (const Error& e) {
    fail(ErrorCode::IrregularOntology, e.what());
  }
  const auto outcomes = enumerate_outcomes(static_cast<std::size_t>(set.params.n));

  for (const auto& desired : graph.parents()) {
    const auto prereq = prerequisite_of(graph, desired.id);
    if (!prereq) {
      set.rules.push_back({"@" + desired.id.str() + ":default", desired.id, std::nullopt,
                           std::nullopt,
                           Recommendation{{{desired.id, desired.content}}, Verdict::direct_content}});
      continue;
    }
    const auto& leaves = leaves_of(graph, *prereq);
    const auto deeper = prerequisite_of(graph, *prereq);
    std::size_t k = 0;
    for (const auto& condition : outcomes) {
      Recommendation action;
      std::vector<Target> failed;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (condition[i] == Outcome::fail) failed.push_back({leaves[i].id, leaves[i].content});
      }
      if (failed.empty()) {
        action = {{{desired.id, desired.content}}, Verdict::ready_for_desired};
      } else if (failed.size() == leaves.size() && policy.deep_descent && deeper) {
        action = {{{*deeper, content_url(graph, *deeper)}}, Verdict::descend_prerequisite};
      } else {
        action = {std::move(failed), Verdict::remediate_leaves};
      }
      set.rules.push_back({"@" + desired.id.str() + ":d" + std::to_string(++k), desired.id, *prereq,
                           condition, std::move(action)});
    }
  }
  return set;
}

inline std::vector<const ClassifiedRule*> matching_rules(const RuleSet& set, const ConceptId& desired,
                                                         const OutcomeVector& outcome) {
  std::vector<const ClassifiedRule*> out;
  for (const auto& rule : set.rules) {
    if (rule.desired != desired) continue;
    if (rule.condition ? *rule.condition == outcome : outcome.empty()) out.push_back(&rule);
  }
  return out;
}

inline const ClassifiedRule& classify_rule(const RuleSet& set, const ConceptId& desired,
                                           const OutcomeVector& outcome) {
  const ClassifiedRule* first = nullptr;
  for (const auto& rule : set.rules) {
    if (rule.desired == desired) {
      first = &rule;
      break;
    }
  }
  if (first == nullptr) fail(ErrorCode::UnknownConcept, "no rules for '" + desired.str() + "'");
  const std::size_t expected = first->condition ? first->condition->size() : 0;
  if (outcome.size() != expected) {
    fail(ErrorCode::BadVectorLength, "expected " + std::to_string(expected) + " outcomes for '" +
                                         desired.str() + "', got " + std::to_string(outcome.size()));
  }
  auto matches = matching_rules(set, desired, outcome);
  if (matches.size() != 1) {
    fail(ErrorCode::IrregularOntology, std::to_string(matches.size()) + " rules match '" +
                                           desired.str() + "' " + to_pf_string(outcome));
  }
  return *matches.front();
}

inline Recommendation classify(const RuleSet& set, const ConceptId& desired, const OutcomeVector& outcome) {
  return classify_rule(set, desired, outcome).action;
}

struct CountReport {
  std::uint64_t expected = 0;
  std::uint64_t actual = 0;
  bool ok = false;
};

inline CountReport verify_count(const RuleSet& set) {
  CountReport report;
  report.expected = estimate_rules(set.params.c, set.params.n).value;
  report.actual = set.rules.size();
  report.ok = report.expected == report.actual;
  return report;
}

inline std::string rules_to_text(const RuleSet& set) {
  std::ostringstream out;
  for (const auto& rule : set.rules) {
    out << rule.label << ' ' << rule.desired << ' '
        << (rule.condition ? to_pf_string(*rule.condition) : std::string("-")) << " -> "
        << to_string(rule.action.verdict) << '(';
    for (std::size_t i = 0; i < rule.action.targets.size(); ++i) {
      if (i) out << ", ";
      out << rule.action.targets[i].id;
    }
    out << ")\n";
  }
  return out.str();
}

inline nlohmann::json to_json(const Recommendation& rec) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : rec.targets) targets.push_back({{"concept", t.id.str()}, {"url", t.url}});
  return {{"verdict", std::string(to_string(rec.verdict))}, {"targets", std::move(targets)}};
}

inline nlohmann::json rules_to_json(const RuleSet& set) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& rule : set.rules) {
    list.push_back({
        {"label", rule.label},
        {"desired", rule.desired.str()},
        {"assessed_prereq",
         rule.assessed_prereq ? nlohmann::json(rule.assessed_prereq->str()) : nlohmann::json(nullptr)},
        {"condition",
         rule.condition ? nlohmann::json(to_pf_string(*rule.condition)) : nlohmann::json(nullptr)},
        {"action", to_json(rule.action)},
    });
  }
  return list;
}

}  // namespace prereq
