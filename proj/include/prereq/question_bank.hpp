#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prereq/concept_id.hpp"
#include "prereq/error.hpp"
#include "prereq/ontology.hpp"

namespace prereq {

// Canonical form of a free-text SQL answer:
//   trim, collapse whitespace runs to one space, drop trailing semicolons,
//   lowercase everything outside '...' and "..." literals.
// Idempotent.
inline std::string normalize_answer(std::string_view text) {
  std::string collapsed;
  collapsed.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed += ' ';
    pending_space = false;
    collapsed += c;
  }
  while (!collapsed.empty() && (collapsed.back() == ';' || collapsed.back() == ' ')) {
    collapsed.pop_back();
  }
  char quote = 0;
  for (char& c : collapsed) {
    if (quote != 0) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return collapsed;
}

enum class AnswerVerdict { passed, not_passed };

constexpr std::string_view to_string(AnswerVerdict v) noexcept {
  return v == AnswerVerdict::passed ? "passed" : "not_passed";
}

struct QuizItem {
  ConceptId leaf;
  std::string prompt;
  std::vector<std::string> accepted;  // normalized
};

inline AnswerVerdict evaluate_answer(const QuizItem& item, std::string_view submission) {
  const std::string normalized = normalize_answer(submission);
  if (normalized.empty()) return AnswerVerdict::not_passed;
  for (const auto& a : item.accepted) {
    if (a == normalized) return AnswerVerdict::passed;
  }
  return AnswerVerdict::not_passed;
}

class Bank {
 public:
  const QuizItem& question_for_leaf(const ConceptId& leaf) const {
    auto it = items_.find(leaf);
    if (it == items_.end()) fail(ErrorCode::UnknownLeaf, "no question for '" + leaf.str() + "'");
    return it->second;
  }

  const std::map<ConceptId, QuizItem>& items() const noexcept { return items_; }

 private:
  friend Bank load_bank(std::string_view, const OntologyGraph&);
  std::map<ConceptId, QuizItem> items_;
};

// { "<leaf>": { "prompt": "...", "accepted": ["...", ...] }, ... }
// Every leaf of `graph` needs exactly one item; items for unknown leaves are rejected.
inline Bank load_bank(std::string_view text, const OntologyGraph& graph) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bank is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::ParseError, "bank must be a JSON object keyed by leaf");

  Bank bank;
  for (const auto& [key, value] : doc.items()) {
    auto leaf = ConceptId::try_parse(key);
    if (!leaf || graph.find_leaf(*leaf) == nullptr) {
      fail(ErrorCode::UnknownLeaf, "'" + key + "' is not a leaf of the ontology");
    }
    if (!value.is_object() || !value.contains("prompt") || !value["prompt"].is_string() ||
        !value.contains("accepted") || !value["accepted"].is_array()) {
      fail(ErrorCode::ParseError, "item '" + key + "' needs a string 'prompt' and an 'accepted' array");
    }
    QuizItem item{*leaf, value["prompt"].get<std::string>(), {}};
    for (const auto& a : value["accepted"]) {
      if (!a.is_string()) fail(ErrorCode::ParseError, "item '" + key + "': accepted answers must be strings");
      auto normalized = normalize_answer(a.get<std::string>());
      if (normalized.empty()) fail(ErrorCode::ParseError, "item '" + key + "': empty accepted answer");
      item.accepted.push_back(std::move(normalized));
    }
    if (item.accepted.empty()) fail(ErrorCode::ParseError, "item '" + key + "' has no accepted answers");
    if (!bank.items_.emplace(*leaf, std::move(item)).second) {
      fail(ErrorCode::ParseError, "duplicate item for '" + key + "'");
    }
  }
  for (const auto& parent : graph.parents()) {
    for (const auto& leaf : parent.leaves) {
      if (bank.items_.count(leaf.id) == 0) {
        fail(ErrorCode::MissingLeafQuestion, leaf.id.str());
      }
    }
  }
  return bank;
}

}  // namespace prereq
