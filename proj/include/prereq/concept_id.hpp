#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "prereq/error.hpp"

namespace prereq {

// Tagname of an ontology node, e.g. "delete" or "insert_value".
// Always lowercase [a-z0-9_]+; "DELETE" and "delete" name the same concept.
class ConceptId {
 public:
  explicit ConceptId(std::string_view raw) : name_(canonical(raw)) {
    if (name_.empty()) {
      fail(ErrorCode::InvalidConceptId, "concept id must not be empty");
    }
    if (!std::all_of(name_.begin(), name_.end(), valid_char)) {
      fail(ErrorCode::InvalidConceptId, "concept id '" + std::string(raw) +
                                            "' may only contain [a-z0-9_]");
    }
  }

  // Non-throwing construction for user input.
  static std::optional<ConceptId> try_parse(std::string_view raw) {
    std::string name = canonical(raw);
    if (name.empty() || !std::all_of(name.begin(), name.end(), valid_char)) {
      return std::nullopt;
    }
    return ConceptId(name);
  }

  const std::string& str() const noexcept { return name_; }

  std::string upper() const {
    std::string out = name_;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
  }

  friend bool operator==(const ConceptId&, const ConceptId&) = default;
  friend auto operator<=>(const ConceptId&, const ConceptId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const ConceptId& id) {
    return os << id.name_;
  }

 private:
  static bool valid_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  }

  static std::string canonical(std::string_view raw) {
    auto first = raw.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = raw.find_last_not_of(" \t\r\n");
    std::string out(raw.substr(first, last - first + 1));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  }

  std::string name_;
};

}  // namespace prereq

template <>
struct std::hash<prereq::ConceptId> {
  std::size_t operator()(const prereq::ConceptId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
