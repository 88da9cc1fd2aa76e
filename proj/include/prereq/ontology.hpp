#pragma once

// Regular prerequisite ontology: a single chain of parent concepts, each
// carrying the same number of ordered leaf concepts, every node holding a
// content URL.
//
// File grammar (line based, whitespace separated, '#' at token start begins a
// comment):
//   concept <id>
//   hasPrerequisite <concept> <prerequisite>
//   hasLeaf <parent> <leaf>
//   hasContent <node> <url>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prereq/concept_id.hpp"
#include "prereq/error.hpp"

namespace prereq {

struct LeafNode {
  ConceptId id;
  std::string content;
  std::size_t declaration_index = 0;

  friend bool operator==(const LeafNode&, const LeafNode&) = default;
};

struct ConceptNode {
  ConceptId id;
  std::vector<LeafNode> leaves;
  std::string content;

  friend bool operator==(const ConceptNode&, const ConceptNode&) = default;
};

// Shape of a regular ontology: c prerequisite classes, n leaves per parent,
// binary outcome arity.
struct RegularParams {
  static constexpr std::int64_t kOutcomeArity = 2;

  std::int64_t c = 0;
  std::int64_t n = 1;
  std::int64_t t = kOutcomeArity;

  friend bool operator==(const RegularParams&, const RegularParams&) = default;
};

class OntologyGraph {
 public:
  // Parent concepts, least concept first when the prerequisites form a chain.
  const std::vector<ConceptNode>& parents() const noexcept { return parents_; }

  // concept -> its immediate prerequisite
  const std::map<ConceptId, ConceptId>& prerequisite_edges() const noexcept { return edges_; }

  const ConceptNode* find_parent(const ConceptId& id) const {
    auto it = parent_index_.find(id);
    return it == parent_index_.end() ? nullptr : &parents_[it->second];
  }

  const LeafNode* find_leaf(const ConceptId& id) const {
    auto it = leaf_index_.find(id);
    if (it == leaf_index_.end()) return nullptr;
    return &parents_[it->second.first].leaves[it->second.second];
  }

  // Parent that owns `leaf`, or nullptr.
  const ConceptNode* owner_of(const ConceptId& leaf) const {
    auto it = leaf_index_.find(leaf);
    return it == leaf_index_.end() ? nullptr : &parents_[it->second.first];
  }

  bool contains(const ConceptId& id) const {
    return parent_index_.count(id) != 0 || leaf_index_.count(id) != 0;
  }

  friend bool operator==(const OntologyGraph& a, const OntologyGraph& b) {
    return a.parents_ == b.parents_ && a.edges_ == b.edges_;
  }

 private:
  friend class OntologyBuilder;

  void reindex() {
    parent_index_.clear();
    leaf_index_.clear();
    for (std::size_t p = 0; p < parents_.size(); ++p) {
      parent_index_.emplace(parents_[p].id, p);
      for (std::size_t l = 0; l < parents_[p].leaves.size(); ++l) {
        leaf_index_.emplace(parents_[p].leaves[l].id, std::make_pair(p, l));
      }
    }
  }

  std::vector<ConceptNode> parents_;
  std::map<ConceptId, ConceptId> edges_;
  std::unordered_map<ConceptId, std::size_t> parent_index_;
  std::unordered_map<ConceptId, std::pair<std::size_t, std::size_t>> leaf_index_;
};

namespace detail {

inline std::string at_line(std::size_t line) {
  return line == 0 ? std::string() : " (line " + std::to_string(line) + ")";
}

// Orders `declared` least-first along the prerequisite edges. Returns nullopt
// unless the edges form one linear chain covering every concept.
inline std::optional<std::vector<ConceptId>> chain_order(
    const std::vector<ConceptId>& declared, const std::map<ConceptId, ConceptId>& edges) {
  if (declared.empty()) return std::nullopt;
  std::map<ConceptId, ConceptId> dependent;
  for (const auto& [child, prereq] : edges) {
    if (!dependent.emplace(prereq, child).second) return std::nullopt;  // two dependents
  }
  std::optional<ConceptId> least;
  for (const auto& id : declared) {
    if (edges.count(id) == 0) {
      if (least) return std::nullopt;  // two roots
      least = id;
    }
  }
  if (!least) return std::nullopt;
  std::vector<ConceptId> order{*least};
  while (order.size() <= declared.size()) {
    auto it = dependent.find(order.back());
    if (it == dependent.end()) break;
    order.push_back(it->second);
  }
  if (order.size() != declared.size()) return std::nullopt;
  return order;
}

}  // namespace detail

// Collects declarations in any order and resolves them into a graph.
// Statements carry an optional source line for diagnostics.
class OntologyBuilder {
 public:
  OntologyBuilder& add_concept(ConceptId id, std::size_t line = 0) {
    concepts_.push_back({std::move(id), line});
    return *this;
  }

  OntologyBuilder& add_leaf(ConceptId parent, ConceptId leaf, std::size_t line = 0) {
    leaves_.push_back({std::move(parent), std::move(leaf), line});
    return *this;
  }

  OntologyBuilder& set_content(ConceptId node, std::string url, std::size_t line = 0) {
    contents_.push_back({std::move(node), std::move(url), line});
    return *this;
  }

  OntologyBuilder& set_prerequisite(ConceptId node, ConceptId prerequisite,
                                    std::size_t line = 0) {
    edges_.push_back({std::move(node), std::move(prerequisite), line});
    return *this;
  }

  OntologyGraph build() const {
    std::vector<ConceptId> declared;
    std::set<ConceptId> concept_set;
    for (const auto& [id, line] : concepts_) {
      if (!concept_set.insert(id).second) {
        fail(ErrorCode::ParseError, "duplicate concept '" + id.str() + "'" + detail::at_line(line));
      }
      declared.push_back(id);
    }

    std::map<ConceptId, std::vector<ConceptId>> leaves_of;
    std::set<ConceptId> leaf_set;
    for (const auto& [parent, leaf, line] : leaves_) {
      if (concept_set.count(parent) == 0) {
        fail(ErrorCode::DanglingReference,
             "hasLeaf references undeclared concept '" + parent.str() + "'" + detail::at_line(line));
      }
      if (concept_set.count(leaf) != 0 || !leaf_set.insert(leaf).second) {
        fail(ErrorCode::ParseError, "leaf id '" + leaf.str() + "' is not unique" + detail::at_line(line));
      }
      leaves_of[parent].push_back(leaf);
    }

    std::map<ConceptId, std::string> content;
    for (const auto& [node, url, line] : contents_) {
      if (concept_set.count(node) == 0 && leaf_set.count(node) == 0) {
        fail(ErrorCode::DanglingReference,
             "hasContent references undeclared node '" + node.str() + "'" + detail::at_line(line));
      }
      if (url.empty()) {
        fail(ErrorCode::MissingContent, "empty URL for '" + node.str() + "'" + detail::at_line(line));
      }
      if (!content.emplace(node, url).second) {
        fail(ErrorCode::ParseError, "duplicate hasContent for '" + node.str() + "'" + detail::at_line(line));
      }
    }

    std::map<ConceptId, ConceptId> edges;
    for (const auto& [child, prereq, line] : edges_) {
      for (const auto* end : {&child, &prereq}) {
        if (concept_set.count(*end) == 0) {
          fail(ErrorCode::DanglingReference, "hasPrerequisite references undeclared concept '" +
                                                 end->str() + "'" + detail::at_line(line));
        }
      }
      if (child == prereq) {
        fail(ErrorCode::CycleDetected, "'" + child.str() + "' is its own prerequisite" + detail::at_line(line));
      }
      auto [it, inserted] = edges.emplace(child, prereq);
      if (!inserted) {
        fail(ErrorCode::BrokenChain, "'" + child.str() + "' has more than one prerequisite" +
                                         detail::at_line(line));
      }
    }
    check_acyclic(edges);

    for (const auto& id : declared) require_content(content, id);
    for (const auto& id : leaf_set) require_content(content, id);

    auto order = detail::chain_order(declared, edges).value_or(declared);

    OntologyGraph graph;
    graph.edges_ = std::move(edges);
    for (const auto& id : order) {
      ConceptNode node{id, {}, content.at(id)};
      const auto& leaves = leaves_of[id];
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        node.leaves.push_back(LeafNode{leaves[i], content.at(leaves[i]), i});
      }
      graph.parents_.push_back(std::move(node));
    }
    graph.reindex();
    return graph;
  }

 private:
  struct ConceptDecl {
    ConceptId id;
    std::size_t line;
  };
  struct LeafDecl {
    ConceptId parent;
    ConceptId leaf;
    std::size_t line;
  };
  struct ContentDecl {
    ConceptId node;
    std::string url;
    std::size_t line;
  };
  struct EdgeDecl {
    ConceptId child;
    ConceptId prereq;
    std::size_t line;
  };

  static void require_content(const std::map<ConceptId, std::string>& content, const ConceptId& id) {
    if (content.count(id) == 0) {
      fail(ErrorCode::MissingContent, "no hasContent declared for '" + id.str() + "'");
    }
  }

  // Each concept has at most one outgoing edge, so walking from every start
  // either terminates or revisits a node.
  static void check_acyclic(const std::map<ConceptId, ConceptId>& edges) {
    for (const auto& [start, _] : edges) {
      std::set<ConceptId> seen{start};
      auto it = edges.find(start);
      while (it != edges.end()) {
        if (!seen.insert(it->second).second) {
          fail(ErrorCode::CycleDetected, "prerequisite cycle through '" + it->second.str() + "'");
        }
        it = edges.find(it->second);
      }
    }
  }

  std::vector<ConceptDecl> concepts_;
  std::vector<LeafDecl> leaves_;
  std::vector<ContentDecl> contents_;
  std::vector<EdgeDecl> edges_;
};

inline OntologyGraph load_ontology(std::string_view text) {
  OntologyBuilder builder;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream line(raw);
    std::vector<std::string> tokens;
    for (std::string tok; line >> tok;) {
      if (tok.front() == '#') break;
      tokens.push_back(std::move(tok));
    }
    if (tokens.empty()) continue;

    const std::string& predicate = tokens.front();
    auto expect_args = [&](std::size_t n) {
      if (tokens.size() != n + 1) {
        fail(ErrorCode::ParseError, "'" + predicate + "' expects " + std::to_string(n) +
                                        " argument(s)" + detail::at_line(line_no));
      }
    };
    auto id = [&](const std::string& tok) {
      auto parsed = ConceptId::try_parse(tok);
      if (!parsed) {
        fail(ErrorCode::ParseError, "invalid concept id '" + tok + "'" + detail::at_line(line_no));
      }
      return *parsed;
    };

    if (predicate == "concept") {
      expect_args(1);
      builder.add_concept(id(tokens[1]), line_no);
    } else if (predicate == "hasPrerequisite") {
      expect_args(2);
      builder.set_prerequisite(id(tokens[1]), id(tokens[2]), line_no);
    } else if (predicate == "hasLeaf") {
      expect_args(2);
      builder.add_leaf(id(tokens[1]), id(tokens[2]), line_no);
    } else if (predicate == "hasContent") {
      expect_args(2);
      builder.set_content(id(tokens[1]), tokens[2], line_no);
    } else {
      fail(ErrorCode::UnknownPredicate, "'" + predicate + "'" + detail::at_line(line_no));
    }
  }
  return builder.build();
}

// Inverse of load_ontology: reloading the output yields an equal graph.
inline std::string serialize_ontology(const OntologyGraph& graph) {
  std::ostringstream out;
  for (const auto& node : graph.parents()) out << "concept " << node.id << '\n';
  for (const auto& node : graph.parents()) {
    auto it = graph.prerequisite_edges().find(node.id);
    if (it != graph.prerequisite_edges().end()) {
      out << "hasPrerequisite " << it->first << ' ' << it->second << '\n';
    }
  }
  for (const auto& node : graph.parents()) {
    out << "hasContent " << node.id << ' ' << node.content << '\n';
    for (const auto& leaf : node.leaves) {
      out << "hasLeaf " << node.id << ' ' << leaf.id << '\n';
      out << "hasContent " << leaf.id << ' ' << leaf.content << '\n';
    }
  }
  return out.str();
}

inline RegularParams validate_regular(const OntologyGraph& graph) {
  std::vector<ConceptId> declared;
  for (const auto& node : graph.parents()) declared.push_back(node.id);
  if (!detail::chain_order(declared, graph.prerequisite_edges())) {
    fail(ErrorCode::BrokenChain, "prerequisites do not form a single linear chain");
  }
  for (const auto& node : graph.parents()) {
    if (node.leaves.empty()) {
      fail(ErrorCode::EmptyLeaves, "concept '" + node.id.str() + "' has no leaves");
    }
  }
  const std::size_t n = graph.parents().front().leaves.size();
  for (const auto& node : graph.parents()) {
    if (node.leaves.size() != n) {
      fail(ErrorCode::IrregularLeafCount,
           "concept '" + node.id.str() + "' has " + std::to_string(node.leaves.size()) +
               " leaves, expected " + std::to_string(n));
    }
  }
  return RegularParams{static_cast<std::int64_t>(graph.parents().size()) - 1,
                       static_cast<std::int64_t>(n), RegularParams::kOutcomeArity};
}

inline const ConceptNode& require_parent(const OntologyGraph& graph, const ConceptId& id) {
  const auto* node = graph.find_parent(id);
  if (node == nullptr) fail(ErrorCode::UnknownConcept, "'" + id.str() + "' is not a parent concept");
  return *node;
}

inline std::optional<ConceptId> prerequisite_of(const OntologyGraph& graph, const ConceptId& node) {
  require_parent(graph, node);
  auto it = graph.prerequisite_edges().find(node);
  if (it == graph.prerequisite_edges().end()) return std::nullopt;
  return it->second;
}

inline std::optional<ConceptId> dependent_of(const OntologyGraph& graph, const ConceptId& node) {
  require_parent(graph, node);
  for (const auto& [child, prereq] : graph.prerequisite_edges()) {
    if (prereq == node) return child;
  }
  return std::nullopt;
}

inline const std::vector<LeafNode>& leaves_of(const OntologyGraph& graph, const ConceptId& node) {
  return require_parent(graph, node).leaves;
}

inline const std::string& content_url(const OntologyGraph& graph, const ConceptId& node) {
  if (const auto* parent = graph.find_parent(node)) return parent->content;
  if (const auto* leaf = graph.find_leaf(node)) return leaf->content;
  fail(ErrorCode::UnknownConcept, "'" + node.str() + "'");
}

inline bool concept_exists(const OntologyGraph& graph, std::string_view raw) {
  auto id = ConceptId::try_parse(raw);
  return id && graph.contains(*id);
}

// Depth in the ontology tree: 2 for parent concepts, 3 for leaves (level 1 is
// the unnamed root).
inline int level_of(const OntologyGraph& graph, const ConceptId& node) {
  if (graph.find_parent(node) != nullptr) return 2;
  if (graph.find_leaf(node) != nullptr) return 3;
  fail(ErrorCode::UnknownConcept, "'" + node.str() + "'");
}

}  // namespace prereq
