#include <gtest/gtest.h>

#include <set>
#include <string>

#include "prereq/ontology.hpp"
#include "test_support.hpp"

namespace prereq {
namespace {

using testing::make_chain;
using testing::sample_graph;

ErrorCode load_error(const std::string& text) {
  try {
    load_ontology(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected load_ontology to fail";
  return ErrorCode::ParseError;
}

ErrorCode validate_error(const OntologyGraph& g) {
  try {
    validate_regular(g);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected validate_regular to fail";
  return ErrorCode::ParseError;
}

std::vector<std::string> ids(const std::vector<LeafNode>& leaves) {
  std::vector<std::string> out;
  for (const auto& l : leaves) out.push_back(l.id.str());
  return out;
}

// Two parents with one leaf each; the caller appends extra lines.
std::string two_parent_file(const std::string& extra) {
  return "concept a\nconcept b\n"
         "hasLeaf a a1\nhasLeaf b b1\n"
         "hasContent a u:a\nhasContent b u:b\nhasContent a1 u:a1\nhasContent b1 u:b1\n" +
         extra;
}

TEST(ConceptId, CanonicalizesToLowercase) {
  EXPECT_EQ(ConceptId("DELETE").str(), "delete");
  EXPECT_EQ(ConceptId("  Insert_Value ").str(), "insert_value");
  EXPECT_EQ(ConceptId("delete"), ConceptId("Delete"));
  EXPECT_EQ(ConceptId("delete_where").upper(), "DELETE_WHERE");
}

TEST(ConceptId, RejectsEmptyAndForeignCharacters) {
  EXPECT_THROW(ConceptId(""), Error);
  EXPECT_THROW(ConceptId("   "), Error);
  EXPECT_THROW(ConceptId("de lete"), Error);
  EXPECT_THROW(ConceptId("sql#delete"), Error);
  EXPECT_FALSE(ConceptId::try_parse("a-b").has_value());
}

TEST(LoadOntology, SampleFileHasChainOrderedParents) {
  const auto g = sample_graph();
  std::vector<std::string> parents;
  for (const auto& p : g.parents()) parents.push_back(p.id.str());
  EXPECT_EQ(parents, (std::vector<std::string>{"select", "insert", "delete", "update"}));
  EXPECT_EQ(g.prerequisite_edges().size(), 3u);
  for (const auto& p : g.parents()) {
    for (std::size_t i = 0; i < p.leaves.size(); ++i) EXPECT_EQ(p.leaves[i].declaration_index, i);
  }
}

TEST(LoadOntology, ParentsFollowChainEvenWhenDeclaredOutOfOrder) {
  const auto g = load_ontology(
      "concept b\nconcept a\nhasPrerequisite b a\n"
      "hasLeaf a a1\nhasLeaf b b1\n"
      "hasContent a u:a\nhasContent b u:b\nhasContent a1 u:a1\nhasContent b1 u:b1\n");
  EXPECT_EQ(g.parents().front().id.str(), "a");
  EXPECT_EQ(g.parents().back().id.str(), "b");
}

TEST(LoadOntology, CommentsOnlyStartAtTokenBoundaries) {
  const auto g = load_ontology(
      "# header comment\n"
      "concept a   # trailing comment\n"
      "hasLeaf a a1\n"
      "hasContent a https://example.org/sql.owl#a\n"
      "hasContent a1 https://example.org/a1\n");
  EXPECT_EQ(content_url(g, ConceptId("a")), "https://example.org/sql.owl#a");
}

TEST(LoadOntology, DanglingPrerequisiteTarget) {
  EXPECT_EQ(load_error(two_parent_file("hasPrerequisite a ghost\n")), ErrorCode::DanglingReference);
  EXPECT_EQ(load_error(two_parent_file("hasLeaf ghost g1\n")), ErrorCode::DanglingReference);
  EXPECT_EQ(load_error(two_parent_file("hasContent ghost u:g\n")), ErrorCode::DanglingReference);
}

TEST(LoadOntology, SampleWithGhostEdgeIsDangling) {
  auto text = testing::read_file(testing::data_path("sql.ont"));
  text += "hasPrerequisite delete ghost\n";
  // delete already has a prerequisite; the undeclared target is reported first.
  EXPECT_EQ(load_error(text), ErrorCode::DanglingReference);
}

TEST(LoadOntology, TwoCycleIsDetected) {
  EXPECT_EQ(load_error(two_parent_file("hasPrerequisite a b\nhasPrerequisite b a\n")), ErrorCode::CycleDetected);
  EXPECT_EQ(load_error(two_parent_file("hasPrerequisite a a\n")), ErrorCode::CycleDetected);
}

TEST(LoadOntology, LongerCycleIsDetected) {
  const std::string text =
      "concept a\nconcept b\nconcept c\n"
      "hasContent a u\nhasContent b u\nhasContent c u\n"
      "hasPrerequisite a b\nhasPrerequisite b c\nhasPrerequisite c a\n";
  EXPECT_EQ(load_error(text), ErrorCode::CycleDetected);
}

TEST(LoadOntology, GrammarErrors) {
  EXPECT_EQ(load_error("concept\n"), ErrorCode::ParseError);
  EXPECT_EQ(load_error("concept a b\n"), ErrorCode::ParseError);
  EXPECT_EQ(load_error("concept a\nconcept A\n"), ErrorCode::ParseError);
  EXPECT_EQ(load_error("concept bad-id\n"), ErrorCode::ParseError);
  EXPECT_EQ(load_error("isA a b\n"), ErrorCode::UnknownPredicate);
  EXPECT_EQ(load_error(two_parent_file("hasLeaf b a1\n")), ErrorCode::ParseError);  // leaf reused
  EXPECT_EQ(load_error(two_parent_file("hasContent a u:again\n")), ErrorCode::ParseError);
  EXPECT_EQ(load_error("concept a\nhasLeaf a a1\nhasContent a1 u\n"), ErrorCode::MissingContent);
}

TEST(LoadOntology, ErrorsCarryLineNumbers) {
  try {
    load_ontology("concept a\n\n  frobnicate a\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPredicate);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ValidateRegular, ReportsShape) {
  EXPECT_EQ(validate_regular(make_chain(3, 2)), (RegularParams{2, 2, 2}));
  EXPECT_EQ(validate_regular(make_chain(4, 3)), (RegularParams{3, 3, 2}));
  EXPECT_EQ(validate_regular(sample_graph()), (RegularParams{3, 2, 2}));
  EXPECT_EQ(validate_regular(make_chain(1, 4)), (RegularParams{0, 4, 2}));
}

TEST(ValidateRegular, IrregularLeafCount) {
  OntologyBuilder b;
  b.add_concept(ConceptId("a")).set_content(ConceptId("a"), "u");
  b.add_concept(ConceptId("b")).set_content(ConceptId("b"), "u");
  b.set_prerequisite(ConceptId("b"), ConceptId("a"));
  for (const char* leaf : {"a1", "a2"}) b.add_leaf(ConceptId("a"), ConceptId(leaf)).set_content(ConceptId(leaf), "u");
  for (const char* leaf : {"b1", "b2", "b3"}) b.add_leaf(ConceptId("b"), ConceptId(leaf)).set_content(ConceptId(leaf), "u");
  EXPECT_EQ(validate_error(b.build()), ErrorCode::IrregularLeafCount);
}

TEST(ValidateRegular, EmptyLeaves) {
  OntologyBuilder b;
  b.add_concept(ConceptId("a")).set_content(ConceptId("a"), "u");
  EXPECT_EQ(validate_error(b.build()), ErrorCode::EmptyLeaves);
}

TEST(ValidateRegular, BranchingOrDisconnectedChainsAreBroken) {
  // two dependents of one concept
  EXPECT_EQ(validate_error(load_ontology(
                "concept a\nconcept b\nconcept c\n"
                "hasPrerequisite b a\nhasPrerequisite c a\n"
                "hasContent a u\nhasContent b u\nhasContent c u\n"
                "hasLeaf a a1\nhasLeaf b b1\nhasLeaf c c1\n"
                "hasContent a1 u\nhasContent b1 u\nhasContent c1 u\n")),
            ErrorCode::BrokenChain);
  // two roots
  EXPECT_EQ(validate_error(load_ontology(two_parent_file(""))), ErrorCode::BrokenChain);
  // no parents at all
  EXPECT_EQ(validate_error(OntologyBuilder{}.build()), ErrorCode::BrokenChain);
}

TEST(LoadOntology, SecondPrerequisiteForOneConceptBreaksChain) {
  EXPECT_EQ(load_error("concept a\nconcept b\nconcept c\nhasPrerequisite a b\nhasPrerequisite a c\n"),
            ErrorCode::BrokenChain);
}

TEST(Queries, PrerequisiteOf) {
  const auto g = sample_graph();
  EXPECT_EQ(prerequisite_of(g, ConceptId("delete")), ConceptId("insert"));
  EXPECT_EQ(prerequisite_of(g, ConceptId("insert")), ConceptId("select"));
  EXPECT_EQ(prerequisite_of(g, ConceptId("select")), std::nullopt);
  EXPECT_EQ(dependent_of(g, ConceptId("delete")), ConceptId("update"));
  EXPECT_EQ(dependent_of(g, ConceptId("update")), std::nullopt);
  EXPECT_THROW(prerequisite_of(g, ConceptId("ghost")), Error);
}

TEST(Queries, LeavesOfInDeclarationOrder) {
  const auto g = sample_graph();
  EXPECT_EQ(ids(leaves_of(g, ConceptId("insert"))), (std::vector<std::string>{"insert_select", "insert_value"}));
  EXPECT_EQ(ids(leaves_of(g, ConceptId("delete"))), (std::vector<std::string>{"delete_select", "delete_where"}));
  try {
    leaves_of(g, ConceptId("ghost"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownConcept);
  }
}

TEST(Queries, ContentUrl) {
  const auto g = sample_graph();
  EXPECT_EQ(content_url(g, ConceptId("delete")), "https://learn.example.org/sql/delete");
  EXPECT_EQ(content_url(g, ConceptId("insert_value")), "https://learn.example.org/sql/insert/values");
  try {
    content_url(g, ConceptId("ghost"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownConcept);
  }
}

TEST(Queries, ConceptExistsIsCaseInsensitiveAndTotal) {
  const auto g = sample_graph();
  EXPECT_TRUE(concept_exists(g, "DELETE"));
  EXPECT_TRUE(concept_exists(g, "delete_where"));
  EXPECT_FALSE(concept_exists(g, "drop"));
  EXPECT_FALSE(concept_exists(g, ""));
  EXPECT_FALSE(concept_exists(g, "de lete"));
}

TEST(Queries, Levels) {
  const auto g = sample_graph();
  EXPECT_EQ(level_of(g, ConceptId("update")), 2);
  EXPECT_EQ(level_of(g, ConceptId("update_set")), 3);
  EXPECT_THROW(level_of(g, ConceptId("ghost")), Error);
}

class RegularChains : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(RegularChains, ShapeChainRoundTripAndContent) {
  const auto [parents, leaves] = GetParam();
  const auto g = make_chain(parents, leaves);

  const auto params = validate_regular(g);
  EXPECT_EQ(params.c + 1, parents);
  EXPECT_EQ(params.n, leaves);

  // Walking prerequisites from the top concept visits every parent once.
  std::set<ConceptId> visited;
  std::optional<ConceptId> cur = g.parents().back().id;
  while (cur) {
    EXPECT_TRUE(visited.insert(*cur).second);
    cur = prerequisite_of(g, *cur);
  }
  EXPECT_EQ(visited.size(), static_cast<std::size_t>(parents));
  EXPECT_TRUE(visited.count(g.parents().front().id));

  const auto reloaded = load_ontology(serialize_ontology(g));
  EXPECT_EQ(reloaded, g);

  for (const auto& p : g.parents()) {
    EXPECT_FALSE(p.content.empty());
    for (const auto& l : p.leaves) EXPECT_FALSE(l.content.empty());
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, RegularChains,
                         ::testing::Values(std::pair{1, 1}, std::pair{2, 2}, std::pair{3, 2}, std::pair{4, 3},
                                           std::pair{7, 5}));

TEST(RoundTrip, SampleFileSurvivesSerialization) {
  const auto g = sample_graph();
  EXPECT_EQ(load_ontology(serialize_ontology(g)), g);
}

}  // namespace
}  // namespace prereq
