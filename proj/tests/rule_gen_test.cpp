#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "prereq/rule_gen.hpp"
#include "test_support.hpp"

namespace prereq {
namespace {

using testing::make_chain;
using testing::sample_graph;

std::vector<std::string> target_ids(const Recommendation& rec) {
  std::vector<std::string> out;
  for (const auto& t : rec.targets) out.push_back(t.id.str());
  return out;
}

const ConceptId kDelete{"delete"};

TEST(Outcomes, EnumerationOrderFollowsLabels) {
  const auto v = enumerate_outcomes(2);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(to_pf_string(v[0]), "PP");
  EXPECT_EQ(to_pf_string(v[1]), "PF");
  EXPECT_EQ(to_pf_string(v[2]), "FP");
  EXPECT_EQ(to_pf_string(v[3]), "FF");
  EXPECT_EQ(enumerate_outcomes(0).size(), 1u);
  EXPECT_EQ(parse_pf_string("pFf"), (OutcomeVector{Outcome::pass, Outcome::fail, Outcome::fail}));
  EXPECT_THROW(parse_pf_string("PX"), Error);
}

TEST(GenerateRules, SampleHasThirteenRules) {
  const auto set = generate_rules(sample_graph());
  EXPECT_EQ(set.rules.size(), 13u);
  const auto report = verify_count(set);
  EXPECT_EQ(report.expected, 13u);
  EXPECT_EQ(report.actual, 13u);
  EXPECT_TRUE(report.ok);

  std::set<std::string> labels;
  for (const auto& r : set.rules) {
    EXPECT_TRUE(labels.insert(r.label).second) << r.label;
    EXPECT_EQ(r.condition.has_value(), r.assessed_prereq.has_value());
    EXPECT_FALSE(r.action.targets.empty());
  }
}

TEST(GenerateRules, SingleParentGetsOnlyTheDefault) {
  const auto set = generate_rules(make_chain(1, 2));
  ASSERT_EQ(set.rules.size(), 1u);
  EXPECT_EQ(set.rules[0].label, "@p0:default");
  EXPECT_FALSE(set.rules[0].condition.has_value());
  const auto report = verify_count(set);
  EXPECT_EQ(report.expected, 1u);
  EXPECT_TRUE(report.ok);
}

TEST(GenerateRules, DeletingARuleBreaksTheCount) {
  auto set = generate_rules(sample_graph());
  set.rules.pop_back();
  const auto report = verify_count(set);
  EXPECT_EQ(report.expected, 13u);
  EXPECT_EQ(report.actual, 12u);
  EXPECT_FALSE(report.ok);
}

TEST(GenerateRules, IrregularGraphIsRejected) {
  try {
    generate_rules(load_ontology("concept a\nhasContent a u\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IrregularOntology);
  }
}

TEST(GenerateRules, DeleteRulesAreLabelledInOrder) {
  const auto set = generate_rules(sample_graph());
  std::vector<std::string> seen;
  for (const auto& r : set.rules) {
    if (r.desired == kDelete) seen.push_back(r.label + "=" + to_pf_string(*r.condition));
  }
  EXPECT_EQ(seen, (std::vector<std::string>{"@delete:d1=PP", "@delete:d2=PF", "@delete:d3=FP", "@delete:d4=FF"}));
}

TEST(Classify, DeleteDecisionTableDefaultPolicy) {
  const auto g = sample_graph();
  const auto set = generate_rules(g);

  auto pp = classify(set, kDelete, parse_pf_string("PP"));
  EXPECT_EQ(pp.verdict, Verdict::ready_for_desired);
  EXPECT_EQ(target_ids(pp), (std::vector<std::string>{"delete"}));
  EXPECT_EQ(pp.targets[0].url, content_url(g, kDelete));

  auto pf = classify(set, kDelete, parse_pf_string("PF"));
  EXPECT_EQ(pf.verdict, Verdict::remediate_leaves);
  EXPECT_EQ(target_ids(pf), (std::vector<std::string>{"insert_value"}));

  auto fp = classify(set, kDelete, parse_pf_string("FP"));
  EXPECT_EQ(fp.verdict, Verdict::remediate_leaves);
  EXPECT_EQ(target_ids(fp), (std::vector<std::string>{"insert_select"}));

  auto ff = classify(set, kDelete, parse_pf_string("FF"));
  EXPECT_EQ(ff.verdict, Verdict::remediate_leaves);
  EXPECT_EQ(target_ids(ff), (std::vector<std::string>{"insert_select", "insert_value"}));
}

TEST(Classify, DeepDescentSendsAllFailOneLevelDown) {
  const auto set = generate_rules(sample_graph(), ClassifyPolicy{.deep_descent = true});
  auto ff = classify(set, kDelete, parse_pf_string("FF"));
  EXPECT_EQ(ff.verdict, Verdict::descend_prerequisite);
  EXPECT_EQ(target_ids(ff), (std::vector<std::string>{"select"}));

  // insert's prerequisite is the least concept: nothing deeper, fall back.
  auto least = classify(set, ConceptId("insert"), parse_pf_string("FF"));
  EXPECT_EQ(least.verdict, Verdict::remediate_leaves);
  EXPECT_EQ(target_ids(least), (std::vector<std::string>{"select_from", "select_where"}));
}

TEST(Classify, LeastConceptServesItsOwnContent) {
  const auto set = generate_rules(sample_graph());
  auto rec = classify(set, ConceptId("select"), {});
  EXPECT_EQ(rec.verdict, Verdict::direct_content);
  EXPECT_EQ(target_ids(rec), (std::vector<std::string>{"select"}));
}

TEST(Classify, Errors) {
  const auto set = generate_rules(sample_graph());
  try {
    classify(set, ConceptId("drop"), parse_pf_string("PP"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownConcept);
  }
  for (const char* bad : {"P", "PPP", ""}) {
    try {
      classify(set, kDelete, parse_pf_string(bad));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadVectorLength);
    }
  }
  EXPECT_THROW(classify(set, ConceptId("select"), parse_pf_string("P")), Error);
}

// Oracle for one (desired, outcome) cell computed straight from the graph.
Recommendation expected_action(const OntologyGraph& g, const ConceptId& desired, const OutcomeVector& v,
                               bool deep) {
  const auto p = prerequisite_of(g, desired);
  if (!p) return {{{desired, content_url(g, desired)}}, Verdict::direct_content};
  const auto& leaves = leaves_of(g, *p);
  int fails = 0;
  for (auto o : v) fails += o == Outcome::fail;
  if (fails == 0) return {{{desired, content_url(g, desired)}}, Verdict::ready_for_desired};
  const auto deeper = prerequisite_of(g, *p);
  if (deep && fails == static_cast<int>(v.size()) && deeper) {
    return {{{*deeper, content_url(g, *deeper)}}, Verdict::descend_prerequisite};
  }
  Recommendation rec{{}, Verdict::remediate_leaves};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == Outcome::fail) rec.targets.push_back({leaves[i].id, leaves[i].content});
  }
  return rec;
}

// Every outcome vector of length n, built by counting in binary.
std::vector<OutcomeVector> all_vectors(int n) {
  std::vector<OutcomeVector> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    OutcomeVector v;
    for (int i = 0; i < n; ++i) v.push_back((mask >> i) & 1 ? Outcome::fail : Outcome::pass);
    out.push_back(v);
  }
  return out;
}

class RegularGraphs : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(RegularGraphs, CountIdentityTotalityAndRemediation) {
  const auto [parents, leaves] = GetParam();
  const auto g = make_chain(parents, leaves);
  for (bool deep : {false, true}) {
    const auto set = generate_rules(g, ClassifyPolicy{.deep_descent = deep});

    // brute-force count: one rule per (parent with prerequisite, vector) + default
    std::size_t brute = 1;
    for (const auto& p : g.parents()) {
      if (prerequisite_of(g, p.id)) brute += all_vectors(leaves).size();
    }
    EXPECT_EQ(set.rules.size(), brute);
    EXPECT_EQ(set.rules.size(), estimate_rules(parents - 1, leaves).value);
    EXPECT_TRUE(verify_count(set).ok);

    for (const auto& p : g.parents()) {
      if (!prerequisite_of(g, p.id)) {
        EXPECT_EQ(matching_rules(set, p.id, {}).size(), 1u);
        continue;
      }
      for (const auto& v : all_vectors(leaves)) {
        ASSERT_EQ(matching_rules(set, p.id, v).size(), 1u) << p.id << " " << to_pf_string(v);
        const auto rec = classify(set, p.id, v);
        EXPECT_EQ(rec, expected_action(g, p.id, v, deep)) << p.id << " " << to_pf_string(v);
        EXPECT_EQ(rec.verdict == Verdict::ready_for_desired,
                  rec.targets.size() == 1 && rec.targets[0].id == p.id);
      }
    }
  }
}

TEST_P(RegularGraphs, PolicyOnlyChangesAllFailRows) {
  const auto [parents, leaves] = GetParam();
  const auto g = make_chain(parents, leaves);
  const auto plain = generate_rules(g);
  const auto deep = generate_rules(g, ClassifyPolicy{.deep_descent = true});
  ASSERT_EQ(plain.rules.size(), deep.rules.size());
  for (std::size_t i = 0; i < plain.rules.size(); ++i) {
    const auto& a = plain.rules[i];
    const auto& b = deep.rules[i];
    const bool all_fail =
        a.condition && std::all_of(a.condition->begin(), a.condition->end(), [](Outcome o) { return o == Outcome::fail; });
    if (!all_fail) {
      EXPECT_EQ(a, b) << a.label;
    }
  }
}

std::vector<std::pair<int, int>> all_shapes() {
  std::vector<std::pair<int, int>> out;
  for (int p = 1; p <= 7; ++p) {
    for (int n = 1; n <= 5; ++n) out.emplace_back(p, n);
  }
  return out;
}

INSTANTIATE_TEST_SUITE_P(Shapes, RegularGraphs, ::testing::ValuesIn(all_shapes()),
                         [](const auto& info) {
                           return "P" + std::to_string(info.param.first) + "N" + std::to_string(info.param.second);
                         });

TEST(Render, TextAndJson) {
  const auto set = generate_rules(sample_graph());
  const auto text = rules_to_text(set);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 13);
  EXPECT_NE(text.find("@delete:d4 delete FF -> remediate_leaves(insert_select, insert_value)\n"), std::string::npos);
  EXPECT_NE(text.find("@select:default select - -> direct_content(select)\n"), std::string::npos);

  const auto json = rules_to_json(set);
  ASSERT_EQ(json.size(), 13u);
  bool found = false;
  for (const auto& r : json) {
    if (r["label"] == "@delete:d2") {
      found = true;
      EXPECT_EQ(r["condition"], "PF");
      EXPECT_EQ(r["assessed_prereq"], "insert");
      EXPECT_EQ(r["action"]["verdict"], "remediate_leaves");
      EXPECT_EQ(r["action"]["targets"][0]["concept"], "insert_value");
    }
  }
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace prereq
