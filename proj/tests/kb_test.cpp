// Copyright 2026 The Partial-EL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

namespace {

using namespace partial_el;
using testing_support::make_kb;
using testing_support::make_partial;
using testing_support::TempDir;

KnowledgeBase parse(const std::string &text, const std::string &name = "kb") {
  std::istringstream in(text);
  return parse_kb(in, name);
}

std::string error_code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code() + ": " + e.what();
  }
  return "";
}

TEST(LoadKb, TwoLines) {
  const auto kb = parse(
      R"({"id": "A", "name": "alpha", "synonyms": ["al"], "types": ["T1"]})"
      "\n"
      R"({"id": "B", "name": "beta"})"
      "\n");
  EXPECT_EQ(kb.size(), 2u);
  EXPECT_EQ(kb.at(ConceptId("A")).synonyms, (std::vector<std::string>{"alpha", "al"}));
  EXPECT_EQ(kb.at(ConceptId("B")).synonyms, (std::vector<std::string>{"beta"}));
  EXPECT_EQ(kb.at(ConceptId("A")).semantic_types, (std::set<std::string>{"T1"}));
}

TEST(LoadKb, DuplicateIdNamesTheId) {
  const auto msg = error_code_of([] { parse("{\"id\": \"X\", \"name\": \"x\"}\n{\"id\": \"X\", \"name\": \"y\"}\n"); });
  EXPECT_NE(msg.find("duplicate_id"), std::string::npos);
  EXPECT_NE(msg.find("X"), std::string::npos);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(LoadKb, EmptyFile) {
  EXPECT_NE(error_code_of([] { parse("\n  \n"); }).find("empty_kb"), std::string::npos);
}

TEST(LoadKb, ParseErrorHasLineNumber) {
  const auto msg = error_code_of([] { parse("{\"id\": \"A\", \"name\": \"a\"}\n{oops\n"); });
  EXPECT_EQ(msg.rfind("parse_error", 0), 0u);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(LoadKb, MissingNameIsAnError) {
  EXPECT_NE(error_code_of([] { parse("{\"id\": \"A\"}\n"); }).find("parse_error"), std::string::npos);
}

TEST(LoadKb, NamedAfterFileStem) {
  TempDir dir;
  testing_support::spit(dir / "medic.jsonl", "{\"id\": \"A\", \"name\": \"a\"}\n");
  EXPECT_EQ(load_kb(dir / "medic.jsonl").name(), "medic");
  EXPECT_EQ(error_code_of([&] { load_kb(dir / "missing.jsonl"); }).rfind("io_error", 0), 0u);
}

TEST(Concept, CanonicalFirstAndCaseFoldedDedup) {
  const auto c = make_concept(ConceptId("A"), "Blood Pressure", {"blood pressure", "BP", "bp", "Blood  pressure"});
  EXPECT_EQ(c.synonyms, (std::vector<std::string>{"Blood Pressure", "BP", "Blood  pressure"}));
  EXPECT_EQ(c.canonical_name, "Blood Pressure");
}

TEST(Concept, EmptyIdOrNameRejected) {
  EXPECT_THROW(ConceptId(""), Error);
  EXPECT_THROW(make_concept(ConceptId("A"), "", {}), Error);
  EXPECT_THROW(make_concept(ConceptId("A"), "a", {""}), Error);
}

TEST(KbRoundTrip, WriteThenParse) {
  const auto kb = make_kb("kb", {{"A", "alpha", {"al"}, {"T1", "T2"}}, {"B", "beta"}});
  std::ostringstream out;
  write_kb(kb, out);
  const auto back = parse(out.str());
  ASSERT_EQ(back.size(), 2u);
  for (const auto &[id, c] : kb.concepts()) {
    EXPECT_EQ(back.at(id).synonyms, c.synonyms);
    EXPECT_EQ(back.at(id).semantic_types, c.semantic_types);
  }
}

class SubsetTest : public ::testing::Test {
 protected:
  KnowledgeBase kb = make_kb("kb", {{"A", "alpha"}, {"B", "beta", {}, {"T038"}}, {"C", "gamma ray", {}, {"T001"}}});
};

TEST_F(SubsetTest, IdList) {
  const auto r = subset(kb, IdListSelector{{ConceptId("A"), ConceptId("C")}}, "p");
  EXPECT_EQ(r.partial.member_ids, (std::set<ConceptId>{ConceptId("A"), ConceptId("C")}));
  EXPECT_EQ(r.partial.parent, "kb");
  EXPECT_EQ(r.dropped, 0u);
  EXPECT_TRUE(r.proper);
}

TEST_F(SubsetTest, UnknownIdsDroppedAndCounted) {
  const auto r = subset(kb, IdListSelector{{ConceptId("A"), ConceptId("Z"), ConceptId("Y")}}, "p");
  EXPECT_EQ(r.partial.member_ids, (std::set<ConceptId>{ConceptId("A")}));
  EXPECT_EQ(r.dropped, 2u);
}

TEST_F(SubsetTest, SemanticType) {
  const auto r = subset(kb, SemanticTypeSelector{"T038"}, "T038");
  EXPECT_EQ(r.partial.member_ids, (std::set<ConceptId>{ConceptId("B")}));
}

TEST_F(SubsetTest, FullListIsNotProper) {
  const auto r = subset(kb, IdListSelector{{ConceptId("A"), ConceptId("B"), ConceptId("C")}}, "all");
  EXPECT_EQ(r.partial.member_ids, kb.ids());
  EXPECT_FALSE(r.proper);
}

TEST_F(SubsetTest, EmptyResultIsAnError) {
  EXPECT_NE(error_code_of([&] { subset(kb, SemanticTypeSelector{"T999"}, "none"); }).find("empty_partial"),
            std::string::npos);
}

TEST_F(SubsetTest, NameListFile) {
  TempDir dir;
  testing_support::spit(dir / "names.txt", "# header\nA\n  GAMMA ray  # by name\nnothing here\n\n");
  const auto r = subset(kb, NameListSelector{dir / "names.txt"}, "n");
  EXPECT_EQ(r.partial.member_ids, (std::set<ConceptId>{ConceptId("A"), ConceptId("C")}));
  EXPECT_EQ(r.dropped, 1u);
}

TEST_F(SubsetTest, Idempotent) {
  const auto a = subset(kb, SemanticTypeSelector{"T001"}, "x");
  const auto b = subset(kb, SemanticTypeSelector{"T001"}, "x");
  EXPECT_EQ(a.partial.member_ids, b.partial.member_ids);
}

TEST(Complement, Basic) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}, {"C", "c"}, {"D", "d"}, {"E", "e"}});
  const auto c = complement(kb, make_partial(kb, "p", {"B", "D"}));
  EXPECT_EQ(c.member_ids, (std::set<ConceptId>{ConceptId("A"), ConceptId("C"), ConceptId("E")}));
  EXPECT_EQ(c.name, "p∁");
  EXPECT_EQ(c.parent, "kb");
}

TEST(Complement, AllButOne) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}, {"X", "x"}});
  EXPECT_EQ(complement(kb, make_partial(kb, "p", {"A", "B"})).member_ids, (std::set<ConceptId>{ConceptId("X")}));
}

TEST(Complement, SizeIsDifference) {
  std::vector<testing_support::ConceptSpec> specs;
  std::vector<std::string> ids;
  for (int i = 0; i < 1000; ++i) {
    specs.push_back({"C" + std::to_string(i), "n" + std::to_string(i)});
    if (i % 3 == 0) ids.push_back("C" + std::to_string(i));
  }
  const auto kb = make_kb("kb", specs);
  EXPECT_EQ(complement(kb, make_partial(kb, "p", ids)).member_ids.size(), 1000u - ids.size());
}

TEST(Complement, Errors) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}});
  auto other = make_partial(kb, "p", {"A"});
  other.parent = "other";
  EXPECT_NE(error_code_of([&] { complement(kb, other); }).find("parent_mismatch"), std::string::npos);
  EXPECT_NE(error_code_of([&] { complement(kb, make_partial(kb, "all", {"A", "B"})); }).find("empty_complement"),
            std::string::npos);
}

TEST(Complement, Involution) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}, {"C", "c"}});
  const auto p = make_partial(kb, "p", {"B"});
  const auto cc = complement(kb, complement(kb, p));
  EXPECT_EQ(cc.member_ids, p.member_ids);
  EXPECT_EQ(cc.name, p.name);
}

TEST(KbView, MembershipAndErrors) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}});
  const KbView full(kb);
  const KbView part(kb, make_partial(kb, "p", {"B"}));
  EXPECT_TRUE(full.is_full());
  EXPECT_EQ(full.size(), 2u);
  EXPECT_EQ(part.size(), 1u);
  EXPECT_FALSE(part.contains(ConceptId("A")));
  EXPECT_TRUE(part.contains(ConceptId("B")));
  EXPECT_EQ(part.name(), "p");
  auto bad = make_partial(kb, "q", {"Z"});
  EXPECT_THROW(KbView(kb, bad), Error);
  bad = make_partial(kb, "q", {"A"});
  bad.parent = "x";
  EXPECT_THROW(KbView(kb, bad), Error);
}

TEST(PartialKbJson, RoundTripAndEmpty) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}});
  const auto p = make_partial(kb, "p", {"B"});
  const auto back = partial_from_json(partial_to_json(p));
  EXPECT_EQ(back.member_ids, p.member_ids);
  EXPECT_EQ(back.parent, "kb");
  EXPECT_THROW(partial_from_json(nlohmann::json{{"name", "e"}, {"parent", "kb"}, {"members", nlohmann::json::array()}}),
               Error);
}

}  // namespace
