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
using testing_support::gold;
using testing_support::make_kb;
using testing_support::make_partial;

Corpus parse(const std::string &text, const KnowledgeBase *kb = nullptr) {
  std::istringstream in(text);
  return parse_corpus(in, Split::kTest, kb);
}

std::string code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return "";
}

TEST(LoadCorpus, OneDocTwoAnnotations) {
  const auto c = parse(
      R"({"doc_id": "d1", "text": "Indomethacin induced hypotension", "annotations": [)"
      R"({"start": 0, "end": 12, "concept": "D007213"}, {"start": 21, "end": 32, "concept": "D007022"}]})");
  ASSERT_EQ(c.documents().size(), 1u);
  ASSERT_EQ(c.annotations().size(), 2u);
  EXPECT_EQ(c.documents()[0].slice(c.annotations()[1].span), "hypotension");
}

TEST(LoadCorpus, SpanPastEndRejected) {
  EXPECT_EQ(code_of([] { parse(R"({"doc_id": "d", "text": "abc", "annotations": [{"start": 1, "end": 4, "concept": "A"}]})"); }),
            "span_out_of_range");
  EXPECT_EQ(code_of([] { parse(R"({"doc_id": "d", "text": "abc", "annotations": [{"start": 2, "end": 2, "concept": "A"}]})"); }),
            "span_out_of_range");
}

TEST(LoadCorpus, ErrorsCarryCodes) {
  EXPECT_EQ(code_of([] { parse("{\"doc_id\": \"d\"}"); }), "parse_error");
  EXPECT_EQ(code_of([] { parse("{\"doc_id\": \"d\", \"text\": \"\"}"); }), "invalid_document");
  EXPECT_EQ(code_of([] { parse("{\"doc_id\": \"d\", \"text\": \"a\"}\n{\"doc_id\": \"d\", \"text\": \"b\"}"); }),
            "duplicate_document");
  const auto kb = make_kb("kb", {{"A", "a"}});
  EXPECT_EQ(code_of([&] {
              parse(R"({"doc_id": "d", "text": "abc", "annotations": [{"start": 0, "end": 1, "concept": "B"}]})", &kb);
            }),
            "unknown_concept");
}

TEST(Corpus, DanglingDocId) {
  std::vector<Document> docs{Document("d", "text")};
  EXPECT_EQ(code_of([&] { Corpus(Split::kDev, docs, {gold("e", 0, 1, "A")}); }), "dangling_doc_id");
}

TEST(LoadCorpus, CompositeMentionsExpand) {
  const auto c = parse(
      R"({"doc_id": "d", "text": "sodium and volume", "annotations": [{"start": 0, "end": 17, "concept": "A|B"},)"
      R"( {"start": 0, "end": 6, "concept": ["C", "D|E"]}]})");
  EXPECT_EQ(c.annotations().size(), 5u);
}

TEST(Corpus, AnnotationsSortedAndUnique) {
  std::vector<Document> docs{Document("b", "xx yy"), Document("a", "zz")};
  const Corpus c(Split::kTrain, docs,
                 {gold("b", 3, 5, "A"), gold("a", 0, 2, "B"), gold("b", 0, 2, "A"), gold("b", 0, 2, "A")});
  ASSERT_EQ(c.annotations().size(), 3u);
  EXPECT_TRUE(std::is_sorted(c.annotations().begin(), c.annotations().end()));
  EXPECT_EQ(c.documents()[0].doc_id(), "a");
  EXPECT_EQ(c.annotations_for("b").size(), 2u);
  EXPECT_EQ(c.annotations_for("nope").size(), 0u);
}

TEST(Corpus, WriteParseRoundTrip) {
  const auto c = parse(
      R"({"doc_id": "d", "text": "café au lait", "annotations": [{"start": 0, "end": 4, "concept": "A"}]})");
  std::ostringstream out;
  write_corpus(c, out);
  const auto back = parse(out.str());
  EXPECT_EQ(back.annotations(), c.annotations());
  EXPECT_EQ(back.documents()[0].text(), "café au lait");
  EXPECT_EQ(back.documents()[0].slice(back.annotations()[0].span), "café");
}

class RestrictTest : public ::testing::Test {
 protected:
  KnowledgeBase kb = make_kb("kb", {{"A", "a"}, {"B", "b"}, {"C", "c"}});
  Corpus corpus{Split::kTest,
                {Document("d", "aaaaa bb cc"), Document("e", "zz")},
                {gold("d", 0, 5, "A"), gold("d", 6, 8, "B"), gold("e", 0, 2, "B")}};
};

TEST_F(RestrictTest, KeepsOnlyViewConcepts) {
  const auto r = restrict_gold(corpus, KbView(kb, make_partial(kb, "p", {"A"})));
  EXPECT_EQ(r.annotations(), (std::vector<GoldAnnotation>{gold("d", 0, 5, "A")}));
  EXPECT_EQ(r.documents().size(), 2u);  // documents survive
}

TEST_F(RestrictTest, FullViewIsIdentity) {
  EXPECT_EQ(restrict_gold(corpus, KbView(kb)).annotations(), corpus.annotations());
}

TEST_F(RestrictTest, IdempotentAndMonotone) {
  const KbView ab(kb, make_partial(kb, "ab", {"A", "B"}));
  const KbView a(kb, make_partial(kb, "a", {"A"}));
  const auto once = restrict_gold(corpus, ab);
  EXPECT_EQ(restrict_gold(once, ab).annotations(), once.annotations());
  const auto smaller = restrict_gold(corpus, a);
  EXPECT_TRUE(std::includes(once.annotations().begin(), once.annotations().end(), smaller.annotations().begin(),
                            smaller.annotations().end()));
}

TEST(Stats, CountsAndProportion) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}, {"C", "c"}});
  const Corpus train(Split::kTrain, {Document("t", "aaaa bbbb cccc")},
                     {gold("t", 0, 4, "A"), gold("t", 5, 9, "A"), gold("t", 10, 14, "C"), gold("t", 5, 9, "B")});
  const Corpus test(Split::kTest, {Document("d", "aaaa bbbb cccc")},
                    {gold("d", 0, 4, "A"), gold("d", 5, 9, "B"), gold("d", 10, 14, "B")});
  const auto full = stats(test, KbView(kb), &train);
  EXPECT_EQ(full.n_annotations, 3u);
  EXPECT_EQ(full.n_annotated_concepts, 2u);
  EXPECT_EQ(full.n_concepts, 3u);
  EXPECT_EQ(*full.n_annotations_in_train, 3u);
  EXPECT_EQ(*full.n_concepts_in_train, 2u);
  EXPECT_DOUBLE_EQ(*full.annotation_proportion, 1.0);

  const auto pa = make_partial(kb, "p", {"A"});
  const auto part = stats(test, KbView(kb, pa), &train);
  const auto comp = stats(test, KbView(kb, complement(kb, pa)), &train);
  EXPECT_EQ(part.n_annotations + comp.n_annotations, full.n_annotations);
  EXPECT_DOUBLE_EQ(*part.annotation_proportion, 0.5);
  EXPECT_DOUBLE_EQ(*comp.annotation_proportion, 0.5);
  EXPECT_FALSE(stats(test, KbView(kb)).annotation_proportion.has_value());
}

TEST(Stats, MixedSpans) {
  const auto kb = make_kb("kb", {{"A", "a"}, {"B", "b"}});
  const Corpus c(Split::kTest, {Document("d", "abc")}, {gold("d", 0, 3, "A"), gold("d", 0, 3, "B")});
  EXPECT_EQ(stats(c, KbView(kb, make_partial(kb, "p", {"A"}))).mixed_spans, 1u);
  EXPECT_EQ(restrict_gold(c, KbView(kb, make_partial(kb, "p", {"A"}))).annotations().size(), 1u);
  EXPECT_EQ(stats(c, KbView(kb)).mixed_spans, 0u);
}

}  // namespace
