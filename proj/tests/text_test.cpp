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

#include "support.hpp"

namespace {

using namespace partial_el;

TEST(Tokenize, SplitsOnPunctuationAndSpace) {
  const auto t = tokenize("Indomethacin induced hypotension");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], (TokenSpan{"indomethacin", {0, 12}}));
  EXPECT_EQ(t[1], (TokenSpan{"induced", {13, 20}}));
  EXPECT_EQ(t[2], (TokenSpan{"hypotension", {21, 32}}));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, UnitsWithSlash) {
  EXPECT_EQ(tokenize_words("4 mg/kg"), (std::vector<std::string>{"4", "mg", "kg"}));
}

TEST(Tokenize, OnlySeparators) { EXPECT_TRUE(tokenize(" ,.;-/() ").empty()); }

TEST(Tokenize, CodePointOffsets) {
  // "é" is two bytes but one code point.
  const auto t = tokenize("Émile's café, ok");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0], (TokenSpan{"émile", {0, 5}}));
  EXPECT_EQ(t[1], (TokenSpan{"s", {6, 7}}));
  EXPECT_EQ(t[2], (TokenSpan{"café", {8, 12}}));
  EXPECT_EQ(t[3], (TokenSpan{"ok", {14, 16}}));
}

TEST(FoldCase, SimpleMappings) {
  EXPECT_EQ(fold_case("ABC xyz 09"), "abc xyz 09");
  EXPECT_EQ(fold_case("ÀÉÎÕÜ"), "àéîõü");
  EXPECT_EQ(fold_case("ΑΒΓ"), "αβγ");
  EXPECT_EQ(fold_case("ДЖЁ"), "джё");
  EXPECT_EQ(fold_case("×"), "×");  // not a letter
}

TEST(Utf8, MalformedBytesAdvance) {
  const std::string bad = "a\xff" "b";
  EXPECT_EQ(utf8::decode_all(bad).size(), 3u);
  EXPECT_EQ(tokenize_words(bad).size(), 2u);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

// Every token is the case-folded text under its span, tokens are ordered and
// disjoint, and everything between tokens is a separator.
TEST(TokenizeProperty, SpansReconstructTokens) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"Ab", "c", "É", "ß", " ", ",", "-", "Ωx", "9", "…", "\t", "Д"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int i = std::uniform_int_distribution<int>(0, 20)(rng); i > 0; --i) text += pieces[pick(rng)];
    const Document doc("d", text.empty() ? " " : text);
    const auto cps = utf8::decode_all(doc.text());
    const auto tokens = tokenize(doc.text());
    std::size_t covered_to = 0;
    for (const auto &t : tokens) {
      ASSERT_LT(t.span.start, t.span.end);
      ASSERT_GE(t.span.start, covered_to);
      for (std::size_t i = covered_to; i < t.span.start; ++i) ASSERT_FALSE(is_word_char(cps[i]));
      ASSERT_EQ(fold_case(doc.slice(t.span)), t.token);
      covered_to = t.span.end;
    }
    for (std::size_t i = covered_to; i < cps.size(); ++i) ASSERT_FALSE(is_word_char(cps[i]));
  }
}

}  // namespace
