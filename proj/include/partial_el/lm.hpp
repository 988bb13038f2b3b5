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

// Target sequences for generative linking and the add-k smoothed bigram
// model trained on them.
//
// A target sequence copies the source tokens and wraps each gold mention as
//   [MB] x_i ... x_j [ME] [EB] name tokens [EE]
// where the name is the tokenized canonical name of the gold concept.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/error.hpp"
#include "partial_el/kb.hpp"

namespace partial_el {

inline constexpr std::string_view kMentionBegin = "[MB]";
inline constexpr std::string_view kMentionEnd = "[ME]";
inline constexpr std::string_view kEntityBegin = "[EB]";
inline constexpr std::string_view kEntityEnd = "[EE]";
inline constexpr std::string_view kSequenceStart = "<s>";
inline constexpr std::string_view kUnknown = "<unk>";

inline bool is_marker(std::string_view t) {
  return t == kMentionBegin || t == kMentionEnd || t == kEntityBegin || t == kEntityEnd;
}

struct TargetSequence {
  std::vector<std::string> tokens;
  std::size_t snapped = 0;  // gold spans widened to token boundaries
  std::size_t skipped = 0;  // gold annotations dropped (duplicate span, no token, overlap)
};

namespace detail {

struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
  const GoldAnnotation *gold = nullptr;
};

inline TargetSequence make_target_sequence(const Document &doc, std::span<const GoldAnnotation> gold,
                                           const KnowledgeBase &kb, bool drop_overlaps) {
  TargetSequence out;
  const auto &tokens = doc.tokens();
  std::vector<TokenRange> ranges;
  for (const auto &a : gold) {
    TokenRange r{tokens.size(), 0, &a};
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].span.overlaps(a.span)) {
        r.first = std::min(r.first, i);
        r.last = i + 1;
      }
    }
    if (r.first >= r.last) {
      ++out.skipped;
      continue;
    }
    if (tokens[r.first].span.start != a.span.start || tokens[r.last - 1].span.end != a.span.end) {
      ++out.snapped;
    }
    ranges.push_back(r);
  }
  std::stable_sort(ranges.begin(), ranges.end(), [](const TokenRange &a, const TokenRange &b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.last != b.last) return a.last > b.last;
    return a.gold->concept_id < b.gold->concept_id;
  });
  std::vector<TokenRange> kept;
  for (const auto &r : ranges) {
    if (!kept.empty() && r.first < kept.back().last) {
      const bool same = r.first == kept.back().first && r.last == kept.back().last;
      if (!same && !drop_overlaps) {
        throw Error("overlapping_gold", "overlapping gold mentions in " + doc.doc_id() +
                                            " cannot be encoded as a target sequence");
      }
      ++out.skipped;
      continue;
    }
    kept.push_back(r);
  }

  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size();) {
    if (next < kept.size() && kept[next].first == i) {
      const auto &r = kept[next++];
      out.tokens.emplace_back(kMentionBegin);
      for (std::size_t j = r.first; j < r.last; ++j) out.tokens.push_back(tokens[j].token);
      out.tokens.emplace_back(kMentionEnd);
      out.tokens.emplace_back(kEntityBegin);
      for (auto &t : tokenize_words(kb.at(r.gold->concept_id).canonical_name)) out.tokens.push_back(std::move(t));
      out.tokens.emplace_back(kEntityEnd);
      i = r.last;
    } else {
      out.tokens.push_back(tokens[i].token);
      ++i;
    }
  }
  return out;
}

}  // namespace detail

// Spans not aligned to tokens are widened to the enclosing tokens; two gold
// concepts on the same span keep the smallest id. Partially overlapping gold
// spans are an error.
inline TargetSequence build_target_sequence(const Document &doc, std::span<const GoldAnnotation> gold,
                                            const KnowledgeBase &kb) {
  return detail::make_target_sequence(doc, gold, kb, /*drop_overlaps=*/false);
}

// Add-k smoothed bigram model:
//   P(x | prev) = (count(prev, x) + k) / (count(prev, *) + k |V|)
// V holds the observed tokens, the four markers and <unk>. The start symbol
// <s> is a context only and is not part of V.
class BigramLm {
 public:
  using TokenId = std::uint32_t;
  static constexpr double kDefaultSmoothing = 0.5;
  static constexpr TokenId kStartId = 0;
  static constexpr TokenId kUnknownId = 1;

  explicit BigramLm(double k = kDefaultSmoothing) : k_(k) {
    if (!(k > 0.0)) throw Error("invalid_argument", "smoothing constant must be positive");
    intern(kSequenceStart);
    intern(kUnknown);
    intern(kMentionBegin);
    intern(kMentionEnd);
    intern(kEntityBegin);
    intern(kEntityEnd);
  }

  // Adds the bigrams (<s>, x1), (x1, x2), ... of one sequence.
  void observe(const std::vector<std::string> &sequence) {
    TokenId prev = kStartId;
    for (const auto &t : sequence) {
      const TokenId cur = intern(t);
      ++bigrams_[key(prev, cur)];
      ++context_counts_[prev];
      ++total_;
      prev = cur;
    }
  }

  double smoothing() const { return k_; }
  // |V|, excluding the start symbol.
  std::size_t vocab_size() const { return vocab_.size() - 1; }
  std::uint64_t total_bigrams() const { return total_; }

  TokenId id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnknownId : it->second;
  }
  const std::string &token(TokenId id) const { return vocab_[id]; }

  std::uint64_t count(TokenId prev, TokenId next) const {
    auto it = bigrams_.find(key(prev, next));
    return it == bigrams_.end() ? 0 : it->second;
  }
  std::uint64_t context_count(TokenId prev) const {
    return prev < context_counts_.size() ? context_counts_[prev] : 0;
  }

  double prob(TokenId prev, TokenId next) const {
    return (double(count(prev, next)) + k_) / (double(context_count(prev)) + k_ * double(vocab_size()));
  }
  double log_prob(TokenId prev, TokenId next) const { return std::log(prob(prev, next)); }

  nlohmann::json to_json() const {
    std::vector<std::tuple<TokenId, TokenId, std::uint64_t>> triples;
    for (const auto &[k, c] : bigrams_) triples.emplace_back(TokenId(k >> 32), TokenId(k & 0xffffffffu), c);
    std::sort(triples.begin(), triples.end());
    auto counts = nlohmann::json::array();
    for (const auto &[p, n, c] : triples) counts.push_back({p, n, c});
    return nlohmann::json{{"smoothing", k_}, {"vocab", vocab_}, {"bigrams", std::move(counts)}};
  }

  static BigramLm from_json(const nlohmann::json &j) {
    try {
      BigramLm lm(j.at("smoothing").get<double>());
      for (const auto &t : j.at("vocab")) lm.intern(t.get<std::string>());
      for (const auto &b : j.at("bigrams")) {
        const auto p = b.at(0).get<TokenId>(), n = b.at(1).get<TokenId>();
        const auto c = b.at(2).get<std::uint64_t>();
        if (p >= lm.vocab_.size() || n >= lm.vocab_.size()) throw Error("parse_error", "bigram id out of range");
        lm.bigrams_[key(p, n)] += c;
        lm.context_counts_[p] += c;
        lm.total_ += c;
      }
      return lm;
    } catch (const nlohmann::json::exception &e) {
      throw Error("parse_error", std::string("language model: ") + e.what());
    }
  }

 private:
  static std::uint64_t key(TokenId prev, TokenId next) { return (std::uint64_t(prev) << 32) | next; }

  TokenId intern(std::string_view t) {
    auto [it, inserted] = ids_.try_emplace(std::string(t), static_cast<TokenId>(vocab_.size()));
    if (inserted) {
      vocab_.emplace_back(t);
      context_counts_.push_back(0);
    }
    return it->second;
  }

  double k_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> ids_;
  std::unordered_map<std::uint64_t, std::uint64_t> bigrams_;
  std::vector<std::uint64_t> context_counts_;
  std::uint64_t total_ = 0;
};

// Partially overlapping gold mentions are dropped (earliest, longest kept)
// instead of failing the whole corpus.
inline BigramLm train_lm(const Corpus &train, const KnowledgeBase &training_kb,
                         double k = BigramLm::kDefaultSmoothing) {
  BigramLm lm(k);
  for (const auto &doc : train.documents()) {
    lm.observe(detail::make_target_sequence(doc, train.annotations_for(doc.doc_id()), training_kb,
                                            /*drop_overlaps=*/true)
                   .tokens);
  }
  return lm;
}

}  // namespace partial_el
