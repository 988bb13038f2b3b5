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

// The three entity linking paradigms. Each maps one document plus an
// inference view (an index or a trie built over that view) to scored
// predictions:
//
//   ner_ned     tag mentions with the gazetteer, then link each span to its
//               nearest concept; score = max cosine.
//   ned_ner     retrieve the top-K concepts for the whole document, then
//               read the best span for each; score = P_re(e) * P_span(s | e).
//   generative  constrained beam search over target sequences; score = mean
//               log-probability of the markup segment.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "partial_el/corpus.hpp"
#include "partial_el/embed.hpp"
#include "partial_el/error.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/lm.hpp"
#include "partial_el/tagger.hpp"
#include "partial_el/trie.hpp"

namespace partial_el {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Paradigm { kNerNed, kNedNer, kGenerative };

inline std::string_view to_string(Paradigm p) {
  switch (p) {
    case Paradigm::kNerNed: return "ner_ned";
    case Paradigm::kNedNer: return "ned_ner";
    case Paradigm::kGenerative: return "generative";
  }
  return "ner_ned";
}

inline Paradigm parse_paradigm(std::string_view s) {
  if (s == "ner_ned") return Paradigm::kNerNed;
  if (s == "ned_ner") return Paradigm::kNedNer;
  if (s == "generative") return Paradigm::kGenerative;
  throw Error("invalid_config", "unknown paradigm '" + std::string(s) + "'");
}

struct ScoredPrediction {
  std::string doc_id;
  Span span;
  ConceptId concept_id;
  double score = 0.0;
  Paradigm paradigm = Paradigm::kNerNed;

  friend bool operator==(const ScoredPrediction &, const ScoredPrediction &) = default;
};

// Canonical output order: (doc_id, span, concept).
inline bool prediction_before(const ScoredPrediction &a, const ScoredPrediction &b) {
  if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
  if (a.span != b.span) return a.span < b.span;
  return a.concept_id < b.concept_id;
}

inline void sort_predictions(std::vector<ScoredPrediction> &preds) {
  std::sort(preds.begin(), preds.end(), prediction_before);
}

// One prediction per (doc_id, span): highest score, then smallest id. The
// result is in canonical order.
inline std::vector<ScoredPrediction> dedup_per_span(std::vector<ScoredPrediction> preds) {
  std::sort(preds.begin(), preds.end(), [](const ScoredPrediction &a, const ScoredPrediction &b) {
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    if (a.span != b.span) return a.span < b.span;
    if (a.score != b.score) return a.score > b.score;
    return a.concept_id < b.concept_id;
  });
  std::vector<ScoredPrediction> out;
  for (auto &p : preds) {
    if (!out.empty() && out.back().doc_id == p.doc_id && out.back().span == p.span) continue;
    out.push_back(std::move(p));
  }
  return out;
}

// --- NER-NED ---------------------------------------------------------------

inline std::vector<ScoredPrediction> link_ner_ned(const Document &doc, const Gazetteer &gazetteer,
                                                  const ConceptIndex &index) {
  std::vector<ScoredPrediction> out;
  for (const Span &span : tag(gazetteer, doc)) {
    const auto best = nearest(index, embed_text(doc.slice(span)), 1);
    out.push_back({doc.doc_id(), span, best.front().concept_id, best.front().score, Paradigm::kNerNed});
  }
  return out;
}

// --- NED-NER ---------------------------------------------------------------

struct NedNerOptions {
  std::size_t top_k = 100;
  std::size_t max_span_tokens = 8;
  double theta = kNegInf;
  double temperature = 0.05;
};

// Top-K concepts for the whole document with their softmax probabilities.
struct Retrieval {
  std::vector<Neighbor> concepts;
  std::vector<double> probabilities;
};

// Numerically stable softmax of values / temperature.
inline std::vector<double> softmax(const std::vector<double> &values, double temperature = 1.0) {
  std::vector<double> out(values.size());
  if (values.empty()) return out;
  const double m = *std::max_element(values.begin(), values.end());
  double z = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) z += out[i] = std::exp((values[i] - m) / temperature);
  for (auto &p : out) p /= z;
  return out;
}

inline Retrieval retrieve(const Document &doc, const ConceptIndex &index, std::size_t top_k) {
  if (top_k < 1) throw Error("invalid_argument", "K must be >= 1");
  Retrieval r;
  r.concepts = nearest(index, embed_text(doc.text()), top_k);
  std::vector<double> scores;
  for (const auto &n : r.concepts) scores.push_back(n.score);
  r.probabilities = softmax(scores);
  return r;
}

struct NedNerResult {
  std::vector<ScoredPrediction> predictions;
  Retrieval retrieval;
};

inline NedNerResult link_ned_ner_detailed(const Document &doc, const ConceptIndex &index,
                                          const NedNerOptions &options) {
  if (options.top_k < 1) throw Error("invalid_argument", "K must be >= 1");
  if (!(options.temperature > 0.0)) throw Error("invalid_argument", "temperature must be positive");
  NedNerResult result;
  result.retrieval = retrieve(doc, index, options.top_k);

  const auto &tokens = doc.tokens();
  std::vector<Span> candidates;
  std::vector<EmbeddingVector> vectors;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t len = 1; len <= options.max_span_tokens && i + len <= tokens.size(); ++len) {
      const Span s{tokens[i].span.start, tokens[i + len - 1].span.end};
      candidates.push_back(s);
      vectors.push_back(embed_text(doc.slice(s)));
    }
  }
  if (candidates.empty()) return result;

  std::vector<ScoredPrediction> raw;
  std::vector<double> affinity(candidates.size());
  for (std::size_t k = 0; k < result.retrieval.concepts.size(); ++k) {
    const auto *group = index.find(result.retrieval.concepts[k].concept_id);
    for (std::size_t c = 0; c < candidates.size(); ++c) affinity[c] = index.affinity(*group, vectors[c]);
    const auto p_span = softmax(affinity, options.temperature);
    const auto best = static_cast<std::size_t>(std::max_element(p_span.begin(), p_span.end()) - p_span.begin());
    const double score = result.retrieval.probabilities[k] * p_span[best];
    if (score >= options.theta) {
      raw.push_back({doc.doc_id(), candidates[best], group->concept_id, score, Paradigm::kNedNer});
    }
  }
  result.predictions = dedup_per_span(std::move(raw));
  return result;
}

inline std::vector<ScoredPrediction> link_ned_ner(const Document &doc, const ConceptIndex &index,
                                                  const NedNerOptions &options = {}) {
  return link_ned_ner_detailed(doc, index, options).predictions;
}

// --- Generative ------------------------------------------------------------

struct GenerativeOptions {
  std::size_t beam = 6;
  std::size_t max_span_tokens = 8;
  double theta = kNegInf;
  // Weight of the copy distribution over the current mention's tokens,
  // mixed into the bigram probability of entity-block tokens. 0 disables it.
  double copy_weight = 0.5;
};

// One emitted token of a target sequence.
struct TargetToken {
  enum class Kind : std::uint8_t { kSource, kName, kMarker };
  Kind kind = Kind::kSource;
  std::uint32_t index = 0;  // source token index, trie token id, or marker 0..3

  friend bool operator==(const TargetToken &, const TargetToken &) = default;
};

inline constexpr std::string_view kMarkers[4] = {kMentionBegin, kMentionEnd, kEntityBegin, kEntityEnd};

struct DecodedSegment {
  std::size_t first_token = 0;  // source tokens [first_token, last_token)
  std::size_t last_token = 0;
  NameTrie::NodeId terminal = NameTrie::kRoot;
  double score = 0.0;  // mean log-probability over the segment
};

struct Decoding {
  std::vector<std::string> tokens;
  double log_likelihood = 0.0;  // summed log-probability of the sequence
  double score = 0.0;           // mean log-probability of the sequence
  std::vector<DecodedSegment> segments;
};

// Constrained decoder. Grammar over the next token:
//   outside markup   next source token | [MB]
//   inside mention   next source token (at most max_span_tokens) | [ME] after >= 1
//   after [ME]       [EB]
//   entity block     trie continuations | [EE] at a terminal
//
// As in masked-softmax constrained decoding, each step renormalizes the
// bigram probabilities over the allowed tokens only, so a forced token costs
// nothing. At branching entity steps the result is mixed with a copy
// distribution over allowed tokens that occur in the mention:
//   P(t) = (1 - w) P_bi(t) / Z + w hits(t) / H      (w = copy_weight, H > 0)
//
// Hypotheses are ranked by total log-probability and the beam is kept per
// source position: every hypothesis in a beam has consumed the same source
// tokens, so a markup is only ever weighed against the plain copy of the
// same text. Under a bigram model the future of a hypothesis depends only on
// (phase, previous token, open mention start); hypotheses sharing that state
// are merged and the better one is kept. Entity blocks are searched with a
// depth-synchronous beam of the same width. Ties go to the lexicographically
// smaller token sequence.
class GenerativeDecoder {
 public:
  GenerativeDecoder(const BigramLm &lm, const NameTrie &trie, GenerativeOptions options = {})
      : lm_(&lm), trie_(&trie), options_(options) {
    if (options_.beam < 1) throw Error("invalid_argument", "beam must be >= 1");
    if (options_.max_span_tokens < 1) throw Error("invalid_argument", "max_span_tokens must be >= 1");
    if (!(options_.copy_weight >= 0.0 && options_.copy_weight < 1.0)) {
      throw Error("invalid_argument", "copy_weight must be in [0, 1)");
    }
    mb_ = lm.id(kMentionBegin);
    me_ = lm.id(kMentionEnd);
    eb_ = lm.id(kEntityBegin);
    ee_ = lm.id(kEntityEnd);
    name_lm_ids_.resize(trie.token_count());
    for (std::size_t t = 0; t < trie.token_count(); ++t) {
      name_lm_ids_[t] = lm.id(trie.token(static_cast<NameTrie::TokenId>(t)));
    }
    for (const auto &c : trie.children(NameTrie::kRoot)) root_bigram_.push_back(lm.prob(eb_, name_lm_ids_[c.token]));
    markup_possible_ = trie.terminal_count() > 0;
  }

  const GenerativeOptions &options() const { return options_; }

  Decoding decode(const Document &doc) const;

 private:
  struct Hypothesis {
    std::vector<TargetToken> tokens;
    double sum = 0.0;
    BigramLm::TokenId prev = BigramLm::kStartId;
    bool in_mention = false;
    std::size_t mention_first = 0;
    std::size_t segment_start = 0;  // index of the open [MB]
    double sum_before_segment = 0.0;
    std::vector<DecodedSegment> segments;
  };

  struct EntityPath {
    std::vector<NameTrie::TokenId> names;
    double sum = 0.0;
    BigramLm::TokenId prev = 0;
    NameTrie::NodeId node = NameTrie::kRoot;
  };

  struct DocContext {
    const Document *doc;
    std::vector<BigramLm::TokenId> source_lm;
    std::vector<std::int64_t> source_name;  // trie token id or -1
  };

  static TargetToken marker(std::uint32_t i) { return TargetToken{TargetToken::Kind::kMarker, i}; }

  std::string_view text_of(const DocContext &ctx, const TargetToken &t) const {
    switch (t.kind) {
      case TargetToken::Kind::kSource: return ctx.doc->tokens()[t.index].token;
      case TargetToken::Kind::kName: return trie_->token(t.index);
      case TargetToken::Kind::kMarker: return kMarkers[t.index];
    }
    return {};
  }

  bool better(const DocContext &ctx, const Hypothesis &a, const Hypothesis &b) const {
    if (a.sum != b.sum) return a.sum > b.sum;
    return std::lexicographical_compare(
        a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end(),
        [&](const TargetToken &x, const TargetToken &y) { return text_of(ctx, x) < text_of(ctx, y); });
  }

  // log P(pick) when the grammar allows pick and optionally one other token.
  double choice_lp(BigramLm::TokenId prev, BigramLm::TokenId pick, std::optional<BigramLm::TokenId> other) const {
    if (!other) return 0.0;
    const double p = lm_->prob(prev, pick);
    return std::log(p / (p + lm_->prob(prev, *other)));
  }

  // Source tokens are observations: raw bigram probability.
  double copy_lp(const DocContext &ctx, const Hypothesis &h, std::size_t c) const {
    return lm_->log_prob(h.prev, ctx.source_lm[c]);
  }

  double open_lp(const DocContext &ctx, const Hypothesis &h, std::size_t c) const {
    return choice_lp(h.prev, mb_, ctx.source_lm[c]);
  }

  double close_lp(const DocContext &ctx, const Hypothesis &h, std::size_t c) const {
    std::optional<BigramLm::TokenId> other;
    if (c < ctx.source_lm.size() && c - h.mention_first < options_.max_span_tokens) other = ctx.source_lm[c];
    return choice_lp(h.prev, me_, other);
  }

  // Merges hypotheses in the same state, then keeps the best `limit`.
  void prune(const DocContext &ctx, std::vector<Hypothesis> &hyps, std::size_t limit) const;

  // Best completion [ME] [EB] name [EE] of an open mention ending before
  // source token `end`, or nothing when the trie has no terminal.
  std::optional<Hypothesis> close_mention(const DocContext &ctx, const Hypothesis &h, std::size_t end) const;

  const BigramLm *lm_;
  const NameTrie *trie_;
  GenerativeOptions options_;
  BigramLm::TokenId mb_, me_, eb_, ee_;
  std::vector<BigramLm::TokenId> name_lm_ids_;
  std::vector<double> root_bigram_;  // P_bi(child | [EB]) for root children
  bool markup_possible_ = false;
};

inline void GenerativeDecoder::prune(const DocContext &ctx, std::vector<Hypothesis> &hyps, std::size_t limit) const {
  auto state_less = [](const Hypothesis &a, const Hypothesis &b) {
    return std::tuple(a.in_mention, a.prev, a.in_mention ? a.mention_first : 0) <
           std::tuple(b.in_mention, b.prev, b.in_mention ? b.mention_first : 0);
  };
  std::sort(hyps.begin(), hyps.end(), [&](const Hypothesis &a, const Hypothesis &b) {
    if (state_less(a, b)) return true;
    if (state_less(b, a)) return false;
    return better(ctx, a, b);
  });
  std::vector<Hypothesis> merged;
  for (auto &h : hyps) {
    if (!merged.empty() && !state_less(merged.back(), h)) continue;  // same state, worse
    merged.push_back(std::move(h));
  }
  std::sort(merged.begin(), merged.end(), [&](const Hypothesis &a, const Hypothesis &b) { return better(ctx, a, b); });
  if (merged.size() > limit) merged.resize(limit);
  hyps = std::move(merged);
}

inline std::optional<GenerativeDecoder::Hypothesis> GenerativeDecoder::close_mention(const DocContext &ctx,
                                                                                   const Hypothesis &h,
                                                                                   std::size_t end) const {
  const double lambda = options_.copy_weight;
  std::vector<NameTrie::TokenId> mention;  // mention tokens that are trie tokens
  for (std::size_t j = h.mention_first; j < end; ++j) {
    if (ctx.source_name[j] >= 0) mention.push_back(NameTrie::TokenId(ctx.source_name[j]));
  }

  struct Candidate {
    double sum;
    std::uint32_t parent;
    NameTrie::TokenId token;
    NameTrie::NodeId node;
    bool done;  // [EE]
  };
  auto name_text = [&](const EntityPath &p, const Candidate &c, std::size_t i) -> std::string_view {
    if (i < p.names.size()) return trie_->token(p.names[i]);
    return c.done ? kEntityEnd : std::string_view(trie_->token(c.token));
  };

  std::vector<EntityPath> active(1);
  active[0].sum = h.sum + close_lp(ctx, h, end);  // [EB] is forced
  active[0].prev = eb_;
  std::optional<EntityPath> best;  // finished path; names exclude [EE]
  std::vector<Candidate> candidates;
  std::vector<double> bigram;
  std::vector<std::size_t> hits;

  while (!active.empty()) {
    // Log-probabilities are at most 0, so no open path can overtake.
    double top = kNegInf;
    for (const auto &p : active) top = std::max(top, p.sum);
    if (best && best->sum >= top) break;

    candidates.clear();
    for (std::uint32_t i = 0; i < active.size(); ++i) {
      const EntityPath &p = active[i];
      const auto kids = trie_->children(p.node);
      const bool terminal = trie_->is_terminal(p.node);
      const std::size_t allowed = kids.size() + (terminal ? 1 : 0);
      if (allowed == 1) {
        if (terminal) {
          candidates.push_back({p.sum, i, 0, p.node, true});
        } else {
          candidates.push_back({p.sum, i, kids[0].token, kids[0].node, false});
        }
        continue;
      }
      bigram.assign(kids.size(), 0.0);
      hits.assign(kids.size(), 0);
      double z = 0.0;
      std::size_t h_total = 0;
      for (std::size_t k = 0; k < kids.size(); ++k) {
        bigram[k] = p.node == NameTrie::kRoot ? root_bigram_[k] : lm_->prob(p.prev, name_lm_ids_[kids[k].token]);
        z += bigram[k];
        hits[k] = std::size_t(std::count(mention.begin(), mention.end(), kids[k].token));
        h_total += hits[k];
      }
      const double ee = terminal ? lm_->prob(p.prev, ee_) : 0.0;
      z += ee;
      const bool mix = lambda > 0.0 && h_total > 0;
      for (std::size_t k = 0; k < kids.size(); ++k) {
        const double q = mix ? (1.0 - lambda) * bigram[k] / z + lambda * double(hits[k]) / double(h_total)
                             : bigram[k] / z;
        candidates.push_back({p.sum + std::log(q), i, kids[k].token, kids[k].node, false});
      }
      if (terminal) {
        candidates.push_back({p.sum + std::log(mix ? (1.0 - lambda) * ee / z : ee / z), i, 0, p.node, true});
      }
    }
    auto candidate_before = [&](const Candidate &a, const Candidate &b) {
      if (a.sum != b.sum) return a.sum > b.sum;
      const EntityPath &pa = active[a.parent], &pb = active[b.parent];
      const std::size_t la = pa.names.size() + 1, lb = pb.names.size() + 1;
      for (std::size_t i = 0; i < std::min(la, lb); ++i) {
        const auto ta = name_text(pa, a, i), tb = name_text(pb, b, i);
        if (ta != tb) return ta < tb;
      }
      return la < lb;
    };
    const std::size_t keep = std::min(options_.beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + std::ptrdiff_t(keep), candidates.end(),
                      candidate_before);

    std::vector<EntityPath> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate &cand = candidates[c];
      EntityPath p = active[cand.parent];
      p.sum = cand.sum;
      p.node = cand.node;
      if (cand.done) {
        // Earlier finishers have shorter or equal sequences; within one step
        // candidates arrive in rank order.
        if (!best || p.sum > best->sum) best = std::move(p);
        continue;
      }
      p.names.push_back(cand.token);
      p.prev = name_lm_ids_[cand.token];
      next.push_back(std::move(p));
    }
    active = std::move(next);
  }
  if (!best) return std::nullopt;

  Hypothesis out = h;
  out.tokens.push_back(marker(1));
  out.tokens.push_back(marker(2));
  for (const auto t : best->names) out.tokens.push_back(TargetToken{TargetToken::Kind::kName, t});
  out.tokens.push_back(marker(3));
  out.sum = best->sum;
  out.prev = ee_;
  out.in_mention = false;
  const double len = double(out.tokens.size() - h.segment_start);
  out.segments.push_back({h.mention_first, end, best->node, (out.sum - h.sum_before_segment) / len});
  return out;
}

inline Decoding GenerativeDecoder::decode(const Document &doc) const {
  DocContext ctx{&doc, {}, {}};
  for (const auto &t : doc.tokens()) {
    ctx.source_lm.push_back(lm_->id(t.token));
    const auto name = trie_->find_token(t.token);
    ctx.source_name.push_back(name ? std::int64_t(*name) : -1);
  }
  const std::size_t n = ctx.source_lm.size();
  Decoding result;
  if (n == 0) return result;

  std::vector<Hypothesis> beam(1);  // hypotheses that consumed c source tokens
  for (std::size_t c = 0;; ++c) {
    // Close open mentions here; all closed hypotheses share one state.
    std::optional<Hypothesis> closed;
    for (const auto &h : beam) {
      if (!h.in_mention || h.mention_first == c) continue;
      auto o = close_mention(ctx, h, c);
      if (o && (!closed || better(ctx, *o, *closed))) closed = std::move(o);
    }
    if (closed) beam.push_back(std::move(*closed));

    if (c == n) {
      const Hypothesis *best = nullptr;
      for (const auto &h : beam) {
        if (!h.in_mention && (best == nullptr || better(ctx, h, *best))) best = &h;
      }
      result.log_likelihood = best->sum;
      result.score = best->sum / double(best->tokens.size());
      for (const auto &t : best->tokens) result.tokens.emplace_back(text_of(ctx, t));
      result.segments = best->segments;
      return result;
    }

    // Open a mention at c; again a single state.
    if (markup_possible_) {
      std::optional<Hypothesis> opened;
      for (const auto &h : beam) {
        if (h.in_mention) continue;
        Hypothesis m = h;
        m.sum_before_segment = m.sum;
        m.segment_start = m.tokens.size();
        m.tokens.push_back(marker(0));
        m.sum += open_lp(ctx, h, c);
        m.prev = mb_;
        m.in_mention = true;
        m.mention_first = c;
        if (!opened || better(ctx, m, *opened)) opened = std::move(m);
      }
      if (opened) beam.push_back(std::move(*opened));
    }

    // Copy source token c.
    std::vector<Hypothesis> next;
    for (auto &h : beam) {
      if (h.in_mention && c - h.mention_first >= options_.max_span_tokens) continue;
      h.sum += copy_lp(ctx, h, c);
      h.tokens.push_back(TargetToken{TargetToken::Kind::kSource, std::uint32_t(c)});
      h.prev = ctx.source_lm[c];
      next.push_back(std::move(h));
    }
    prune(ctx, next, options_.beam);
    beam = std::move(next);
  }
}

inline std::vector<ScoredPrediction> generative_predictions(const Document &doc, const NameTrie &trie,
                                                            const Decoding &decoding, double theta) {
  std::vector<ScoredPrediction> out;
  const auto &tokens = doc.tokens();
  for (const auto &s : decoding.segments) {
    if (s.score < theta) continue;
    out.push_back({doc.doc_id(), Span{tokens[s.first_token].span.start, tokens[s.last_token - 1].span.end},
                   trie.concepts(s.terminal).front(), s.score, Paradigm::kGenerative});
  }
  return dedup_per_span(std::move(out));
}

inline std::vector<ScoredPrediction> link_generative(const Document &doc, const BigramLm &lm, const NameTrie &trie,
                                                     const GenerativeOptions &options = {}) {
  const GenerativeDecoder decoder(lm, trie, options);
  return generative_predictions(doc, trie, decoder.decode(doc), options.theta);
}

}  // namespace partial_el
