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

// Post-pruning and thresholding of scored predictions.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/error.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/paradigms.hpp"

namespace partial_el {

// Drops predictions whose concept is outside the partial view. Order is
// preserved.
inline std::vector<ScoredPrediction> post_prune(std::span<const ScoredPrediction> predictions, const KbView &view) {
  std::vector<ScoredPrediction> out;
  for (const auto &p : predictions) {
    if (view.contains(p.concept_id)) out.push_back(p);
  }
  return out;
}

inline std::vector<ScoredPrediction> post_prune(std::span<const ScoredPrediction> predictions,
                                                const PartialKb &partial) {
  std::vector<ScoredPrediction> out;
  for (const auto &p : predictions) {
    if (partial.member_ids.count(p.concept_id)) out.push_back(p);
  }
  return out;
}

// Keeps predictions with score >= theta. Order is preserved.
inline std::vector<ScoredPrediction> apply_threshold(std::span<const ScoredPrediction> predictions, double theta) {
  std::vector<ScoredPrediction> out;
  for (const auto &p : predictions) {
    if (p.score >= theta) out.push_back(p);
  }
  return out;
}

struct Threshold {
  double value = kNegInf;
  Paradigm paradigm = Paradigm::kNerNed;
  std::string tuned_on;
  double dev_f1 = 0.0;
};

// Exact search over the thresholds at which EL F1 can change: every distinct
// score, one step above the maximum (empty output), and -inf. Ties go to the
// largest threshold. With no predictions the result is -inf.
inline Threshold tune_threshold(std::span<const ScoredPrediction> predictions, std::span<const GoldAnnotation> gold,
                                Paradigm paradigm, std::string tuned_on = "dev") {
  Threshold best;
  best.paradigm = paradigm;
  best.tuned_on = std::move(tuned_on);
  if (predictions.empty()) return best;

  std::set<std::tuple<std::string, Span, ConceptId>> gold_keys;
  for (const auto &g : gold) gold_keys.insert({g.doc_id, g.span, g.concept_id});
  const std::uint64_t n_gold = gold.size();

  std::vector<const ScoredPrediction *> sorted;
  for (const auto &p : predictions) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredPrediction *a, const ScoredPrediction *b) { return a->score > b->score; });

  // F1 = 2 tp / (n_pred + n_gold); compared as exact fractions.
  std::uint64_t best_num = 0, best_den = 1;
  best.value = std::nextafter(sorted.front()->score, std::numeric_limits<double>::infinity());
  auto consider = [&](double theta, std::uint64_t tp, std::uint64_t n_pred) {
    const std::uint64_t num = 2 * tp, den = n_pred + n_gold;
    if (den == 0) return;
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best.value = theta;
    }
  };

  std::set<std::tuple<std::string, Span, ConceptId>> counted;
  std::uint64_t tp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double s = sorted[i]->score;
    while (i < sorted.size() && sorted[i]->score == s) {
      const auto &p = *sorted[i];
      std::tuple<std::string, Span, ConceptId> key{p.doc_id, p.span, p.concept_id};
      if (gold_keys.count(key) && counted.insert(key).second) ++tp;
      ++i;
    }
    consider(s, tp, i);
  }
  best.dev_f1 = double(best_num) / double(best_den);
  return best;
}

inline nlohmann::json threshold_to_json(const Threshold &t) {
  return nlohmann::json{{"paradigm", to_string(t.paradigm)},
                        {"theta", std::isinf(t.value) ? nlohmann::json(nullptr) : nlohmann::json(t.value)},
                        {"dev_f1", t.dev_f1},
                        {"tuned_on", t.tuned_on}};
}

// A null theta stands for -inf.
inline Threshold threshold_from_json(const nlohmann::json &j) {
  Threshold t;
  try {
    t.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
    t.value = j.at("theta").is_null() ? kNegInf : j["theta"].get<double>();
    t.dev_f1 = j.at("dev_f1").get<double>();
    t.tuned_on = j.at("tuned_on").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", std::string("threshold: ") + e.what());
  }
  return t;
}

}  // namespace partial_el
