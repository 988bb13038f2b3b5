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

// Corpus-level (micro-averaged) metrics with exact-offset matching.
//
//   EL   prediction (doc, start, end, concept) equals a gold annotation.
//   NER  distinct predicted spans against distinct gold spans.
//   NED  among predictions whose span is a gold span, the fraction whose
//        concept is one of that span's gold concepts.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/error.hpp"
#include "partial_el/paradigms.hpp"

namespace partial_el {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf make_prf(std::size_t tp, std::size_t n_pred, std::size_t n_gold) {
  Prf m;
  m.precision = n_pred ? double(tp) / double(n_pred) : 0.0;
  m.recall = n_gold ? double(tp) / double(n_gold) : 0.0;
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

struct MetricsReport {
  Prf el;
  Prf ner;
  std::optional<double> ned_accuracy;  // undefined when no span matches
  std::size_t tp_el = 0;
  std::size_t tp_ner = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  std::size_t n_pred_spans = 0;
  std::size_t n_gold_spans = 0;
};

inline MetricsReport evaluate(std::span<const ScoredPrediction> predictions, std::span<const GoldAnnotation> gold) {
  using SpanKey = std::pair<std::string, Span>;
  std::map<SpanKey, std::set<ConceptId>> gold_spans;
  for (const auto &g : gold) gold_spans[{g.doc_id, g.span}].insert(g.concept_id);

  MetricsReport r;
  r.n_pred = predictions.size();
  r.n_gold = gold.size();
  r.n_gold_spans = gold_spans.size();

  std::set<std::tuple<std::string, Span, ConceptId>> pred_keys;
  std::set<SpanKey> pred_spans;
  std::size_t span_matched = 0;
  std::size_t concept_correct = 0;
  for (const auto &p : predictions) {
    pred_spans.insert({p.doc_id, p.span});
    auto it = gold_spans.find({p.doc_id, p.span});
    if (it == gold_spans.end()) continue;
    ++span_matched;
    if (it->second.count(p.concept_id)) {
      ++concept_correct;
      pred_keys.insert({p.doc_id, p.span, p.concept_id});
    }
  }
  r.tp_el = pred_keys.size();
  r.n_pred_spans = pred_spans.size();
  for (const auto &s : pred_spans) r.tp_ner += gold_spans.count(s);

  r.el = make_prf(r.tp_el, r.n_pred, r.n_gold);
  r.ner = make_prf(r.tp_ner, r.n_pred_spans, r.n_gold_spans);
  if (span_matched > 0) r.ned_accuracy = double(concept_correct) / double(span_matched);
  return r;
}

inline nlohmann::json metrics_to_json(const MetricsReport &r) {
  auto prf = [](const Prf &m) { return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}; };
  return nlohmann::json{
      {"el", prf(r.el)},
      {"ner", prf(r.ner)},
      {"ned_accuracy", r.ned_accuracy ? nlohmann::json(*r.ned_accuracy) : nlohmann::json(nullptr)},
      {"counts",
       {{"tp_el", r.tp_el},
        {"tp_ner", r.tp_ner},
        {"n_pred", r.n_pred},
        {"n_gold", r.n_gold},
        {"n_pred_spans", r.n_pred_spans},
        {"n_gold_spans", r.n_gold_spans}}}};
}

inline MetricsReport metrics_from_json(const nlohmann::json &j) {
  MetricsReport r;
  try {
    auto prf = [](const nlohmann::json &m) {
      return Prf{m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>()};
    };
    r.el = prf(j.at("el"));
    r.ner = prf(j.at("ner"));
    if (!j.at("ned_accuracy").is_null()) r.ned_accuracy = j["ned_accuracy"].get<double>();
    const auto &c = j.at("counts");
    r.tp_el = c.at("tp_el");
    r.tp_ner = c.at("tp_ner");
    r.n_pred = c.at("n_pred");
    r.n_gold = c.at("n_gold");
    r.n_pred_spans = c.value("n_pred_spans", std::size_t{0});
    r.n_gold_spans = c.value("n_gold_spans", std::size_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", std::string("metrics: ") + e.what());
  }
  return r;
}

// Ranked retrieval per document, best first.
using RetrievedLists = std::map<std::string, std::vector<ConceptId>>;

// Fraction of gold (doc, concept) pairs whose concept is in the document's
// top-k list. 0 when there is no gold.
inline double recall_at_k(const RetrievedLists &retrieved, std::span<const GoldAnnotation> gold, std::size_t k) {
  if (k < 1) throw Error("invalid_argument", "k must be >= 1");
  std::set<std::pair<std::string, ConceptId>> pairs;
  for (const auto &g : gold) pairs.insert({g.doc_id, g.concept_id});
  if (pairs.empty()) return 0.0;
  std::map<std::string, std::set<ConceptId>> top;
  for (const auto &[doc, list] : retrieved) {
    auto &s = top[doc];
    for (const auto &id : list) {
      if (s.size() >= k) break;
      s.insert(id);
    }
  }
  std::size_t hit = 0;
  for (const auto &[doc, id] : pairs) {
    auto it = top.find(doc);
    if (it != top.end() && it->second.count(id)) ++hit;
  }
  return double(hit) / double(pairs.size());
}

// --- Annotation-proportion report ------------------------------------------

struct ProportionRun {
  std::string view;
  double annotation_proportion = 0.0;  // share of train annotations in the view
  MetricsReport full;                  // full-KB inference, full-KB gold
  MetricsReport partial;               // partial-KB inference, partial gold
};

struct ProportionRow {
  std::string view;
  double proportion = 0.0;
  double el_f1_drop = 0.0;
  double ner_f1_drop = 0.0;
  std::optional<double> ned_acc_delta;  // partial minus full
};

struct ProportionReport {
  std::vector<ProportionRow> rows;
  std::optional<double> el_f1_correlation;
  std::optional<double> ner_f1_correlation;
  std::optional<double> ned_acc_correlation;
};

// Pearson correlation; nullopt when either side has zero variance.
inline std::optional<double> pearson(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline ProportionReport proportion_report(std::span<const ProportionRun> runs) {
  if (runs.size() < 2) throw Error("invalid_argument", "proportion report needs at least 2 partial views");
  ProportionReport report;
  std::vector<double> props, el, ner, ned_x, ned;
  for (const auto &run : runs) {
    ProportionRow row;
    row.view = run.view;
    row.proportion = run.annotation_proportion;
    row.el_f1_drop = run.full.el.f1 - run.partial.el.f1;
    row.ner_f1_drop = run.full.ner.f1 - run.partial.ner.f1;
    if (run.full.ned_accuracy && run.partial.ned_accuracy) {
      row.ned_acc_delta = *run.partial.ned_accuracy - *run.full.ned_accuracy;
      ned_x.push_back(row.proportion);
      ned.push_back(*row.ned_acc_delta);
    }
    props.push_back(row.proportion);
    el.push_back(row.el_f1_drop);
    ner.push_back(row.ner_f1_drop);
    report.rows.push_back(std::move(row));
  }
  report.el_f1_correlation = pearson(props, el);
  report.ner_f1_correlation = pearson(props, ner);
  report.ned_acc_correlation = pearson(ned_x, ned);
  return report;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double> &v) { return v ? fmt_num(*v) : "n/a"; }

}  // namespace detail

inline void write_proportion_tsv(const ProportionReport &report, std::ostream &out) {
  out << "view\tproportion\tel_f1_drop\tner_f1_drop\tned_acc_delta\n";
  for (const auto &r : report.rows) {
    out << r.view << '\t' << detail::fmt_num(r.proportion) << '\t' << detail::fmt_num(r.el_f1_drop) << '\t'
        << detail::fmt_num(r.ner_f1_drop) << '\t' << detail::fmt_opt(r.ned_acc_delta) << '\n';
  }
  out << "# pearson\tproportion\t" << detail::fmt_opt(report.el_f1_correlation) << '\t'
      << detail::fmt_opt(report.ner_f1_correlation) << '\t' << detail::fmt_opt(report.ned_acc_correlation) << '\n';
}

// Scatter of proportion (x) against EL-F1 drop (blue) and NER-F1 drop (red).
inline void write_proportion_svg(const ProportionReport &report, std::ostream &out) {
  constexpr double kW = 480, kH = 360, kPad = 50;
  double lo = 0.0, hi = 0.0;
  for (const auto &r : report.rows) {
    lo = std::min({lo, r.el_f1_drop, r.ner_f1_drop});
    hi = std::max({hi, r.el_f1_drop, r.ner_f1_drop});
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  auto x = [&](double p) { return kPad + p * (kW - 2 * kPad); };
  auto y = [&](double d) { return kH - kPad - (d - lo) / (hi - lo) * (kH - 2 * kPad); };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">annotation proportion</text>\n";
  out << "<text x=\"12\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 12 " << kH / 2
      << ")\" text-anchor=\"middle\">F1 drop</text>\n";
  for (const auto &r : report.rows) {
    out << "<circle cx=\"" << detail::fmt_num(x(r.proportion)) << "\" cy=\"" << detail::fmt_num(y(r.el_f1_drop))
        << "\" r=\"4\" fill=\"steelblue\"><title>" << r.view << " EL</title></circle>\n";
    out << "<circle cx=\"" << detail::fmt_num(x(r.proportion)) << "\" cy=\"" << detail::fmt_num(y(r.ner_f1_drop))
        << "\" r=\"4\" fill=\"firebrick\"><title>" << r.view << " NER</title></circle>\n";
  }
  out << "</svg>\n";
}

}  // namespace partial_el
