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

#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "partial_el/error.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/text.hpp"

namespace partial_el {

enum class Split { kTrain, kDev, kTest };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "test";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw Error("invalid_split", "unknown split '" + std::string(s) + "'");
}

// A document with its text, code-point offset table and token list. Spans
// are code-point offsets into the text.
class Document {
 public:
  Document(std::string doc_id, std::string text)
      : doc_id_(std::move(doc_id)), text_(std::move(text)) {
    if (doc_id_.empty()) throw Error("invalid_document", "empty doc_id");
    if (text_.empty()) throw Error("invalid_document", "document " + doc_id_ + " has empty text");
    offsets_ = utf8::code_point_offsets(text_);
    tokens_ = tokenize(text_);
  }

  const std::string &doc_id() const { return doc_id_; }
  const std::string &text() const { return text_; }
  std::size_t length() const { return offsets_.size() - 1; }
  const std::vector<TokenSpan> &tokens() const { return tokens_; }

  bool valid(const Span &s) const { return s.start < s.end && s.end <= length(); }

  std::string_view slice(const Span &s) const {
    return std::string_view(text_).substr(offsets_[s.start], offsets_[s.end] - offsets_[s.start]);
  }

  // Covering text of tokens [first, last).
  std::string_view token_slice(std::size_t first, std::size_t last) const {
    return slice(Span{tokens_[first].span.start, tokens_[last - 1].span.end});
  }

 private:
  std::string doc_id_;
  std::string text_;
  std::vector<std::uint32_t> offsets_;
  std::vector<TokenSpan> tokens_;
};

struct GoldAnnotation {
  std::string doc_id;
  Span span;
  ConceptId concept_id;

  friend auto operator<=>(const GoldAnnotation &, const GoldAnnotation &) = default;
  friend bool operator==(const GoldAnnotation &, const GoldAnnotation &) = default;
};

class Corpus {
 public:
  Corpus(Split split, std::vector<Document> documents, std::vector<GoldAnnotation> annotations)
      : split_(split), documents_(std::move(documents)), annotations_(std::move(annotations)) {
    std::sort(documents_.begin(), documents_.end(),
              [](const Document &a, const Document &b) { return a.doc_id() < b.doc_id(); });
    for (std::size_t i = 0; i < documents_.size(); ++i) {
      if (!index_.emplace(documents_[i].doc_id(), i).second) {
        throw Error("duplicate_document", "duplicate doc_id " + documents_[i].doc_id());
      }
    }
    for (const auto &a : annotations_) {
      const Document *doc = find(a.doc_id);
      if (doc == nullptr) throw Error("dangling_doc_id", "annotation references unknown document " + a.doc_id);
      if (!doc->valid(a.span)) {
        throw Error("span_out_of_range", "annotation [" + std::to_string(a.span.start) + ", " +
                                             std::to_string(a.span.end) + ") out of range in " +
                                             a.doc_id + " (length " + std::to_string(doc->length()) + ")");
      }
    }
    std::sort(annotations_.begin(), annotations_.end());
    annotations_.erase(std::unique(annotations_.begin(), annotations_.end()), annotations_.end());
  }

  Split split() const { return split_; }
  const std::vector<Document> &documents() const { return documents_; }
  const std::vector<GoldAnnotation> &annotations() const { return annotations_; }

  const Document *find(const std::string &doc_id) const {
    auto it = index_.find(doc_id);
    return it == index_.end() ? nullptr : &documents_[it->second];
  }

  std::span<const GoldAnnotation> annotations_for(const std::string &doc_id) const {
    auto lo = std::lower_bound(annotations_.begin(), annotations_.end(), doc_id,
                               [](const GoldAnnotation &a, const std::string &d) { return a.doc_id < d; });
    auto hi = std::upper_bound(lo, annotations_.end(), doc_id,
                               [](const std::string &d, const GoldAnnotation &a) { return d < a.doc_id; });
    return {lo, hi};
  }

 private:
  Split split_;
  std::vector<Document> documents_;
  std::vector<GoldAnnotation> annotations_;
  std::map<std::string, std::size_t> index_;
};

// --- JSONL I/O -------------------------------------------------------------

namespace detail {

// "A", "A|B" (composite mentions) or ["A", "B"].
inline std::vector<ConceptId> parse_concept_field(const nlohmann::json &j) {
  std::vector<ConceptId> out;
  auto add_all = [&](const std::string &s) {
    std::size_t begin = 0;
    while (begin <= s.size()) {
      const auto bar = s.find('|', begin);
      const auto piece = s.substr(begin, bar == std::string::npos ? std::string::npos : bar - begin);
      if (!piece.empty()) out.emplace_back(piece);
      if (bar == std::string::npos) break;
      begin = bar + 1;
    }
  };
  if (j.is_string()) {
    add_all(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto &e : j) add_all(e.get<std::string>());
  } else {
    throw Error("parse_error", "annotation concept must be a string or array");
  }
  if (out.empty()) throw Error("parse_error", "annotation has no concept id");
  return out;
}

}  // namespace detail

// When `kb` is given, every gold concept must belong to it.
inline Corpus parse_corpus(std::istream &in, Split split, const KnowledgeBase *kb = nullptr) {
  std::vector<Document> docs;
  std::vector<GoldAnnotation> annotations;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      docs.emplace_back(j.at("doc_id").get<std::string>(), j.at("text").get<std::string>());
      const Document &doc = docs.back();
      if (j.contains("annotations")) {
        for (const auto &a : j["annotations"]) {
          const Span span{a.at("start").get<std::size_t>(), a.at("end").get<std::size_t>()};
          if (!doc.valid(span)) {
            throw Error("span_out_of_range", "annotation [" + std::to_string(span.start) + ", " +
                                                 std::to_string(span.end) + ") out of range (length " +
                                                 std::to_string(doc.length()) + ")");
          }
          for (auto &id : detail::parse_concept_field(a.at("concept"))) {
            if (kb != nullptr && !kb->contains(id)) {
              throw Error("unknown_concept", "concept " + id.str() + " not in " + kb->name());
            }
            annotations.push_back({doc.doc_id(), span, std::move(id)});
          }
        }
      }
    } catch (const nlohmann::json::exception &e) {
      throw Error("parse_error", where + e.what());
    } catch (const Error &e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return Corpus(split, std::move(docs), std::move(annotations));
}

inline Corpus load_corpus(const std::filesystem::path &path, Split split,
                          const KnowledgeBase *kb = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  try {
    return parse_corpus(in, split, kb);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

inline void write_corpus(const Corpus &corpus, std::ostream &out) {
  for (const auto &doc : corpus.documents()) {
    nlohmann::json j{{"doc_id", doc.doc_id()}, {"text", doc.text()}};
    auto anns = nlohmann::json::array();
    for (const auto &a : corpus.annotations_for(doc.doc_id())) {
      anns.push_back({{"start", a.span.start}, {"end", a.span.end}, {"concept", a.concept_id.str()}});
    }
    j["annotations"] = std::move(anns);
    out << j.dump() << '\n';
  }
}

// --- Gold restriction and statistics ---------------------------------------

// Keeps the annotations whose concept belongs to the view. Documents are
// kept even when all their annotations go away.
inline Corpus restrict_gold(const Corpus &corpus, const KbView &view) {
  std::vector<GoldAnnotation> kept;
  for (const auto &a : corpus.annotations()) {
    if (view.contains(a.concept_id)) kept.push_back(a);
  }
  return Corpus(corpus.split(), corpus.documents(), std::move(kept));
}

struct CorpusStats {
  Split split = Split::kTest;
  std::size_t n_concepts = 0;            // concepts in the view
  std::size_t n_annotations = 0;         // gold annotations in the view
  std::size_t n_annotated_concepts = 0;  // distinct concepts among them
  // Only set when a training corpus is supplied.
  std::optional<std::size_t> n_annotations_in_train;
  std::optional<std::size_t> n_concepts_in_train;
  std::optional<double> annotation_proportion;
  // Spans carrying both an in-view and an out-of-view gold concept.
  std::size_t mixed_spans = 0;
};

inline CorpusStats stats(const Corpus &corpus, const KbView &view, const Corpus *train = nullptr) {
  CorpusStats s;
  s.split = corpus.split();
  s.n_concepts = view.size();
  std::set<ConceptId> annotated;
  std::map<std::pair<std::string, Span>, std::pair<bool, bool>> span_membership;
  for (const auto &a : corpus.annotations()) {
    const bool in = view.contains(a.concept_id);
    auto &flags = span_membership[{a.doc_id, a.span}];
    (in ? flags.first : flags.second) = true;
    if (!in) continue;
    ++s.n_annotations;
    annotated.insert(a.concept_id);
  }
  s.n_annotated_concepts = annotated.size();
  for (const auto &[key, flags] : span_membership) {
    if (flags.first && flags.second) ++s.mixed_spans;
  }
  if (train != nullptr) {
    std::set<ConceptId> train_concepts;
    std::size_t train_in_view = 0;
    for (const auto &a : train->annotations()) {
      if (!view.contains(a.concept_id)) continue;
      train_concepts.insert(a.concept_id);
      ++train_in_view;
    }
    std::size_t in_train = 0;
    std::set<ConceptId> concepts_in_train;
    for (const auto &a : corpus.annotations()) {
      if (view.contains(a.concept_id) && train_concepts.count(a.concept_id)) {
        ++in_train;
        concepts_in_train.insert(a.concept_id);
      }
    }
    s.n_annotations_in_train = in_train;
    s.n_concepts_in_train = concepts_in_train.size();
    const auto total = train->annotations().size();
    s.annotation_proportion = total == 0 ? 0.0 : double(train_in_view) / double(total);
  }
  return s;
}

inline nlohmann::json stats_to_json(const CorpusStats &s) {
  nlohmann::json j{{"split", to_string(s.split)},
                   {"concepts", s.n_concepts},
                   {"annotations", s.n_annotations},
                   {"annotated_concepts", s.n_annotated_concepts},
                   {"mixed_spans", s.mixed_spans}};
  if (s.n_annotations_in_train) j["annotations_in_train"] = *s.n_annotations_in_train;
  if (s.n_concepts_in_train) j["concepts_in_train"] = *s.n_concepts_in_train;
  if (s.annotation_proportion) j["annotation_proportion"] = *s.annotation_proportion;
  return j;
}

}  // namespace partial_el
