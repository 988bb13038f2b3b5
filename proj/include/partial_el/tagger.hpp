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

// Dictionary mention detector. The gazetteer is built from the training
// corpus and training KB only; tag() takes no KB argument, so detected spans
// never depend on the inference view.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/text.hpp"

namespace partial_el {

class Gazetteer {
 public:
  void add(const std::vector<std::string> &tokens, const ConceptId &provenance) {
    if (tokens.empty()) return;
    entries_[join_tokens(tokens)].insert(provenance);
    max_len_ = std::max(max_len_, tokens.size());
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_len() const { return max_len_; }

  bool contains(const std::vector<std::string> &tokens) const {
    return entries_.count(join_tokens(tokens)) != 0;
  }

  // Keys are tokens joined by single spaces.
  const std::map<std::string, std::set<ConceptId>> &entries() const { return entries_; }

 private:
  std::map<std::string, std::set<ConceptId>> entries_;
  std::size_t max_len_ = 0;
};

inline Gazetteer build_gazetteer(const Corpus &train, const KnowledgeBase &training_kb) {
  Gazetteer g;
  std::set<ConceptId> annotated;
  for (const auto &a : train.annotations()) {
    const Document *doc = train.find(a.doc_id);
    g.add(tokenize_words(doc->slice(a.span)), a.concept_id);
    annotated.insert(a.concept_id);
  }
  for (const auto &id : annotated) {
    const Concept *c = training_kb.find(id);
    if (c == nullptr) continue;
    for (const auto &s : c->synonyms) g.add(tokenize_words(s), id);
  }
  return g;
}

// Leftmost-longest, non-overlapping.
inline std::vector<Span> tag(const Gazetteer &gazetteer, const Document &doc) {
  std::vector<Span> spans;
  const auto &tokens = doc.tokens();
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(gazetteer.max_len(), tokens.size() - i);
    std::size_t matched = 0;
    for (std::size_t len = longest; len >= 1; --len) {
      std::string key = tokens[i].token;
      for (std::size_t j = i + 1; j < i + len; ++j) {
        key.push_back(' ');
        key += tokens[j].token;
      }
      if (gazetteer.entries().count(key)) {
        matched = len;
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    spans.push_back(Span{tokens[i].span.start, tokens[i + matched - 1].span.end});
    i += matched;
  }
  return spans;
}

inline nlohmann::json gazetteer_to_json(const Gazetteer &g) {
  auto entries = nlohmann::json::array();
  for (const auto &[key, ids] : g.entries()) {
    std::vector<std::string> concepts;
    for (const auto &id : ids) concepts.push_back(id.str());
    entries.push_back({{"tokens", key}, {"concepts", concepts}});
  }
  return nlohmann::json{{"max_len", g.max_len()}, {"entries", std::move(entries)}};
}

inline Gazetteer gazetteer_from_json(const nlohmann::json &j) {
  Gazetteer g;
  try {
    for (const auto &e : j.at("entries")) {
      const auto tokens = tokenize_words(e.at("tokens").get<std::string>());
      for (const auto &c : e.at("concepts")) g.add(tokens, ConceptId(c.get<std::string>()));
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", std::string("gazetteer: ") + e.what());
  }
  return g;
}

}  // namespace partial_el
