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


// Fixture builders shared by the unit tests.

#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "partial_el/partial_el.hpp"

namespace testing_support {

using namespace partial_el;

struct ConceptSpec {
  std::string id;
  std::string name;
  std::vector<std::string> synonyms = {};
  std::set<std::string> types = {};
};

inline KnowledgeBase make_kb(std::string name, const std::vector<ConceptSpec> &specs) {
  std::vector<Concept> concepts;
  for (const auto &s : specs) concepts.push_back(make_concept(ConceptId(s.id), s.name, s.synonyms, s.types));
  return KnowledgeBase(std::move(name), std::move(concepts));
}

inline PartialKb make_partial(const KnowledgeBase &kb, std::string name, const std::vector<std::string> &ids) {
  PartialKb p;
  p.name = std::move(name);
  p.parent = kb.name();
  for (const auto &id : ids) p.member_ids.insert(ConceptId(id));
  return p;
}

inline GoldAnnotation gold(std::string doc, std::size_t start, std::size_t end, std::string concept_id) {
  return GoldAnnotation{std::move(doc), Span{start, end}, ConceptId(std::move(concept_id))};
}

inline ScoredPrediction pred(std::string doc, std::size_t start, std::size_t end, std::string concept_id,
                             double score = 0.0, Paradigm paradigm = Paradigm::kNerNed) {
  return ScoredPrediction{std::move(doc), Span{start, end}, ConceptId(std::move(concept_id)), score, paradigm};
}

// Annotation spans given by the surface text of the first occurrence.
inline GoldAnnotation gold_on(const Document &doc, const std::string &surface, std::string concept_id,
                              std::size_t from = 0) {
  const auto pos = doc.text().find(surface, from);
  if (pos == std::string::npos) throw std::runtime_error("fixture: no '" + surface + "'");
  // ASCII fixtures only: byte offsets are code-point offsets.
  return gold(doc.doc_id(), pos, pos + surface.size(), std::move(concept_id));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("partial_el_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path &p, const std::string &content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Random lowercase word over a small alphabet, so collisions happen.
inline std::string random_word(std::mt19937_64 &rng, int min_len = 1, int max_len = 3, const char *alphabet = "abc") {
  const std::string a(alphabet);
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> ch(0, a.size() - 1);
  std::string w;
  for (int i = len(rng); i > 0; --i) w.push_back(a[ch(rng)]);
  return w;
}

}  // namespace testing_support
