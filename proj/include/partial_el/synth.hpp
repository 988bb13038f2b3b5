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

// Seeded synthetic knowledge base and corpus generator.
//
// Random numbers come from xorshift64* so output is identical on every
// platform and standard library:
//
//   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  return x * 0x2545F4914F6CDD1D
//
// The state is seeded with one splitmix64 step of the configured seed:
//
//   z = seed + 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   x = z ^ (z >> 31)            (x = 0x9E3779B97F4A7C15 if that is 0)
//
// uniform(n) rejects draws below 2^64 mod n and returns draw mod n;
// uniform01() is (next() >> 11) * 2^-53.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "partial_el/corpus.hpp"
#include "partial_el/error.hpp"
#include "partial_el/kb.hpp"

namespace partial_el {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    state_ = z ^ (z >> 31);
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  // Uniform in [0, n).
  std::uint64_t uniform(std::uint64_t n) {
    if (n == 0) throw Error("invalid_argument", "uniform(0)");
    const std::uint64_t floor = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= floor) return r % n;
    }
  }

  // Uniform in [lo, hi].
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + uniform(hi - lo + 1); }

  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform(i)]);
  }

 private:
  std::uint64_t state_;
};

struct IntRange {
  std::uint64_t min = 1;
  std::uint64_t max = 1;
};

struct SynthConfig {
  std::uint64_t seed = 42;
  std::string kb_name = "synth";
  std::uint64_t n_concepts = 500;
  IntRange synonyms_per_concept{2, 4};  // including the canonical name
  std::uint64_t n_types = 4;
  std::uint64_t train_docs = 800;
  std::uint64_t dev_docs = 100;
  std::uint64_t test_docs = 200;
  IntRange mentions_per_doc{3, 6};
  IntRange filler_tokens_between{1, 4};
  std::uint64_t filler_vocabulary = 30;
  double surface_noise_prob = 0.05;
  double partial_fraction = 0.4;
  double zipf_exponent = 0.0;  // 0 = uniform concept usage

  void validate() const {
    auto range_ok = [](const IntRange &r, const char *what) {
      if (r.min < 1 || r.max < r.min) {
        throw Error("invalid_config", std::string(what) + " must satisfy 1 <= min <= max");
      }
    };
    if (n_concepts < 2) throw Error("invalid_config", "n_concepts must be >= 2");
    if (n_types < 1) throw Error("invalid_config", "n_types must be >= 1");
    if (train_docs < 1 || dev_docs < 1 || test_docs < 1) throw Error("invalid_config", "doc counts must be >= 1");
    if (filler_vocabulary < 1) throw Error("invalid_config", "filler_vocabulary must be >= 1");
    range_ok(synonyms_per_concept, "synonyms_per_concept");
    range_ok(mentions_per_doc, "mentions_per_doc");
    range_ok(filler_tokens_between, "filler_tokens_between");
    if (!(surface_noise_prob >= 0.0 && surface_noise_prob <= 1.0)) {
      throw Error("invalid_config", "surface_noise_prob must be in [0, 1]");
    }
    if (!(partial_fraction > 0.0 && partial_fraction < 1.0)) {
      throw Error("invalid_config", "partial_fraction must be in (0, 1)");
    }
    if (!(zipf_exponent >= 0.0)) throw Error("invalid_config", "zipf_exponent must be >= 0");
    if (kb_name.empty()) throw Error("invalid_config", "kb_name must be non-empty");
  }
};

inline SynthConfig synth_config_from_json(const nlohmann::json &j) {
  static const std::set<std::string> known = {
      "seed",          "kb_name",           "n_concepts",         "synonyms_per_concept", "n_types",
      "docs",          "mentions_per_doc",  "filler_tokens_between", "filler_vocabulary", "surface_noise_prob",
      "partial_fraction", "zipf_exponent"};
  if (!j.is_object()) throw Error("invalid_config", "synth config must be a JSON object");
  for (const auto &[k, v] : j.items()) {
    if (!known.count(k)) throw Error("invalid_config", "unknown synth key '" + k + "'");
  }
  SynthConfig c;
  try {
    auto range = [&](const char *key, IntRange &r) {
      if (!j.contains(key)) return;
      r.min = j[key].at(0).get<std::uint64_t>();
      r.max = j[key].at(1).get<std::uint64_t>();
    };
    c.seed = j.value("seed", c.seed);
    c.kb_name = j.value("kb_name", c.kb_name);
    c.n_concepts = j.value("n_concepts", c.n_concepts);
    range("synonyms_per_concept", c.synonyms_per_concept);
    c.n_types = j.value("n_types", c.n_types);
    if (j.contains("docs")) {
      c.train_docs = j["docs"].value("train", c.train_docs);
      c.dev_docs = j["docs"].value("dev", c.dev_docs);
      c.test_docs = j["docs"].value("test", c.test_docs);
    }
    range("mentions_per_doc", c.mentions_per_doc);
    range("filler_tokens_between", c.filler_tokens_between);
    c.filler_vocabulary = j.value("filler_vocabulary", c.filler_vocabulary);
    c.surface_noise_prob = j.value("surface_noise_prob", c.surface_noise_prob);
    c.partial_fraction = j.value("partial_fraction", c.partial_fraction);
    c.zipf_exponent = j.value("zipf_exponent", c.zipf_exponent);
  } catch (const nlohmann::json::exception &e) {
    throw Error("invalid_config", std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json synth_config_to_json(const SynthConfig &c) {
  return nlohmann::json{{"seed", c.seed},
                        {"kb_name", c.kb_name},
                        {"n_concepts", c.n_concepts},
                        {"synonyms_per_concept", {c.synonyms_per_concept.min, c.synonyms_per_concept.max}},
                        {"n_types", c.n_types},
                        {"docs", {{"train", c.train_docs}, {"dev", c.dev_docs}, {"test", c.test_docs}}},
                        {"mentions_per_doc", {c.mentions_per_doc.min, c.mentions_per_doc.max}},
                        {"filler_tokens_between", {c.filler_tokens_between.min, c.filler_tokens_between.max}},
                        {"filler_vocabulary", c.filler_vocabulary},
                        {"surface_noise_prob", c.surface_noise_prob},
                        {"partial_fraction", c.partial_fraction},
                        {"zipf_exponent", c.zipf_exponent}};
}

struct SynthOutput {
  KnowledgeBase kb;
  // "sampled", one view per semantic type, then the complement of each.
  std::vector<PartialKb> partials;
  Corpus train;
  Corpus dev;
  Corpus test;
};

namespace detail {

inline constexpr std::string_view kConsonants = "bdfgklmnprstvz";
inline constexpr std::string_view kVowels = "aeiou";
inline constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";

inline std::string syllables(Rng &rng, std::uint64_t n) {
  std::string s;
  for (std::uint64_t i = 0; i < n; ++i) {
    s.push_back(kConsonants[rng.uniform(kConsonants.size())]);
    s.push_back(kVowels[rng.uniform(kVowels.size())]);
  }
  return s;
}

inline std::string random_name(Rng &rng) {
  const auto n_tokens = rng.range(2, 3);
  std::string name;
  for (std::uint64_t t = 0; t < n_tokens; ++t) {
    if (t) name.push_back(' ');
    name += syllables(rng, rng.range(2, 3));
  }
  return name;
}

// One substitution, insertion or deletion at a letter position; tokens never
// become empty.
inline std::string edit_variant(Rng &rng, const std::string &name) {
  std::vector<std::size_t> letters;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] != ' ') letters.push_back(i);
  }
  std::string v = name;
  const std::size_t pos = letters[rng.uniform(letters.size())];
  switch (rng.uniform(3)) {
    case 0: {
      char c;
      do c = kLetters[rng.uniform(kLetters.size())];
      while (c == v[pos]);
      v[pos] = c;
      break;
    }
    case 1:
      v.insert(v.begin() + std::ptrdiff_t(pos), kLetters[rng.uniform(kLetters.size())]);
      break;
    default: {
      const bool left_ok = pos > 0 && v[pos - 1] != ' ';
      const bool right_ok = pos + 1 < v.size() && v[pos + 1] != ' ';
      if (left_ok || right_ok) {
        v.erase(v.begin() + std::ptrdiff_t(pos));
      } else {
        v.insert(v.begin() + std::ptrdiff_t(pos), kLetters[rng.uniform(kLetters.size())]);
      }
      break;
    }
  }
  return v;
}

inline std::string corrupt(Rng &rng, const std::string &surface, double p) {
  std::string out = surface;
  if (p <= 0.0) return out;
  for (auto &c : out) {
    if (c == ' ' || !rng.bernoulli(p)) continue;
    char r;
    do r = kLetters[rng.uniform(kLetters.size())];
    while (r == c);
    c = r;
  }
  return out;
}

inline std::string type_code(std::uint64_t t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "T%03llu", static_cast<unsigned long long>(t + 1));
  return buf;
}

inline std::string concept_code(std::uint64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "C%06llu", static_cast<unsigned long long>(i + 1));
  return buf;
}

}  // namespace detail

// Partial view over a uniformly sampled fraction of the ids (at least one
// concept, never all of them).
inline PartialKb sampled_view(const KnowledgeBase &kb, double fraction, std::uint64_t seed, std::string name) {
  Rng rng(seed);
  const auto members = kb.ids();
  std::vector<ConceptId> ids(members.begin(), members.end());
  rng.shuffle(ids);
  auto n = static_cast<std::size_t>(std::llround(fraction * double(ids.size())));
  n = std::clamp<std::size_t>(n, 1, ids.size() - 1);
  PartialKb p;
  p.name = std::move(name);
  p.parent = kb.name();
  p.member_ids.insert(ids.begin(), ids.begin() + std::ptrdiff_t(n));
  return p;
}

inline SynthOutput generate(const SynthConfig &config) {
  config.validate();
  Rng rng(config.seed);

  // Concepts.
  std::vector<Concept> concepts;
  std::unordered_set<std::string> canonical_names;
  std::set<std::string> name_tokens;
  for (std::uint64_t i = 0; i < config.n_concepts; ++i) {
    std::string name;
    do name = detail::random_name(rng);
    while (!canonical_names.insert(name).second);
    std::vector<std::string> synonyms;
    std::set<std::string> seen{name};
    const auto n_syn = rng.range(config.synonyms_per_concept.min, config.synonyms_per_concept.max);
    for (std::uint64_t s = 1, attempts = 0; s < n_syn && attempts < 50; ++attempts) {
      auto v = detail::edit_variant(rng, name);
      if (!seen.insert(v).second) continue;
      synonyms.push_back(std::move(v));
      ++s;
    }
    const std::string type = detail::type_code(rng.uniform(config.n_types));
    auto c = make_concept(ConceptId(detail::concept_code(i)), name, synonyms, {type});
    for (const auto &s : c.synonyms) {
      for (auto &t : tokenize_words(s)) name_tokens.insert(std::move(t));
    }
    concepts.push_back(std::move(c));
  }

  // Filler vocabulary disjoint from every name token.
  std::vector<std::string> fillers;
  {
    std::set<std::string> seen;
    while (fillers.size() < config.filler_vocabulary) {
      std::string w = detail::syllables(rng, rng.range(1, 2));
      w.push_back(detail::kConsonants[rng.uniform(detail::kConsonants.size())]);
      if (name_tokens.count(w) || !seen.insert(w).second) continue;
      fillers.push_back(std::move(w));
    }
  }

  // Zipf weights over a random ranking of concepts.
  std::vector<std::size_t> ranking(concepts.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) ranking[i] = i;
  rng.shuffle(ranking);
  std::vector<double> cumulative(concepts.size());
  {
    std::vector<double> weight(concepts.size());
    for (std::size_t r = 0; r < ranking.size(); ++r) {
      weight[ranking[r]] = 1.0 / std::pow(double(r + 1), config.zipf_exponent);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) cumulative[i] = total += weight[i];
  }
  auto sample_concept = [&]() -> const Concept & {
    const double u = rng.uniform01() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return concepts[std::size_t(it - cumulative.begin())];
  };

  auto make_split = [&](Split split, std::uint64_t n_docs) {
    std::vector<Document> docs;
    std::vector<GoldAnnotation> gold;
    for (std::uint64_t d = 0; d < n_docs; ++d) {
      char id_buf[32];
      std::snprintf(id_buf, sizeof(id_buf), "%s-%05llu", std::string(to_string(split)).c_str(),
                    static_cast<unsigned long long>(d));
      std::string text;
      std::size_t length = 0;  // code points; all generated text is ASCII
      auto append = [&](const std::string &piece) {
        if (!text.empty()) {
          text.push_back(' ');
          ++length;
        }
        text += piece;
        length += piece.size();
      };
      auto add_fillers = [&]() {
        const auto n = rng.range(config.filler_tokens_between.min, config.filler_tokens_between.max);
        for (std::uint64_t i = 0; i < n; ++i) append(fillers[rng.uniform(fillers.size())]);
      };
      const auto n_mentions = rng.range(config.mentions_per_doc.min, config.mentions_per_doc.max);
      add_fillers();
      for (std::uint64_t m = 0; m < n_mentions; ++m) {
        const Concept &c = sample_concept();
        const auto surface =
            detail::corrupt(rng, c.synonyms[rng.uniform(c.synonyms.size())], config.surface_noise_prob);
        append(surface);
        gold.push_back({id_buf, Span{length - surface.size(), length}, c.id});
        add_fillers();
      }
      text += " .";
      docs.emplace_back(id_buf, std::move(text));
    }
    return Corpus(split, std::move(docs), std::move(gold));
  };

  KnowledgeBase kb(config.kb_name, concepts);
  Corpus train = make_split(Split::kTrain, config.train_docs);
  Corpus dev = make_split(Split::kDev, config.dev_docs);
  Corpus test = make_split(Split::kTest, config.test_docs);

  std::vector<PartialKb> partials;
  partials.push_back(sampled_view(kb, config.partial_fraction, rng.next(), "sampled"));
  for (std::uint64_t t = 0; t < config.n_types; ++t) {
    try {
      partials.push_back(subset(kb, SemanticTypeSelector{detail::type_code(t)}, detail::type_code(t)).partial);
    } catch (const Error &) {
      // No concept drew this type.
    }
  }
  const std::size_t n_base = partials.size();
  for (std::size_t i = 0; i < n_base; ++i) {
    try {
      partials.push_back(complement(kb, partials[i]));
    } catch (const Error &) {
      // A type covering the whole KB has no complement.
    }
  }
  return SynthOutput{std::move(kb), std::move(partials), std::move(train), std::move(dev), std::move(test)};
}

// File name for a partial view ("∁" spelled "_c").
inline std::string view_file_name(const std::string &view_name) {
  std::string out;
  for (std::size_t i = 0; i < view_name.size();) {
    if (view_name.compare(i, kComplementSuffix.size(), kComplementSuffix) == 0) {
      out += "_c";
      i += kComplementSuffix.size();
    } else {
      out.push_back(view_name[i++]);
    }
  }
  return out + ".json";
}

// Writes <kb_name>.jsonl, train/dev/test.jsonl and views/<view>.json.
inline void write_synth(const SynthOutput &out, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir / "views");
  auto open = [](const std::filesystem::path &p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("io_error", "cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / (out.kb.name() + ".jsonl"));
    write_kb(out.kb, f);
  }
  for (const auto *c : {&out.train, &out.dev, &out.test}) {
    auto f = open(dir / (std::string(to_string(c->split())) + ".jsonl"));
    write_corpus(*c, f);
  }
  for (const auto &p : out.partials) {
    auto f = open(dir / "views" / view_file_name(p.name));
    f << partial_to_json(p).dump(2) << '\n';
  }
}

}  // namespace partial_el
