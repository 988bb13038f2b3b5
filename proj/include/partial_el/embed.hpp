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

// Hashed character-trigram embeddings and exact cosine nearest neighbor
// search over concept synonyms.
//
// embed_text: case fold, pad with '#' on both sides, take every code-point
// trigram, hash its UTF-8 bytes with 64-bit FNV-1a modulo 2^18, count, and
// L2-normalize. All vectors are non-negative and unit length (or zero), so
// inner product equals cosine.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "partial_el/error.hpp"
#include "partial_el/kb.hpp"
#include "partial_el/text.hpp"

namespace partial_el {

inline constexpr std::uint32_t kEmbeddingDimension = 1u << 18;
inline constexpr std::size_t kNgramOrder = 3;
inline constexpr char32_t kBoundaryMarker = U'#';

struct EmbeddingVector {
  // (bucket, weight), sorted by bucket, no zero weights.
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }

  double norm() const {
    double s = 0.0;
    for (const auto &[b, w] : entries) s += w * w;
    return std::sqrt(s);
  }
};

inline std::uint32_t trigram_bucket(std::u32string_view gram) {
  std::string bytes;
  for (char32_t cp : gram) utf8::append(bytes, cp);
  return static_cast<std::uint32_t>(fnv1a64(bytes) % kEmbeddingDimension);
}

inline EmbeddingVector embed_text(std::string_view text) {
  EmbeddingVector v;
  if (text.empty()) return v;
  std::u32string padded;
  padded.push_back(kBoundaryMarker);
  for (char32_t cp : utf8::decode_all(text)) padded.push_back(fold_case(cp));
  padded.push_back(kBoundaryMarker);

  std::vector<std::uint32_t> buckets;
  buckets.reserve(padded.size());
  for (std::size_t i = 0; i + kNgramOrder <= padded.size(); ++i) {
    buckets.push_back(trigram_bucket(std::u32string_view(padded).substr(i, kNgramOrder)));
  }
  std::sort(buckets.begin(), buckets.end());
  for (std::size_t i = 0; i < buckets.size();) {
    std::size_t j = i;
    while (j < buckets.size() && buckets[j] == buckets[i]) ++j;
    v.entries.emplace_back(buckets[i], double(j - i));
    i = j;
  }
  const double n = v.norm();
  for (auto &[b, w] : v.entries) w /= n;
  return v;
}

inline double cosine(const EmbeddingVector &u, const EmbeddingVector &v) {
  double dot = 0.0;
  auto a = u.entries.begin(), ae = u.entries.end();
  auto b = v.entries.begin(), be = v.entries.end();
  while (a != ae && b != be) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      dot += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return dot;
}

struct IndexEntry {
  ConceptId concept_id;
  std::string synonym;
  EmbeddingVector vector;
};

struct Neighbor {
  ConceptId concept_id;
  double score = 0.0;

  friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

// Entries are grouped by concept (id order); each group is a contiguous
// range of synonyms.
class ConceptIndex {
 public:
  struct Group {
    ConceptId concept_id;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  ConceptIndex(std::string view_name, std::vector<IndexEntry> entries)
      : view_name_(std::move(view_name)), entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const IndexEntry &a, const IndexEntry &b) { return a.concept_id < b.concept_id; });
    for (std::size_t i = 0; i < entries_.size();) {
      std::size_t j = i;
      while (j < entries_.size() && entries_[j].concept_id == entries_[i].concept_id) ++j;
      groups_.push_back({entries_[i].concept_id, i, j});
      i = j;
    }
  }

  const std::string &view_name() const { return view_name_; }
  const std::vector<IndexEntry> &entries() const { return entries_; }
  const std::vector<Group> &groups() const { return groups_; }
  bool empty() const { return entries_.empty(); }

  const Group *find(const ConceptId &id) const {
    auto it = std::lower_bound(groups_.begin(), groups_.end(), id,
                               [](const Group &g, const ConceptId &x) { return g.concept_id < x; });
    return (it != groups_.end() && it->concept_id == id) ? &*it : nullptr;
  }

  // Max cosine between the query and any synonym of the group.
  double affinity(const Group &g, const EmbeddingVector &query) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = g.begin; i < g.end; ++i) best = std::max(best, cosine(query, entries_[i].vector));
    return best;
  }

 private:
  std::string view_name_;
  std::vector<IndexEntry> entries_;
  std::vector<Group> groups_;
};

inline ConceptIndex build_index(const KbView &view) {
  std::vector<IndexEntry> entries;
  view.for_each([&](const Concept &c) {
    for (const auto &s : c.synonyms) entries.push_back({c.id, s, embed_text(s)});
  });
  return ConceptIndex(view.name(), std::move(entries));
}

inline bool neighbor_before(const Neighbor &a, const Neighbor &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.concept_id < b.concept_id;
}

// Exact search: per-concept score is the max over its synonyms; results are
// ordered by (score desc, id asc) and truncated to k.
inline std::vector<Neighbor> nearest(const ConceptIndex &index, const EmbeddingVector &query,
                                     std::size_t k) {
  if (index.empty()) throw Error("empty_index", "nearest neighbor search on an empty index");
  if (k < 1) throw Error("invalid_argument", "k must be >= 1");
  std::vector<Neighbor> all;
  all.reserve(index.groups().size());
  for (const auto &g : index.groups()) all.push_back({g.concept_id, index.affinity(g, query)});
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), neighbor_before);
  all.resize(n);
  return all;
}

// --- Binary cache ----------------------------------------------------------
//
// Layout (host byte order): magic "PELIDX", u32 version, u32 dimension,
// u32 n-gram order, u64 key, string view name, u64 entry count, then per
// entry: string id, string synonym, u32 nnz, nnz x (u32 bucket, f64 weight).
// Strings are u32 length + bytes.

inline constexpr char kIndexMagic[6] = {'P', 'E', 'L', 'I', 'D', 'X'};
inline constexpr std::uint32_t kIndexFormatVersion = 1;

// Identifies a view's content together with the hashing parameters.
inline std::uint64_t index_cache_key(const KbView &view) {
  std::uint64_t h = fnv1a64(view.name());
  h = fnv1a64(std::to_string(kEmbeddingDimension) + "/" + std::to_string(kNgramOrder), h);
  view.for_each([&](const Concept &c) {
    h = fnv1a64(c.id.str(), h);
    for (const auto &s : c.synonyms) h = fnv1a64(s, fnv1a64("\x1f", h));
    h = fnv1a64("\x1e", h);
  });
  return h;
}

namespace detail {

template <typename T>
void write_pod(std::ostream &out, const T &v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream &in) {
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!in) throw Error("cache_error", "truncated index cache");
  return v;
}

inline void write_str(std::ostream &out, std::string_view s) {
  write_pod(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream &in) {
  const auto n = read_pod<std::uint32_t>(in);
  if (n > (1u << 24)) throw Error("cache_error", "corrupt index cache");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw Error("cache_error", "truncated index cache");
  return s;
}

}  // namespace detail

inline void save_index(const ConceptIndex &index, std::uint64_t key, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out.write(kIndexMagic, sizeof(kIndexMagic));
  detail::write_pod(out, kIndexFormatVersion);
  detail::write_pod(out, kEmbeddingDimension);
  detail::write_pod(out, static_cast<std::uint32_t>(kNgramOrder));
  detail::write_pod(out, key);
  detail::write_str(out, index.view_name());
  detail::write_pod(out, static_cast<std::uint64_t>(index.entries().size()));
  for (const auto &e : index.entries()) {
    detail::write_str(out, e.concept_id.str());
    detail::write_str(out, e.synonym);
    detail::write_pod(out, static_cast<std::uint32_t>(e.vector.entries.size()));
    for (const auto &[b, w] : e.vector.entries) {
      detail::write_pod(out, b);
      detail::write_pod(out, w);
    }
  }
}

// Returns nullopt when the file is missing or was written with another
// format version, hashing setup or key.
inline std::optional<ConceptIndex> load_index(const std::filesystem::path &path, std::uint64_t key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof(kIndexMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) return std::nullopt;
  if (detail::read_pod<std::uint32_t>(in) != kIndexFormatVersion) return std::nullopt;
  if (detail::read_pod<std::uint32_t>(in) != kEmbeddingDimension) return std::nullopt;
  if (detail::read_pod<std::uint32_t>(in) != kNgramOrder) return std::nullopt;
  if (detail::read_pod<std::uint64_t>(in) != key) return std::nullopt;
  std::string view_name = detail::read_str(in);
  const auto n = detail::read_pod<std::uint64_t>(in);
  std::vector<IndexEntry> entries;
  entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    IndexEntry e;
    e.concept_id = ConceptId(detail::read_str(in));
    e.synonym = detail::read_str(in);
    const auto nnz = detail::read_pod<std::uint32_t>(in);
    e.vector.entries.reserve(nnz);
    for (std::uint32_t j = 0; j < nnz; ++j) {
      const auto b = detail::read_pod<std::uint32_t>(in);
      const auto w = detail::read_pod<double>(in);
      e.vector.entries.emplace_back(b, w);
    }
    entries.push_back(std::move(e));
  }
  return ConceptIndex(std::move(view_name), std::move(entries));
}

// Builds the index, going through `<cache_dir>/index-<key>.bin` when a cache
// directory is given.
inline ConceptIndex load_or_build_index(const KbView &view, const std::filesystem::path &cache_dir = {}) {
  if (cache_dir.empty()) return build_index(view);
  const std::uint64_t key = index_cache_key(view);
  char name[40];
  std::snprintf(name, sizeof(name), "index-%016llx.bin", static_cast<unsigned long long>(key));
  const auto path = cache_dir / name;
  try {
    if (auto cached = load_index(path, key)) return std::move(*cached);
  } catch (const Error &) {
    // Corrupt cache: rebuild and overwrite.
  }
  ConceptIndex index = build_index(view);
  std::filesystem::create_directories(cache_dir);
  const auto tmp = path.string() + ".tmp";
  save_index(index, key, tmp);
  std::filesystem::rename(tmp, path);
  return index;
}

}  // namespace partial_el
