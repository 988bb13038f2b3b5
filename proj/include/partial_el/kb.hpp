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

// Knowledge bases and partial views over them.
//
// A KnowledgeBase is the training inventory. A PartialKb is a named set of
// ids that references its parent by name and never copies concept records.
// KbView binds the two and is what indexing, tries and gold restriction
// consume, so a full KB and a partial one are interchangeable downstream.

#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"
#include "partial_el/error.hpp"
#include "partial_el/text.hpp"

namespace partial_el {

class ConceptId {
 public:
  ConceptId() = default;
  explicit ConceptId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw Error("invalid_id", "concept id must be non-empty");
  }

  const std::string &str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend auto operator<=>(const ConceptId &, const ConceptId &) = default;
  friend bool operator==(const ConceptId &, const ConceptId &) = default;

 private:
  std::string value_;
};

struct Concept {
  ConceptId id;
  std::string canonical_name;
  std::vector<std::string> synonyms;  // canonical name first
  std::set<std::string> semantic_types;
};

// Normalizes a raw record: the canonical name is moved to the front of the
// synonym list, and synonyms equal after case folding are collapsed (first
// spelling wins).
inline Concept make_concept(ConceptId id, std::string canonical_name,
                            const std::vector<std::string> &synonyms,
                            std::set<std::string> semantic_types = {}) {
  if (canonical_name.empty()) {
    throw Error("invalid_concept", "concept " + id.str() + " has an empty name");
  }
  Concept c;
  c.id = std::move(id);
  c.semantic_types = std::move(semantic_types);
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string &s) {
    if (s.empty()) {
      throw Error("invalid_concept",
                  "concept " + c.id.str() + " has an empty synonym");
    }
    if (seen.insert(fold_case(s)).second) c.synonyms.push_back(s);
  };
  add(canonical_name);
  for (const auto &s : synonyms) add(s);
  c.canonical_name = std::move(canonical_name);
  return c;
}

class KnowledgeBase {
 public:
  KnowledgeBase(std::string name, std::vector<Concept> concepts)
      : name_(std::move(name)) {
    if (concepts.empty()) {
      throw Error("empty_kb", "knowledge base '" + name_ + "' has no concepts");
    }
    for (auto &c : concepts) {
      const ConceptId id = c.id;
      if (!concepts_.emplace(id, std::move(c)).second) {
        throw Error("duplicate_id", "duplicate concept id " + id.str());
      }
    }
  }

  const std::string &name() const { return name_; }
  std::size_t size() const { return concepts_.size(); }
  bool contains(const ConceptId &id) const { return concepts_.count(id) != 0; }

  const Concept *find(const ConceptId &id) const {
    auto it = concepts_.find(id);
    return it == concepts_.end() ? nullptr : &it->second;
  }

  const Concept &at(const ConceptId &id) const {
    const Concept *c = find(id);
    if (c == nullptr) throw Error("unknown_concept", "unknown concept " + id.str());
    return *c;
  }

  // Ordered by id.
  const std::map<ConceptId, Concept> &concepts() const { return concepts_; }

  std::set<ConceptId> ids() const {
    std::set<ConceptId> out;
    for (const auto &[id, c] : concepts_) out.insert(id);
    return out;
  }

 private:
  std::string name_;
  std::map<ConceptId, Concept> concepts_;
};

struct PartialKb {
  std::string name;
  std::string parent;
  std::set<ConceptId> member_ids;

  bool is_proper_subset_of(const KnowledgeBase &kb) const {
    return member_ids.size() < kb.size();
  }
};

// A read-only view: either a whole KnowledgeBase or one of its partial KBs.
// The KnowledgeBase must outlive the view; the member set is shared.
class KbView {
 public:
  explicit KbView(const KnowledgeBase &kb) : kb_(&kb), name_(kb.name()) {}

  KbView(const KnowledgeBase &kb, const PartialKb &partial)
      : kb_(&kb),
        name_(partial.name),
        members_(std::make_shared<const std::set<ConceptId>>(partial.member_ids)) {
    if (partial.parent != kb.name()) {
      throw Error("parent_mismatch", "partial KB '" + partial.name +
                                         "' has parent '" + partial.parent +
                                         "', not '" + kb.name() + "'");
    }
    for (const auto &id : *members_) {
      if (!kb.contains(id)) {
        throw Error("unknown_concept", "partial KB '" + partial.name +
                                           "' references " + id.str() +
                                           " absent from '" + kb.name() + "'");
      }
    }
  }

  const std::string &name() const { return name_; }
  const KnowledgeBase &kb() const { return *kb_; }
  bool is_full() const { return members_ == nullptr; }

  std::size_t size() const { return members_ ? members_->size() : kb_->size(); }

  bool contains(const ConceptId &id) const {
    return members_ ? members_->count(id) != 0 : kb_->contains(id);
  }

  // Calls fn(const Concept&) for every member in id order.
  template <typename Fn>
  void for_each(Fn &&fn) const {
    if (members_) {
      for (const auto &id : *members_) fn(kb_->at(id));
    } else {
      for (const auto &[id, c] : kb_->concepts()) fn(c);
    }
  }

  std::set<ConceptId> ids() const { return members_ ? *members_ : kb_->ids(); }

 private:
  const KnowledgeBase *kb_;
  std::string name_;
  std::shared_ptr<const std::set<ConceptId>> members_;
};

// --- JSONL I/O -------------------------------------------------------------

inline Concept concept_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw Error("parse_error", "expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) {
    throw Error("parse_error", "missing string field 'id'");
  }
  if (!j.contains("name") || !j["name"].is_string()) {
    throw Error("parse_error", "missing string field 'name'");
  }
  std::vector<std::string> synonyms;
  if (j.contains("synonyms")) synonyms = j["synonyms"].get<std::vector<std::string>>();
  std::set<std::string> types;
  if (j.contains("types")) {
    for (const auto &t : j["types"]) types.insert(t.get<std::string>());
  }
  return make_concept(ConceptId(j["id"].get<std::string>()),
                      j["name"].get<std::string>(), synonyms, std::move(types));
}

inline nlohmann::json concept_to_json(const Concept &c) {
  return nlohmann::json{{"id", c.id.str()},
                        {"name", c.canonical_name},
                        {"synonyms", c.synonyms},
                        {"types", std::vector<std::string>(c.semantic_types.begin(),
                                                           c.semantic_types.end())}};
}

inline KnowledgeBase parse_kb(std::istream &in, std::string name) {
  std::vector<Concept> concepts;
  std::set<ConceptId> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Concept c;
    try {
      c = concept_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception &e) {
      throw Error("parse_error", "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error &e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(c.id).second) {
      throw Error("duplicate_id", "line " + std::to_string(line_no) +
                                      ": duplicate concept id " + c.id.str());
    }
    concepts.push_back(std::move(c));
  }
  if (concepts.empty()) throw Error("empty_kb", "knowledge base '" + name + "' is empty");
  return KnowledgeBase(std::move(name), std::move(concepts));
}

// The KB is named after the file stem unless a name is given.
inline KnowledgeBase load_kb(const std::filesystem::path &path, std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  if (name.empty()) name = path.stem().string();
  return parse_kb(in, std::move(name));
}

inline void write_kb(const KnowledgeBase &kb, std::ostream &out) {
  for (const auto &[id, c] : kb.concepts()) out << concept_to_json(c).dump() << '\n';
}

inline nlohmann::json partial_to_json(const PartialKb &p) {
  std::vector<std::string> ids;
  for (const auto &id : p.member_ids) ids.push_back(id.str());
  return nlohmann::json{{"name", p.name}, {"parent", p.parent}, {"members", ids}};
}

inline PartialKb partial_from_json(const nlohmann::json &j) {
  PartialKb p;
  try {
    p.name = j.at("name").get<std::string>();
    p.parent = j.at("parent").get<std::string>();
    for (const auto &id : j.at("members")) p.member_ids.insert(ConceptId(id.get<std::string>()));
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", std::string("partial KB: ") + e.what());
  }
  if (p.member_ids.empty()) throw Error("empty_partial", "partial KB '" + p.name + "' is empty");
  return p;
}

inline PartialKb load_partial(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
  return partial_from_json(j);
}

// --- Selection -------------------------------------------------------------

struct IdListSelector {
  std::vector<ConceptId> ids;
};

struct SemanticTypeSelector {
  std::string type_code;
};

// One id or one canonical name per line; '#' starts a comment. A line that
// is not an id is matched case-insensitively against canonical names.
struct NameListSelector {
  std::filesystem::path path;
};

using Selector = std::variant<IdListSelector, SemanticTypeSelector, NameListSelector>;

struct SubsetResult {
  PartialKb partial;
  std::size_t dropped = 0;  // selector entries not found in the parent
  bool proper = true;       // false when the selection is the whole parent
};

namespace detail {

inline std::vector<std::string> read_selector_lines(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace detail

inline SubsetResult subset(const KnowledgeBase &kb, const Selector &selector,
                           std::string name) {
  SubsetResult result;
  result.partial.name = std::move(name);
  result.partial.parent = kb.name();
  auto &members = result.partial.member_ids;

  if (const auto *ids = std::get_if<IdListSelector>(&selector)) {
    for (const auto &id : ids->ids) {
      if (kb.contains(id)) {
        members.insert(id);
      } else {
        ++result.dropped;
      }
    }
  } else if (const auto *type = std::get_if<SemanticTypeSelector>(&selector)) {
    for (const auto &[id, c] : kb.concepts()) {
      if (c.semantic_types.count(type->type_code)) members.insert(id);
    }
  } else {
    const auto &file = std::get<NameListSelector>(selector);
    std::map<std::string, std::vector<ConceptId>> by_name;
    for (const auto &[id, c] : kb.concepts()) by_name[fold_case(c.canonical_name)].push_back(id);
    for (const auto &entry : detail::read_selector_lines(file.path)) {
      if (kb.contains(ConceptId(entry))) {
        members.insert(ConceptId(entry));
        continue;
      }
      auto it = by_name.find(fold_case(entry));
      if (it == by_name.end()) {
        ++result.dropped;
        continue;
      }
      members.insert(it->second.begin(), it->second.end());
    }
  }
  if (members.empty()) {
    throw Error("empty_partial", "selector for '" + result.partial.name +
                                     "' matched no concept of '" + kb.name() + "'");
  }
  result.proper = result.partial.is_proper_subset_of(kb);
  return result;
}

inline constexpr std::string_view kComplementSuffix = "∁";

inline std::string complement_name(const std::string &name) {
  if (name.size() >= kComplementSuffix.size() &&
      name.compare(name.size() - kComplementSuffix.size(), kComplementSuffix.size(),
                   kComplementSuffix) == 0) {
    return name.substr(0, name.size() - kComplementSuffix.size());
  }
  return name + std::string(kComplementSuffix);
}

inline PartialKb complement(const KnowledgeBase &kb, const PartialKb &partial) {
  if (partial.parent != kb.name()) {
    throw Error("parent_mismatch", "partial KB '" + partial.name + "' has parent '" +
                                       partial.parent + "', not '" + kb.name() + "'");
  }
  PartialKb out;
  out.name = complement_name(partial.name);
  out.parent = kb.name();
  for (const auto &[id, c] : kb.concepts()) {
    if (!partial.member_ids.count(id)) out.member_ids.insert(id);
  }
  if (out.member_ids.empty()) {
    throw Error("empty_complement",
                "complement of '" + partial.name + "' in '" + kb.name() + "' is empty");
  }
  return out;
}

}  // namespace partial_el

template <>
struct std::hash<partial_el::ConceptId> {
  std::size_t operator()(const partial_el::ConceptId &id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
