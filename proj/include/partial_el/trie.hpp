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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "partial_el/kb.hpp"
#include "partial_el/text.hpp"

namespace partial_el {

// Token prefix trie over tokenized concept names. Tokens are interned; each
// node keeps its children sorted by token text.
class NameTrie {
 public:
  using NodeId = std::uint32_t;
  using TokenId = std::uint32_t;
  static constexpr NodeId kRoot = 0;

  struct Child {
    TokenId token;
    NodeId node;
  };

  NameTrie() : nodes_(1) {}

  void insert(const std::vector<std::string> &tokens, const ConceptId &id) {
    if (tokens.empty()) return;
    NodeId node = kRoot;
    for (const auto &t : tokens) {
      const TokenId tid = intern(t);
      auto &kids = nodes_[node].children;
      auto it = std::lower_bound(kids.begin(), kids.end(), t,
                                 [&](const Child &c, const std::string &s) { return tokens_[c.token] < s; });
      if (it != kids.end() && it->token == tid) {
        node = it->node;
        continue;
      }
      const auto child = static_cast<NodeId>(nodes_.size());
      kids.insert(it, Child{tid, child});
      nodes_.emplace_back();
      node = child;
    }
    auto &concepts = nodes_[node].concepts;
    auto pos = std::lower_bound(concepts.begin(), concepts.end(), id);
    if (pos == concepts.end() || *pos != id) {
      if (concepts.empty()) ++terminal_count_;
      concepts.insert(pos, id);
    }
  }

  std::span<const Child> children(NodeId node) const { return nodes_[node].children; }
  bool is_terminal(NodeId node) const { return !nodes_[node].concepts.empty(); }
  // Sorted; the first entry is the tie-break winner.
  const std::vector<ConceptId> &concepts(NodeId node) const { return nodes_[node].concepts; }

  const std::string &token(TokenId id) const { return tokens_[id]; }
  std::size_t token_count() const { return tokens_.size(); }
  std::optional<TokenId> find_token(std::string_view t) const {
    auto it = token_ids_.find(std::string(t));
    if (it == token_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<NodeId> child(NodeId node, std::string_view t) const {
    const auto &kids = nodes_[node].children;
    auto it = std::lower_bound(kids.begin(), kids.end(), t,
                               [&](const Child &c, std::string_view s) { return tokens_[c.token] < s; });
    if (it == kids.end() || tokens_[it->token] != t) return std::nullopt;
    return it->node;
  }

  template <typename Range>
  std::optional<NodeId> walk(const Range &prefix) const {
    NodeId node = kRoot;
    for (const auto &t : prefix) {
      auto next = child(node, t);
      if (!next) return std::nullopt;
      node = *next;
    }
    return node;
  }

  std::size_t node_count() const { return nodes_.size(); }
  // Number of distinct token sequences that end at a terminal.
  std::size_t terminal_count() const { return terminal_count_; }

 private:
  struct Node {
    std::vector<Child> children;
    std::vector<ConceptId> concepts;
  };

  TokenId intern(const std::string &t) {
    auto [it, inserted] = token_ids_.try_emplace(t, static_cast<TokenId>(tokens_.size()));
    if (inserted) tokens_.push_back(t);
    return it->second;
  }

  std::vector<Node> nodes_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> token_ids_;
  std::size_t terminal_count_ = 0;
};

struct TrieOptions {
  // Insert only canonical names (ablation); default inserts every synonym.
  bool canonical_only = false;
};

inline NameTrie build_trie(const KbView &view, TrieOptions options = {}) {
  NameTrie trie;
  view.for_each([&](const Concept &c) {
    if (options.canonical_only) {
      trie.insert(tokenize_words(c.canonical_name), c.id);
      return;
    }
    for (const auto &s : c.synonyms) trie.insert(tokenize_words(s), c.id);
  });
  return trie;
}

struct Continuations {
  std::vector<std::string> tokens;  // sorted
  bool terminal = false;
  std::vector<ConceptId> concepts;  // sorted
};

inline Continuations allowed_continuations(const NameTrie &trie, const std::vector<std::string> &prefix) {
  Continuations out;
  const auto node = trie.walk(prefix);
  if (!node) return out;
  for (const auto &c : trie.children(*node)) out.tokens.push_back(trie.token(c.token));
  out.terminal = trie.is_terminal(*node);
  out.concepts = trie.concepts(*node);
  return out;
}

}  // namespace partial_el
