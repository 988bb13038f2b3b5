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

// Text primitives shared by every module: UTF-8 decoding, simple case
// folding, character spans and the alphanumeric tokenizer.
//
// All offsets are counted in Unicode code points, half-open [start, end).

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace partial_el {

// 64-bit FNV-1a.
inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t hash = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const Span &other) const {
    return start < other.end && other.start < end;
  }
  friend auto operator<=>(const Span &, const Span &) = default;
};

struct TokenSpan {
  std::string token;
  Span span;

  friend bool operator==(const TokenSpan &, const TokenSpan &) = default;
};

namespace utf8 {

// Decodes one code point starting at byte `pos`, advancing `pos`. A malformed
// byte decodes as U+FFFD and consumes one byte, so offsets never get stuck.
inline char32_t decode(std::string_view s, std::size_t &pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      pos += 2;
      return (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = c1 >= 0 ? cont(2) : -1;
    if (c2 >= 0) {
      pos += 3;
      return (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = c1 >= 0 ? cont(2) : -1,
              c3 = c2 >= 0 ? cont(3) : -1;
    if (c3 >= 0) {
      pos += 4;
      return (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) |
             (char32_t(c2) << 6) | char32_t(c3);
    }
  }
  ++pos;
  return 0xFFFD;
}

inline void append(std::string &out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::vector<char32_t> decode_all(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) out.push_back(decode(s, pos));
  return out;
}

// Byte offset of every code point, plus a final entry equal to s.size().
inline std::vector<std::uint32_t> code_point_offsets(std::string_view s) {
  std::vector<std::uint32_t> offsets;
  offsets.reserve(s.size() + 1);
  std::size_t pos = 0;
  while (pos < s.size()) {
    offsets.push_back(static_cast<std::uint32_t>(pos));
    decode(s, pos);
  }
  offsets.push_back(static_cast<std::uint32_t>(s.size()));
  return offsets;
}

}  // namespace utf8

// Simple (1:1) lowercase mapping for ASCII, Latin-1, Latin Extended-A,
// Greek and Cyrillic capitals. No special casing, no normalization.
inline char32_t fold_case(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp == 0x130) return U'i';
  if (cp >= 0x100 && cp <= 0x137 && cp != 0x131) return cp | 1;
  if (cp >= 0x139 && cp <= 0x148) return (cp & 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return cp | 1;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

inline std::string fold_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) utf8::append(out, fold_case(utf8::decode(s, pos)));
  return out;
}

// ASCII letters and digits, plus non-ASCII code points outside the common
// punctuation, symbol and space blocks.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= '0' && cp <= '9');
  }
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, arrows, ...
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp == 0xFEFF || cp == 0xFFFD) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  return true;
}

// Maximal runs of word characters, case folded, with code-point spans.
inline std::vector<TokenSpan> tokenize(std::string_view text) {
  std::vector<TokenSpan> tokens;
  std::size_t pos = 0;
  std::size_t index = 0;
  TokenSpan current;
  bool in_token = false;
  while (pos < text.size()) {
    const char32_t cp = utf8::decode(text, pos);
    if (is_word_char(cp)) {
      if (!in_token) {
        current.token.clear();
        current.span.start = index;
        in_token = true;
      }
      utf8::append(current.token, fold_case(cp));
    } else if (in_token) {
      current.span.end = index;
      tokens.push_back(std::move(current));
      current = TokenSpan{};
      in_token = false;
    }
    ++index;
  }
  if (in_token) {
    current.span.end = index;
    tokens.push_back(std::move(current));
  }
  return tokens;
}

inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  for (auto &t : tokenize(text)) words.push_back(std::move(t.token));
  return words;
}

inline std::string join_tokens(const std::vector<std::string> &tokens,
                               char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(sep);
    out += tokens[i];
  }
  return out;
}

}  // namespace partial_el
