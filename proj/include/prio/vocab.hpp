// Copyright 2026 The Prio Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prio {

// Index into a Vocabulary.
struct Token {
  std::int32_t id = 0;

  friend auto operator<=>(const Token&, const Token&) = default;
};

using TokenSeq = std::vector<Token>;

std::ostream& operator<<(std::ostream& os, Token t);

// Ordered list of distinct symbol surfaces with one end-of-sequence token.
// Immutable after construction.
class Vocabulary {
 public:
  // Throws InvalidVocabulary when surfaces are empty, duplicated, or the EOS
  // surface contains whitespace.
  Vocabulary(std::vector<std::string> surfaces, std::int32_t eos_id);

  // Convenience: the last surface is EOS.
  static Vocabulary WithTrailingEos(std::vector<std::string> surfaces);

  // Plain text, one surface per line. The last line is EOS unless the first
  // line is a header `eos=<index>`.
  static Vocabulary Load(const std::filesystem::path& path);
  static Vocabulary Parse(std::istream& in);
  void Save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return surfaces_.size(); }
  Token eos() const noexcept { return Token{eos_id_}; }
  bool is_eos(Token t) const noexcept { return t.id == eos_id_; }
  bool contains(Token t) const noexcept {
    return t.id >= 0 && static_cast<std::size_t>(t.id) < surfaces_.size();
  }

  // Throws InvalidTokenId.
  const std::string& surface(Token t) const;
  const std::vector<std::string>& surfaces() const noexcept { return surfaces_; }

  // Throws UnknownSymbol.
  Token lookup(std::string_view surface) const;
  bool has_surface(std::string_view surface) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.eos_id_ == b.eos_id_ && a.surfaces_ == b.surfaces_;
  }

 private:
  std::vector<std::string> surfaces_;
  std::int32_t eos_id_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Splits on runs of whitespace and looks every word up. Throws UnknownSymbol.
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);

// Joins surfaces with single spaces; EOS tokens are omitted.
// Throws InvalidTokenId.
std::string detokenize(std::span<const Token> tokens, const Vocabulary& vocab);

}  // namespace prio

template <>
struct std::hash<prio::Token> {
  std::size_t operator()(prio::Token t) const noexcept {
    return std::hash<std::int32_t>{}(t.id);
  }
};
