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

#include "prio/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "prio/error.hpp"

namespace prio {
namespace {

bool HasWhitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::ostream& operator<<(std::ostream& os, Token t) { return os << t.id; }

Vocabulary::Vocabulary(std::vector<std::string> surfaces, std::int32_t eos_id)
    : surfaces_(std::move(surfaces)), eos_id_(eos_id) {
  if (surfaces_.empty()) {
    throw InvalidVocabulary("vocabulary is empty");
  }
  if (eos_id_ < 0 || static_cast<std::size_t>(eos_id_) >= surfaces_.size()) {
    throw InvalidVocabulary("eos index " + std::to_string(eos_id_) +
                            " out of range for " +
                            std::to_string(surfaces_.size()) + " surfaces");
  }
  index_.reserve(surfaces_.size());
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const std::string& s = surfaces_[i];
    if (s.empty()) {
      throw InvalidVocabulary("empty surface at index " + std::to_string(i));
    }
    // Non-EOS surfaces must survive whitespace tokenization too.
    if (HasWhitespace(s)) {
      throw InvalidVocabulary("surface '" + s + "' contains whitespace");
    }
    if (!index_.emplace(s, static_cast<std::int32_t>(i)).second) {
      throw InvalidVocabulary("duplicate surface '" + s + "'");
    }
  }
}

Vocabulary Vocabulary::WithTrailingEos(std::vector<std::string> surfaces) {
  const auto eos = static_cast<std::int32_t>(surfaces.size()) - 1;
  return Vocabulary(std::move(surfaces), eos);
}

Vocabulary Vocabulary::Parse(std::istream& in) {
  std::vector<std::string> surfaces;
  std::int32_t eos = -1;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string_view word = Trim(line);
    if (first && word.starts_with("eos=")) {
      first = false;
      try {
        eos = std::stoi(std::string(word.substr(4)));
      } catch (const std::exception&) {
        throw FormatError("bad vocabulary header '" + std::string(word) + "'");
      }
      continue;
    }
    first = false;
    if (word.empty()) continue;
    surfaces.emplace_back(word);
  }
  if (eos < 0) eos = static_cast<std::int32_t>(surfaces.size()) - 1;
  return Vocabulary(std::move(surfaces), eos);
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  return Parse(in);
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  if (static_cast<std::size_t>(eos_id_) + 1 != surfaces_.size()) {
    out << "eos=" << eos_id_ << '\n';
  }
  for (const auto& s : surfaces_) out << s << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

const std::string& Vocabulary::surface(Token t) const {
  if (!contains(t)) {
    throw InvalidTokenId("token id " + std::to_string(t.id) +
                         " out of range for vocabulary of size " +
                         std::to_string(surfaces_.size()));
  }
  return surfaces_[static_cast<std::size_t>(t.id)];
}

Token Vocabulary::lookup(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) throw UnknownSymbol(std::string(surface));
  return Token{it->second};
}

bool Vocabulary::has_surface(std::string_view surface) const {
  return index_.contains(std::string(surface));
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) out.push_back(vocab.lookup(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string detokenize(std::span<const Token> tokens, const Vocabulary& vocab) {
  std::string out;
  for (Token t : tokens) {
    const std::string& s = vocab.surface(t);
    if (vocab.is_eos(t)) continue;
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

}  // namespace prio
