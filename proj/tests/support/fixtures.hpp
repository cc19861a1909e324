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

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "prio/model.hpp"
#include "prio/vocab.hpp"

namespace prio::testing {

inline Vocabulary AbVocab() { return Vocabulary::WithTrailingEos({"A", "B", "<eos>"}); }

inline Token A() { return Token{0}; }
inline Token B() { return Token{1}; }
inline Token Eos() { return Token{2}; }

// Three-token fixture: every depth-2 prefix is forced to EOS.
inline TableModel M1() {
  TableModel m(AbVocab(), 3, {0.6, 0.3, 0.1});
  m.set({A()}, {0.1, 0.2, 0.7});
  m.set({B()}, {0.5, 0.1, 0.4});
  return m;
}

// All prefixes over the non-EOS tokens with length < max_len.
inline std::vector<TokenSeq> AllPrefixes(const Vocabulary& vocab, int max_len) {
  std::vector<TokenSeq> out{{}};
  std::vector<TokenSeq> frontier{{}};
  for (int len = 1; len < max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& p : frontier) {
      for (std::size_t i = 0; i < vocab.size(); ++i) {
        const Token t{static_cast<std::int32_t>(i)};
        if (vocab.is_eos(t)) continue;
        TokenSeq q = p;
        q.push_back(t);
        next.push_back(q);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// Small integer weights (0..3) make ties and zero-probability tokens common.
inline Distribution RandomDistribution(std::mt19937_64& rng, std::size_t size) {
  std::uniform_int_distribution<int> weight(0, 3);
  std::vector<double> w(size);
  double sum = 0.0;
  while (sum == 0.0) {
    sum = 0.0;
    for (auto& x : w) {
      x = weight(rng);
      sum += x;
    }
  }
  for (auto& x : w) x /= sum;
  return w;
}

inline Vocabulary LetterVocab(int non_eos) {
  std::vector<std::string> s;
  for (int i = 0; i < non_eos; ++i) s.push_back(std::string(1, static_cast<char>('a' + i)));
  s.push_back("<eos>");
  return Vocabulary::WithTrailingEos(std::move(s));
}

// Table model with an explicit random distribution for every prefix that
// can be queried before the forced-EOS position.
inline TableModel RandomTableModel(std::uint64_t seed, const Vocabulary& vocab,
                                   int max_length) {
  std::mt19937_64 rng(seed);
  TableModel m(vocab, max_length, RandomDistribution(rng, vocab.size()));
  for (const auto& p : AllPrefixes(vocab, max_length - 1)) {
    m.set(p, RandomDistribution(rng, vocab.size()));
  }
  return m;
}

// Wraps a model and records every call made through it. Its own cap sits one
// above the inner model's, so forced-EOS positions are delegated (and counted)
// rather than answered by the wrapper.
class CountingModel final : public SequenceModel {
 public:
  explicit CountingModel(const SequenceModel& inner)
      : SequenceModel(inner.vocab(), inner.max_length() + 1), inner_(inner) {}

  int calls() const { return calls_; }
  const std::map<TokenSeq, int>& per_prefix() const { return per_prefix_; }
  std::set<TokenSeq> distinct() const {
    std::set<TokenSeq> s;
    for (const auto& [p, n] : per_prefix_) s.insert(p);
    return s;
  }

 protected:
  Distribution raw_distribution(std::span<const Token> prefix) const override {
    ++calls_;
    ++per_prefix_[TokenSeq(prefix.begin(), prefix.end())];
    return inner_.next_distribution(prefix);
  }

 private:
  const SequenceModel& inner_;
  mutable int calls_ = 0;
  mutable std::map<TokenSeq, int> per_prefix_;
};

}  // namespace prio::testing
