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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "prio/vocab.hpp"

namespace prio {

using Distribution = std::vector<double>;

// Contract for any next-token model: a deterministic map from a token prefix
// to a probability vector over the vocabulary.
//
// Callers go through next_distribution(), which validates the prefix and
// forces EOS once the prefix reaches max_length - 1 tokens, so every
// generation terminates with EOS within max_length tokens. Subclasses only
// provide the raw distribution for shorter prefixes.
class SequenceModel {
 public:
  SequenceModel(Vocabulary vocab, int max_length);
  virtual ~SequenceModel() = default;

  SequenceModel(const SequenceModel&) = default;
  SequenceModel& operator=(const SequenceModel&) = delete;

  const Vocabulary& vocab() const noexcept { return vocab_; }
  int max_length() const noexcept { return max_length_; }

  // Throws PrefixTooLong, PrefixContainsEos, InvalidTokenId.
  Distribution next_distribution(std::span<const Token> prefix) const;

 protected:
  // Called only with valid prefixes shorter than max_length - 1.
  virtual Distribution raw_distribution(std::span<const Token> prefix) const = 0;

 private:
  Vocabulary vocab_;
  int max_length_;
};

// Throws InvalidDistribution unless `p` has `size` non-negative finite
// entries summing to 1 within 1e-9.
void ValidateDistribution(std::span<const double> p, std::size_t size);

// Explicit prefix -> distribution table with a fallback vector.
class TableModel final : public SequenceModel {
 public:
  TableModel(Vocabulary vocab, int max_length, Distribution fallback);

  // Throws InvalidDistribution.
  void set(TokenSeq prefix, Distribution p);

  const std::map<TokenSeq, Distribution>& entries() const noexcept {
    return entries_;
  }
  const Distribution& fallback() const noexcept { return fallback_; }

 protected:
  Distribution raw_distribution(std::span<const Token> prefix) const override;

 private:
  std::map<TokenSeq, Distribution> entries_;
  Distribution fallback_;
};

// Every token equally likely at every position.
class UniformModel final : public SequenceModel {
 public:
  UniformModel(Vocabulary vocab, int max_length);

 protected:
  Distribution raw_distribution(std::span<const Token> prefix) const override;
};

// Additively smoothed n-gram model:
//   P(t | ctx) = (count(ctx, t) + alpha) / (total(ctx) + alpha * V)
// where ctx is the last order-1 tokens of the prefix (shorter at the start of
// a sequence, which keeps sentence-initial statistics separate).
class NGramModel final : public SequenceModel {
 public:
  struct ContextCounts {
    std::vector<std::uint64_t> counts;  // per token id
    std::uint64_t total = 0;
  };

  NGramModel(Vocabulary vocab, int max_length, int order, double alpha);

  int order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }

  void add_count(const TokenSeq& context, Token next, std::uint64_t count);
  std::uint64_t count(const TokenSeq& context, Token next) const;
  std::uint64_t total(const TokenSeq& context) const;
  const std::map<TokenSeq, ContextCounts>& table() const noexcept {
    return table_;
  }

  // Text format:
  //   #prio-ngram
  //   order=<n>
  //   alpha=<a>
  //   max_length=<m>
  //   vocab=<path>          (informational; resolved by the caller)
  //   ---
  //   <context surfaces, space separated>\t<token surface>\t<count>
  void Save(std::ostream& out, const std::string& vocab_ref) const;
  void Save(const std::filesystem::path& path, const std::string& vocab_ref) const;
  static NGramModel Load(std::istream& in, const Vocabulary& vocab);
  static NGramModel Load(const std::filesystem::path& path,
                         const Vocabulary& vocab);

 protected:
  Distribution raw_distribution(std::span<const Token> prefix) const override;

 private:
  TokenSeq context_of(std::span<const Token> prefix) const;

  int order_;
  double alpha_;
  std::map<TokenSeq, ContextCounts> table_;
};

// Counts every (context, next) pair of every sequence, including the EOS
// transition when the sequence ends with EOS.
// Throws EmptyCorpus; BadOrder when order < 1 or alpha <= 0.
NGramModel train_ngram(std::span<const TokenSeq> corpus, const Vocabulary& vocab,
                       int order, double alpha, int max_length);

// One whitespace-tokenized sequence per line; EOS is appended to each line
// that does not already end with it. Blank lines are skipped.
std::vector<TokenSeq> LoadCorpus(std::istream& in, const Vocabulary& vocab);
std::vector<TokenSeq> LoadCorpus(const std::filesystem::path& path,
                                 const Vocabulary& vocab);

}  // namespace prio
