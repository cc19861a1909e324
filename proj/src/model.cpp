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

#include "prio/model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "prio/error.hpp"

namespace prio {

SequenceModel::SequenceModel(Vocabulary vocab, int max_length)
    : vocab_(std::move(vocab)), max_length_(max_length) {
  if (max_length_ < 1) {
    throw InvalidConfig("max_length must be positive, got " +
                        std::to_string(max_length_));
  }
}

Distribution SequenceModel::next_distribution(
    std::span<const Token> prefix) const {
  if (prefix.size() >= static_cast<std::size_t>(max_length_)) {
    throw PrefixTooLong("prefix of length " + std::to_string(prefix.size()) +
                        " reaches max_length " + std::to_string(max_length_));
  }
  for (Token t : prefix) {
    if (!vocab_.contains(t)) {
      throw InvalidTokenId("token id " + std::to_string(t.id) +
                           " in prefix is out of range");
    }
    if (vocab_.is_eos(t)) {
      throw PrefixContainsEos("prefix already contains EOS");
    }
  }
  if (prefix.size() + 1 == static_cast<std::size_t>(max_length_)) {
    Distribution forced(vocab_.size(), 0.0);
    forced[static_cast<std::size_t>(vocab_.eos().id)] = 1.0;
    return forced;
  }
  return raw_distribution(prefix);
}

void ValidateDistribution(std::span<const double> p, std::size_t size) {
  if (p.size() != size) {
    throw InvalidDistribution("distribution has " + std::to_string(p.size()) +
                              " entries, expected " + std::to_string(size));
  }
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) {
      throw InvalidDistribution("distribution has a negative or non-finite entry");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidDistribution("distribution sums to " + std::to_string(sum));
  }
}

// --- TableModel -------------------------------------------------------------

TableModel::TableModel(Vocabulary vocab, int max_length, Distribution fallback)
    : SequenceModel(std::move(vocab), max_length),
      fallback_(std::move(fallback)) {
  ValidateDistribution(fallback_, this->vocab().size());
}

void TableModel::set(TokenSeq prefix, Distribution p) {
  ValidateDistribution(p, vocab().size());
  entries_[std::move(prefix)] = std::move(p);
}

Distribution TableModel::raw_distribution(std::span<const Token> prefix) const {
  auto it = entries_.find(TokenSeq(prefix.begin(), prefix.end()));
  return it == entries_.end() ? fallback_ : it->second;
}

// --- UniformModel -----------------------------------------------------------

UniformModel::UniformModel(Vocabulary vocab, int max_length)
    : SequenceModel(std::move(vocab), max_length) {}

Distribution UniformModel::raw_distribution(std::span<const Token>) const {
  return Distribution(vocab().size(), 1.0 / static_cast<double>(vocab().size()));
}

// --- NGramModel -------------------------------------------------------------

NGramModel::NGramModel(Vocabulary vocab, int max_length, int order, double alpha)
    : SequenceModel(std::move(vocab), max_length), order_(order), alpha_(alpha) {
  if (order_ < 1) {
    throw BadOrder("n-gram order must be >= 1, got " + std::to_string(order_));
  }
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
    throw BadOrder("smoothing constant alpha must be > 0");
  }
}

TokenSeq NGramModel::context_of(std::span<const Token> prefix) const {
  const std::size_t keep =
      std::min(prefix.size(), static_cast<std::size_t>(order_ - 1));
  return TokenSeq(prefix.end() - static_cast<std::ptrdiff_t>(keep), prefix.end());
}

void NGramModel::add_count(const TokenSeq& context, Token next,
                           std::uint64_t count) {
  if (!vocab().contains(next)) {
    throw InvalidTokenId("token id " + std::to_string(next.id) + " out of range");
  }
  if (context.size() > static_cast<std::size_t>(order_ - 1)) {
    throw FormatError("context longer than order - 1");
  }
  auto& entry = table_[context];
  if (entry.counts.empty()) entry.counts.assign(vocab().size(), 0);
  entry.counts[static_cast<std::size_t>(next.id)] += count;
  entry.total += count;
}

std::uint64_t NGramModel::count(const TokenSeq& context, Token next) const {
  auto it = table_.find(context);
  if (it == table_.end() || !vocab().contains(next)) return 0;
  return it->second.counts[static_cast<std::size_t>(next.id)];
}

std::uint64_t NGramModel::total(const TokenSeq& context) const {
  auto it = table_.find(context);
  return it == table_.end() ? 0 : it->second.total;
}

Distribution NGramModel::raw_distribution(std::span<const Token> prefix) const {
  const std::size_t v = vocab().size();
  auto it = table_.find(context_of(prefix));
  if (it == table_.end()) {
    return Distribution(v, 1.0 / static_cast<double>(v));
  }
  const ContextCounts& c = it->second;
  const double denom =
      static_cast<double>(c.total) + alpha_ * static_cast<double>(v);
  Distribution p(v);
  for (std::size_t i = 0; i < v; ++i) {
    p[i] = (static_cast<double>(c.counts[i]) + alpha_) / denom;
  }
  return p;
}

void NGramModel::Save(std::ostream& out, const std::string& vocab_ref) const {
  out << "#prio-ngram\n";
  out << "order=" << order_ << '\n';
  out << "alpha=" << std::setprecision(17) << alpha_ << '\n';
  out << "max_length=" << max_length() << '\n';
  out << "vocab=" << vocab_ref << '\n';
  out << "---\n";
  for (const auto& [context, c] : table_) {
    std::string ctx = detokenize(context, vocab());
    for (std::size_t i = 0; i < c.counts.size(); ++i) {
      if (c.counts[i] == 0) continue;
      out << ctx << '\t' << vocab().surface(Token{static_cast<std::int32_t>(i)})
          << '\t' << c.counts[i] << '\n';
    }
  }
}

void NGramModel::Save(const std::filesystem::path& path,
                      const std::string& vocab_ref) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file " + path.string());
  Save(out, vocab_ref);
  if (!out) throw IoError("write failed for " + path.string());
}

NGramModel NGramModel::Load(std::istream& in, const Vocabulary& vocab) {
  std::string line;
  if (!std::getline(in, line) || line != "#prio-ngram") {
    throw FormatError("missing '#prio-ngram' header");
  }
  int order = 0;
  double alpha = 0.0;
  int max_length = 0;
  bool saw_separator = false;
  while (std::getline(in, line)) {
    if (line == "---") {
      saw_separator = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "order") {
        order = std::stoi(value);
      } else if (key == "alpha") {
        alpha = std::stod(value);
      } else if (key == "max_length") {
        max_length = std::stoi(value);
      } else if (key != "vocab") {
        throw FormatError("unknown header key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("bad value in header line '" + line + "'");
    } catch (const std::out_of_range&) {
      throw FormatError("bad value in header line '" + line + "'");
    }
  }
  if (!saw_separator) throw FormatError("missing '---' after model header");
  NGramModel model(vocab, max_length, order, alpha);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw FormatError("record " + std::to_string(line_no) +
                        " is not context<TAB>token<TAB>count");
    }
    TokenSeq context = tokenize(line.substr(0, t1), vocab);
    Token next = vocab.lookup(line.substr(t1 + 1, t2 - t1 - 1));
    std::uint64_t count = 0;
    try {
      count = std::stoull(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw FormatError("bad count in record " + std::to_string(line_no));
    }
    model.add_count(context, next, count);
  }
  return model;
}

NGramModel NGramModel::Load(const std::filesystem::path& path,
                            const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path.string());
  return Load(in, vocab);
}

NGramModel train_ngram(std::span<const TokenSeq> corpus, const Vocabulary& vocab,
                       int order, double alpha, int max_length) {
  if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
  NGramModel model(vocab, max_length, order, alpha);
  const std::size_t ctx_len = static_cast<std::size_t>(order - 1);
  for (const TokenSeq& seq : corpus) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const std::size_t start = i > ctx_len ? i - ctx_len : 0;
      TokenSeq context(seq.begin() + static_cast<std::ptrdiff_t>(start),
                       seq.begin() + static_cast<std::ptrdiff_t>(i));
      model.add_count(context, seq[i], 1);
      if (vocab.is_eos(seq[i])) break;
    }
  }
  return model;
}

std::vector<TokenSeq> LoadCorpus(std::istream& in, const Vocabulary& vocab) {
  std::vector<TokenSeq> corpus;
  std::string line;
  while (std::getline(in, line)) {
    TokenSeq seq = tokenize(line, vocab);
    if (seq.empty()) continue;
    if (!vocab.is_eos(seq.back())) seq.push_back(vocab.eos());
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

std::vector<TokenSeq> LoadCorpus(const std::filesystem::path& path,
                                 const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return LoadCorpus(in, vocab);
}

}  // namespace prio
