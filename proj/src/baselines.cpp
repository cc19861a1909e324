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

#include "prio/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prio/error.hpp"

namespace prio {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

bool Better(const Candidate& a, const Candidate& b) {
  if (a.prob != b.prob) return a.prob > b.prob;
  return a.token.id < b.token.id;
}

void Normalize(std::vector<Candidate>& c) {
  double sum = 0.0;
  for (const auto& x : c) sum += x.prob;
  for (auto& x : c) x.prob /= sum;
}

// Allowed, positive-probability tokens in id order with raw model
// probabilities. Stochastic paths renormalize via ApplyTemperature.
std::vector<Candidate> MaskedCandidates(std::span<const double> dist,
                                        const Guide* guide, Guide::State state) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const Token t{static_cast<std::int32_t>(i)};
    if (!(dist[i] > 0.0)) continue;
    if (guide != nullptr && !guide->allows(state, t)) continue;
    out.push_back({dist[i], t});
  }
  if (out.empty()) {
    throw NoAllowedToken(guide != nullptr
                             ? "no token allowed by /" + guide->pattern() +
                                   "/ has positive probability"
                             : "distribution has no positive entry");
  }
  return out;
}

Candidate Draw(const std::vector<Candidate>& c, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (const auto& x : c) {
    cum += x.prob;
    if (u < cum) return x;
  }
  return c.back();
}

double GeometricMean(std::span<const double> probs) {
  if (probs.empty()) return 1.0;
  double log_sum = 0.0;
  for (double p : probs) log_sum += std::log(p);
  return std::exp(log_sum / static_cast<double>(probs.size()));
}

void CheckVocab(const SequenceModel& model, const Guide* g) {
  if (g != nullptr && g->vocab() != model.vocab()) {
    throw InvalidConfig("guide /" + g->pattern() +
                        "/ was compiled for a different vocabulary");
  }
}

// Decodes one sequence, choosing each token from the masked
// candidates with `pick`.
template <typename Pick>
SampleRecord DecodeOne(const SequenceModel& model, const Guide* guide,
                       const Guide* validator, Pick&& pick) {
  SampleRecord record;
  std::vector<double> chosen_probs;
  Guide::State state = guide != nullptr ? guide->initial() : 0;
  const Vocabulary& vocab = model.vocab();
  while (true) {
    const Distribution dist = model.next_distribution(record.tokens);
    ++record.new_inferences;
    std::vector<Candidate> candidates = MaskedCandidates(dist, guide, state);
    const Token t = pick(std::move(candidates));
    chosen_probs.push_back(dist[static_cast<std::size_t>(t.id)]);
    record.tokens.push_back(t);
    if (guide != nullptr) state = guide->step(state, t);
    if (vocab.is_eos(t)) break;
  }
  const Guide* check = guide != nullptr ? guide : validator;
  record.regex_valid = check == nullptr || check->matches(record.tokens);
  record.branch_score = GeometricMean(chosen_probs);
  return record;
}

Token Argmax(const std::vector<Candidate>& c) {
  return std::min_element(c.begin(), c.end(), Better)->token;
}

}  // namespace

std::uint64_t RngStream::next() {
  ++counter_;
  std::uint64_t z = seed_ + counter_ * kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngStream::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw InvalidConfig("RngStream::below requires n >= 1");
  const auto r = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return std::min(r, n - 1);
}

void NucleusConfig::Validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw InvalidConfig("top_p must be in (0, 1], got " + std::to_string(top_p));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidConfig("temperature must be > 0, got " + std::to_string(temperature));
  }
  if (num_samples < 0) throw InvalidConfig("num_samples must be >= 0");
}

std::vector<Candidate> ApplyTemperature(std::vector<Candidate> candidates,
                                        double temperature) {
  if (candidates.empty()) return candidates;
  double max_log = -INFINITY;
  for (const auto& c : candidates) max_log = std::max(max_log, std::log(c.prob));
  for (auto& c : candidates) {
    c.prob = std::exp((std::log(c.prob) - max_log) / temperature);
  }
  Normalize(candidates);
  return candidates;
}

namespace {

std::vector<Candidate> NucleusCut(std::vector<Candidate> c, double top_p,
                                  double temperature) {
  c = ApplyTemperature(std::move(c), temperature);
  std::sort(c.begin(), c.end(), Better);
  double cum = 0.0;
  std::size_t keep = 0;
  while (keep < c.size()) {
    cum += c[keep].prob;
    ++keep;
    if (cum + 1e-12 >= top_p) break;
  }
  c.resize(keep);
  Normalize(c);
  return c;
}

}  // namespace

std::vector<Candidate> NucleusFilter(std::span<const double> distribution,
                                     double top_p, double temperature) {
  std::vector<Candidate> c;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    if (distribution[i] > 0.0) {
      c.push_back({distribution[i], Token{static_cast<std::int32_t>(i)}});
    }
  }
  if (c.empty()) throw NoAllowedToken("distribution has no positive entry");
  return NucleusCut(std::move(c), top_p, temperature);
}

SampleRecord greedy_decode(const SequenceModel& model, const Guide* guide) {
  CheckVocab(model, guide);
  SampleRecord r = DecodeOne(model, guide, nullptr,
                             [](std::vector<Candidate> c) { return Argmax(c); });
  r.branch_score = 1.0;
  return r;
}

SampleSet nucleus_sample(const SequenceModel& model, const NucleusConfig& config,
                         const Guide* guide, const Guide* validator) {
  config.Validate();
  CheckVocab(model, guide);
  CheckVocab(model, validator);
  RngStream rng(config.seed);
  const bool greedy = config.temperature < kGreedyTemperature;
  SampleSet out;
  for (int i = 0; i < config.num_samples; ++i) {
    SampleRecord r = DecodeOne(model, guide, validator, [&](std::vector<Candidate> c) {
      if (greedy) return Argmax(c);
      return Draw(NucleusCut(std::move(c), config.top_p, config.temperature), rng).token;
    });
    r.order = i;
    out.records.push_back(std::move(r));
  }
  return out;
}

SampleSet topk_sample(const SequenceModel& model, int k, double temperature,
                      std::uint64_t seed, int num_samples, const Guide* guide,
                      const Guide* validator) {
  if (k < 1) throw InvalidConfig("k must be >= 1");
  if (!(temperature > 0.0)) throw InvalidConfig("temperature must be > 0");
  CheckVocab(model, guide);
  CheckVocab(model, validator);
  RngStream rng(seed);
  const bool greedy = temperature < kGreedyTemperature;
  SampleSet out;
  for (int i = 0; i < num_samples; ++i) {
    SampleRecord r = DecodeOne(model, guide, validator, [&](std::vector<Candidate> c) {
      if (greedy) return Argmax(c);
      std::sort(c.begin(), c.end(), Better);
      if (c.size() > static_cast<std::size_t>(k)) c.resize(static_cast<std::size_t>(k));
      return Draw(ApplyTemperature(std::move(c), temperature), rng).token;
    });
    r.order = i;
    out.records.push_back(std::move(r));
  }
  return out;
}

SampleSet random_flag_sample(const Vocabulary& flag_vocab, int max_flags,
                             std::uint64_t seed, int num_samples,
                             const Guide* validator) {
  if (max_flags < 1) throw InvalidConfig("max_flags must be >= 1");
  std::vector<Token> flags;
  for (std::size_t i = 0; i < flag_vocab.size(); ++i) {
    const Token t{static_cast<std::int32_t>(i)};
    if (!flag_vocab.is_eos(t)) flags.push_back(t);
  }
  if (flags.empty()) throw InvalidConfig("flag vocabulary has no non-EOS token");
  RngStream rng(seed);
  SampleSet out;
  for (int i = 0; i < num_samples; ++i) {
    SampleRecord r;
    const auto length = 1 + rng.below(static_cast<std::uint64_t>(max_flags));
    for (std::uint64_t j = 0; j < length; ++j) {
      r.tokens.push_back(flags[rng.below(flags.size())]);
    }
    r.tokens.push_back(flag_vocab.eos());
    r.order = i;
    r.new_inferences = 0;
    r.branch_score = 0.0;
    r.regex_valid = validator == nullptr || validator->matches(r.tokens);
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace prio
