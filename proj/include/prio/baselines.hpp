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
#include <memory>
#include <span>
#include <vector>

#include "prio/guide.hpp"
#include "prio/model.hpp"
#include "prio/sampler.hpp"
#include "prio/vocab.hpp"

namespace prio {

// SplitMix64 in counter form: the k-th output (k = 1, 2, ...) is
// mix(seed + k * 0x9E3779B97F4A7C15) with the standard SplitMix64 finalizer.
// uniform() takes the top 53 bits times 2^-53; below(n) is floor(uniform() * n).
// Fully specified so other implementations can reproduce streams exactly.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next();
  double uniform();                       // [0, 1)
  std::uint64_t below(std::uint64_t n);   // [0, n), n >= 1

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Temperatures below this are treated as greedy decoding.
inline constexpr double kGreedyTemperature = 1e-6;

struct NucleusConfig {
  double top_p = 0.95;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int num_samples = 1;

  // Throws InvalidConfig unless top_p in (0, 1], temperature > 0,
  // num_samples >= 0.
  void Validate() const;
};

// Renormalized p_i^(1/temperature) over the candidates (log-space).
std::vector<Candidate> ApplyTemperature(std::vector<Candidate> candidates,
                                        double temperature);

// Temperature, then the smallest descending prefix whose cumulative mass
// reaches top_p, renormalized. Zero-probability tokens are dropped first.
std::vector<Candidate> NucleusFilter(std::span<const double> distribution,
                                     double top_p, double temperature);

// Greedy decoding: the allowed token of maximum probability at every step,
// lower id on ties. Throws NoAllowedToken.
SampleRecord greedy_decode(const SequenceModel& model, const Guide* guide = nullptr);

// N independent nucleus samples; duplicates are kept. With a guide, the
// distribution is masked and renormalized over allowed tokens before the
// temperature and top-p cut. Throws NoAllowedToken.
SampleSet nucleus_sample(const SequenceModel& model, const NucleusConfig& config,
                         const Guide* guide = nullptr,
                         const Guide* validator = nullptr);

// N independent top-k samples (allowed tokens only, then temperature).
SampleSet topk_sample(const SequenceModel& model, int k, double temperature,
                      std::uint64_t seed, int num_samples,
                      const Guide* guide = nullptr,
                      const Guide* validator = nullptr);

// Model-free: n sequences of uniform length in [1, max_flags] over uniform
// non-EOS tokens, each EOS-terminated.
SampleSet random_flag_sample(const Vocabulary& flag_vocab, int max_flags,
                             std::uint64_t seed, int num_samples,
                             const Guide* validator = nullptr);

}  // namespace prio
