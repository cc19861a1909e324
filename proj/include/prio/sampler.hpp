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
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "prio/guide.hpp"
#include "prio/model.hpp"
#include "prio/vocab.hpp"

namespace prio {

enum class PriorityMetric {
  kLastTokenProb,  // probability of the branching token
  kGeometricMean,  // exp(mean log p) over every token of the branch prefix
};

enum class InvalidPolicy {
  kReject,    // invalid samples are flagged and ignored when scoring
  kFallback,  // invalid samples are scored as the benchmark's default action
};

struct Candidate {
  double prob = 0.0;
  Token token;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct SamplerConfig {
  int num_samples = 1;
  // Candidates considered per expanded position, including the greedy token.
  // Defaults to num_samples.
  std::optional<int> top_k;
  // Maximum children per tree node (greedy child included). Unset: no cap.
  std::optional<int> max_branch;
  PriorityMetric metric = PriorityMetric::kLastTokenProb;
  // Defaults to num_samples.
  std::optional<int> queue_capacity;
  // Restricts generation to the guide's language.
  std::shared_ptr<const Guide> guide;
  // Unguided runs only: marks regex_valid without constraining generation.
  std::shared_ptr<const Guide> validator;
  InvalidPolicy invalid_policy = InvalidPolicy::kReject;

  int effective_top_k() const { return top_k.value_or(num_samples); }
  int effective_queue_capacity() const {
    return queue_capacity.value_or(num_samples);
  }
  // Throws InvalidConfig.
  void Validate() const;
};

struct SampleRecord {
  TokenSeq tokens;  // ends with EOS
  double branch_score = 1.0;
  int order = 0;
  int new_inferences = 0;
  bool regex_valid = true;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SampleSet {
  std::vector<SampleRecord> records;
  bool exhausted = false;
  // Model calls spent on guided branches that dead-ended before EOS.
  int abandoned_inferences = 0;
  int abandoned_branches = 0;
};

// Top-k candidates of `distribution` in descending probability, lower token id
// first on ties. Zero-probability tokens are never candidates. With a guide,
// only tokens in guide->allowed(state) qualify (EOS only in accepting
// states). Throws NoAllowedToken when nothing qualifies.
std::vector<Candidate> choose_best_tokens(std::span<const double> distribution,
                                          const Guide* guide,
                                          std::optional<Guide::State> state,
                                          int k);

// Priority Sampling. The first sample is (guided) greedy decoding; every
// expansion offers its top-K alternatives to a bounded priority queue, and
// each following sample replays the best queued prefix without inference,
// then continues greedily from the branching token.
//
// Deterministic. Throws EmptyLanguage when the guide admits nothing, and
// InvalidConfig for bad configurations. A queue that runs dry yields fewer
// samples with exhausted = true.
SampleSet priority_sample(const SequenceModel& model, const SamplerConfig& config);

// Total model calls made for the set.
int count_inferences(const SampleSet& set);

namespace detail {

struct QueueEntry {
  double score = 0.0;
  std::uint64_t insertion_seq = 0;
  TokenSeq prefix;
  std::vector<double> probs;  // per prefix token, as first inferred
};

// Fixed-capacity max-queue ordered by (score desc, insertion_seq asc).
// A push into a full queue replaces the current minimum only when the new
// entry ranks strictly higher; otherwise the entry is dropped for good.
class BranchQueue {
 public:
  explicit BranchQueue(std::size_t capacity);

  // Returns false if the entry was dropped.
  bool push(double score, TokenSeq prefix, std::vector<double> probs);
  QueueEntry pop();

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t pushes() const noexcept { return next_seq_; }
  std::vector<QueueEntry> snapshot() const;

  // True if `a` ranks strictly higher than `b`.
  static bool Ranks(const QueueEntry& a, const QueueEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.insertion_seq < b.insertion_seq;
  }

 private:
  struct Order {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
      return Ranks(a, b);
    }
  };

  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
  std::set<QueueEntry, Order> entries_;  // best first
};

}  // namespace detail
}  // namespace prio
