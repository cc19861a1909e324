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

#include "prio/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "prio/error.hpp"

namespace prio {
namespace {

// Candidates in rank order; empty when the mask leaves nothing.
std::vector<Candidate> TopAllowed(std::span<const double> distribution,
                                  const Guide* guide, Guide::State state,
                                  std::size_t k) {
  std::vector<Candidate> pool;
  pool.reserve(distribution.size());
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    const Token t{static_cast<std::int32_t>(i)};
    if (!(distribution[i] > 0.0)) continue;
    if (guide != nullptr && !guide->allows(state, t)) continue;
    pool.push_back({distribution[i], t});
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.token.id < b.token.id;
  };
  const std::size_t keep = std::min(k, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep),
                    pool.end(), better);
  pool.resize(keep);
  return pool;
}

double BranchScore(PriorityMetric metric, std::span<const double> probs) {
  if (metric == PriorityMetric::kLastTokenProb) return probs.back();
  double log_sum = 0.0;
  for (double p : probs) log_sum += std::log(p);
  return std::exp(log_sum / static_cast<double>(probs.size()));
}

}  // namespace

void SamplerConfig::Validate() const {
  if (num_samples < 1) throw InvalidConfig("num_samples must be >= 1");
  if (effective_top_k() < 1) throw InvalidConfig("top_k must be >= 1");
  if (max_branch && *max_branch < 1) throw InvalidConfig("max_branch must be >= 1");
  if (effective_queue_capacity() < 1) {
    throw InvalidConfig("queue_capacity must be >= 1");
  }
}

std::vector<Candidate> choose_best_tokens(std::span<const double> distribution,
                                          const Guide* guide,
                                          std::optional<Guide::State> state,
                                          int k) {
  if (k < 1) throw InvalidConfig("k must be >= 1");
  if (guide != nullptr && !state) {
    throw InvalidConfig("a guide state is required with a guide");
  }
  auto best = TopAllowed(distribution, guide, state.value_or(0),
                         static_cast<std::size_t>(k));
  if (best.empty()) {
    throw NoAllowedToken(guide != nullptr
                             ? "no token allowed by /" + guide->pattern() +
                                   "/ in state " + std::to_string(*state) +
                                   " has positive probability"
                             : "distribution has no positive entry");
  }
  return best;
}

namespace detail {

BranchQueue::BranchQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidConfig("queue capacity must be >= 1");
}

bool BranchQueue::push(double score, TokenSeq prefix, std::vector<double> probs) {
  QueueEntry entry{score, next_seq_++, std::move(prefix), std::move(probs)};
  if (entries_.size() == capacity_) {
    auto worst = std::prev(entries_.end());
    if (!Ranks(entry, *worst)) return false;
    entries_.erase(worst);
  }
  entries_.insert(std::move(entry));
  return true;
}

QueueEntry BranchQueue::pop() {
  auto node = entries_.extract(entries_.begin());
  return std::move(node.value());
}

std::vector<QueueEntry> BranchQueue::snapshot() const {
  return {entries_.begin(), entries_.end()};
}

}  // namespace detail

SampleSet priority_sample(const SequenceModel& model, const SamplerConfig& config) {
  config.Validate();
  const Guide* guide = config.guide.get();
  const Guide* validator = guide != nullptr ? guide : config.validator.get();
  for (const Guide* g : {guide, validator}) {
    if (g != nullptr && g->vocab() != model.vocab()) {
      throw InvalidConfig("guide /" + g->pattern() +
                          "/ was compiled for a different vocabulary");
    }
  }
  if (guide != nullptr && guide->empty()) {
    throw EmptyLanguage("regex /" + guide->pattern() +
                        "/ admits no token sequence over this vocabulary");
  }

  const auto top_k = static_cast<std::size_t>(config.effective_top_k());
  const std::size_t max_alternatives =
      std::min(top_k - 1, config.max_branch
                              ? static_cast<std::size_t>(*config.max_branch - 1)
                              : top_k - 1);
  const Vocabulary& vocab = model.vocab();

  detail::BranchQueue queue(
      static_cast<std::size_t>(config.effective_queue_capacity()));
  SampleSet out;

  // The first sample has an empty mask and branch score 1.
  detail::QueueEntry mask;
  mask.score = 1.0;

  while (true) {
    TokenSeq generated;
    std::vector<double> probs;
    Guide::State state = guide != nullptr ? guide->initial() : 0;
    int inferences = 0;
    bool dead_end = false;

    for (std::size_t pos = 0;; ++pos) {
      Token next;
      double next_prob = 0.0;
      if (pos < mask.prefix.size()) {
        next = mask.prefix[pos];
        next_prob = mask.probs[pos];
      } else {
        const Distribution dist = model.next_distribution(generated);
        ++inferences;
        std::vector<Candidate> best = TopAllowed(dist, guide, state, top_k);
        if (best.empty()) {
          dead_end = true;
          break;
        }
        next = best[0].token;
        next_prob = best[0].prob;
        const std::size_t alternatives = std::min(best.size() - 1, max_alternatives);
        for (std::size_t i = 1; i <= alternatives; ++i) {
          TokenSeq branch = generated;
          branch.push_back(best[i].token);
          std::vector<double> branch_probs = probs;
          branch_probs.push_back(best[i].prob);
          const double score = BranchScore(config.metric, branch_probs);
          queue.push(score, std::move(branch), std::move(branch_probs));
        }
      }
      generated.push_back(next);
      probs.push_back(next_prob);
      if (guide != nullptr) state = guide->step(state, next);
      if (vocab.is_eos(next)) break;
    }

    if (dead_end) {
      out.abandoned_inferences += inferences;
      ++out.abandoned_branches;
    } else {
      SampleRecord record;
      record.regex_valid = validator == nullptr || validator->matches(generated);
      record.tokens = std::move(generated);
      record.branch_score = mask.score;
      record.order = static_cast<int>(out.records.size());
      record.new_inferences = inferences;
      out.records.push_back(std::move(record));
    }

    if (out.records.size() == static_cast<std::size_t>(config.num_samples)) break;
    if (queue.empty()) {
      out.exhausted = true;
      break;
    }
    mask = queue.pop();
  }
  return out;
}

int count_inferences(const SampleSet& set) {
  int total = set.abandoned_inferences;
  for (const auto& r : set.records) total += r.new_inferences;
  return total;
}

}  // namespace prio
