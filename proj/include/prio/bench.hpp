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
#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prio/guide.hpp"
#include "prio/model.hpp"
#include "prio/sampler.hpp"
#include "prio/vocab.hpp"

namespace prio::bench {

// Scores a sequence of valid flags (no EOS) as percent improvement over the
// default action. An empty sequence scores 0.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double Score(std::span<const Token> flags) const = 0;
};

// Order-sensitive synthetic stand-in for a compiler's code-size measurement.
//
// Every pass has a per-program gain; applying a pass again yields
// gain * decay^(times already applied). Each ordered pair (a before b) that
// occurs in the sequence adds its synergy weight once. The sum is scaled by a
// per-program sensitivity and squashed into (-bound, bound) with tanh.
//
// Pass gains and pair weights come from a fixed "compiler" stream shared by
// every task with the same flag count; the program seed perturbs gains and
// sensitivity, so tasks are related but not identical.
class SyntheticScorer final : public Scorer {
 public:
  SyntheticScorer(std::uint64_t program_seed, int num_flags);

  double Score(std::span<const Token> flags) const override;

  int num_flags() const noexcept { return num_flags_; }
  double gain(int flag) const { return gains_.at(static_cast<std::size_t>(flag)); }
  double synergy(int before, int after) const {
    return synergy_.at(static_cast<std::size_t>(before * num_flags_ + after));
  }
  double sensitivity() const noexcept { return sensitivity_; }

  static constexpr double kDecay = 0.5;
  static constexpr double kBound = 25.0;

 private:
  int num_flags_;
  double sensitivity_;
  std::vector<double> gains_;
  std::vector<double> synergy_;
};

// Line protocol subprocess: writes one space-separated flag sequence per line
// to the command's stdin and reads one decimal score per line from its stdout.
// Calls are serialized.
class ExternalScorer final : public Scorer {
 public:
  ExternalScorer(std::string command, Vocabulary flag_vocab);
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  // Throws IoError when the process fails or replies with a non-number.
  double Score(std::span<const Token> flags) const override;

 private:
  std::string command_;
  Vocabulary vocab_;
  mutable std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
};

struct PassTask {
  std::uint64_t seed = 0;
  Vocabulary flag_vocab;
  int max_flags = 1;
  double baseline_score = 0.0;
  std::shared_ptr<const Scorer> scorer;

  // Drops EOS and anything that is not a flag of flag_vocab; an empty result
  // scores baseline_score.
  double Score(std::span<const Token> tokens) const;
  double ScoreText(std::string_view text) const;
};

// Pass names (LLVM-flavoured, then -pass-<i>) followed by the EOS token.
Vocabulary FlagVocabulary(int num_flags);

// `(f1|f2|...)( (f1|f2|...))*` over the non-EOS surfaces.
std::string FlagRegex(const Vocabulary& flag_vocab);

// Throws InvalidConfig when num_flags < 2 or max_flags < 1.
PassTask make_task(std::uint64_t seed, int num_flags, int max_flags);

struct AutotuneResult {
  TokenSeq best_sequence;  // EOS-terminated
  double best_score = 0.0;
};

// Best of `budget` random flag sequences (random_flag_sample under `seed`);
// the first one wins ties.
AutotuneResult autotune(const PassTask& task, int budget, std::uint64_t seed);

// Seed used for a task's autotuning run.
std::uint64_t AutotuneSeed(const PassTask& task);

// One autotuned best sequence per task. Throws InvalidConfig on no tasks.
std::vector<TokenSeq> build_training_corpus(std::span<const PassTask> tasks,
                                            int budget);
void WriteCorpus(const std::filesystem::path& path,
                 std::span<const TokenSeq> corpus, const Vocabulary& vocab);

enum class MethodKind { kGreedy, kRandom, kAutotuner, kPriority, kNucleus, kTopK };

struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::kGreedy;
  bool guided = true;
  PriorityMetric metric = PriorityMetric::kLastTokenProb;
  std::optional<int> max_branch;
  double temperature = 1.0;
  int k = 5;
  InvalidPolicy invalid_policy = InvalidPolicy::kFallback;
};

// Grammar: <base>[-<option>]*. Bases: greedy, random, autotuner, ps, psg
// (geometric-mean priority), nucleus-<temperature>, topk-<k>. Options:
// noregex / regex (toggle the guide; ps, psg and greedy are guided by
// default, nucleus and topk are not), mb<N> (max branch), reject (ignore
// invalid samples instead of scoring them as the default action).
// Throws InvalidConfig.
MethodSpec ParseMethod(const std::string& name);
std::vector<MethodSpec> ParseMethods(const std::string& comma_list);
std::string DefaultMethods();

struct BenchConfig {
  std::vector<int> budgets{1, 3, 5, 10, 30, 100};
  double top_p = 0.95;
  std::uint64_t seed = 1;
  int autotune_budget = 2000;
  int jobs = 1;
  bool timing = true;
};

struct BenchRecord {
  std::string method;
  int n = 0;
  double mean_best = 0.0;  // percent improvement over the default action
  double mean_unique_raw = 0.0;
  double mean_unique_valid = 0.0;
  double wall_ms = 0.0;
};

struct Evaluation {
  std::vector<BenchRecord> records;
  // method -> task -> best-so-far score after 1..max(budgets) samples.
  std::map<std::string, std::vector<std::vector<double>>> curves;
};

// Runs every method on every task and averages best-of-n and unique-sample
// counts over tasks. Guided methods use `guide`; unguided ones are checked
// against it and handle invalid samples per their InvalidPolicy. Tasks fan out
// over config.jobs threads; results do not depend on the job count.
Evaluation evaluate(std::span<const MethodSpec> methods,
                    std::span<const PassTask> tasks, const SequenceModel& model,
                    std::shared_ptr<const Guide> guide, const BenchConfig& config);

// A benchmark suite: held-out evaluation tasks plus an n-gram model trained on
// autotuner labels of a disjoint set of training tasks. Evaluation task i has
// seed seed*100000 + i, training task j has seed seed*100000 + 50000 + j.
struct SuiteConfig {
  int tasks = 200;
  int train_tasks = 200;
  std::uint64_t seed = 1;
  int num_flags = 24;
  int max_flags = 10;
  int autotune_budget = 2000;
  int order = 2;
  double alpha = 0.1;
};

struct Suite {
  std::vector<PassTask> tasks;
  std::vector<TokenSeq> corpus;
  NGramModel model;  // max_length = max_flags + 1
  std::shared_ptr<const Guide> guide;
};

// Throws InvalidConfig for task counts outside [1, 50000).
Suite make_suite(const SuiteConfig& config);

// Columns: method,n,mean_improvement_pct,mean_unique_raw,mean_unique_valid,wall_ms
void WriteCsv(std::ostream& out, std::span<const BenchRecord> records);

// Samples `method` would score on `task`, in emission order (used by evaluate
// and the compare subcommand).
SampleSet RunMethod(const MethodSpec& method, const PassTask& task,
                    const SequenceModel& model,
                    const std::shared_ptr<const Guide>& guide,
                    const BenchConfig& config, int num_samples);

}  // namespace prio::bench
