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

#include "prio/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "prio/baselines.hpp"
#include "prio/error.hpp"

namespace prio::bench {
namespace {

// Fixed stream for the shared "compiler" structure.
constexpr std::uint64_t kCompilerSeed = 0xC0DE5123ULL;
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::array<const char*, 32> kPassNames = {
    "-mem2reg",       "-sroa",          "-instcombine",  "-simplifycfg",
    "-gvn",           "-licm",          "-loop-unroll",  "-inline",
    "-dce",           "-adce",          "-early-cse",    "-reassociate",
    "-sccp",          "-jump-threading", "-loop-rotate", "-indvars",
    "-loop-deletion", "-tailcallelim",  "-memcpyopt",    "-dse",
    "-globalopt",     "-globaldce",     "-ipsccp",       "-deadargelim",
    "-mergefunc",     "-strip",         "-correlated-propagation",
    "-loop-simplify", "-lcssa",         "-bdce",         "-loop-instsimplify",
    "-partial-inliner"};

std::uint64_t Mix(std::uint64_t a, std::uint64_t b) {
  RngStream r(a ^ (b * kGolden));
  return r.next();
}

}  // namespace

// --- SyntheticScorer --------------------------------------------------------

SyntheticScorer::SyntheticScorer(std::uint64_t program_seed, int num_flags)
    : num_flags_(num_flags) {
  const auto n = static_cast<std::size_t>(num_flags);
  RngStream compiler(kCompilerSeed + static_cast<std::uint64_t>(num_flags));
  std::vector<double> base(n);
  for (auto& g : base) {
    const double kind = compiler.uniform();
    const double size = compiler.uniform();
    // Roughly a third of the passes grow code (unrolling, inlining, ...).
    g = kind < 0.35 ? -(1.0 + 5.0 * size) : 3.0 * size;
  }
  synergy_.assign(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double kind = compiler.uniform();
      const double size = compiler.uniform();
      if (a == b) continue;
      if (kind < 0.08) {
        synergy_[a * n + b] = 1.0 + 3.0 * size;
      } else if (kind < 0.16) {
        synergy_[a * n + b] = -(1.0 + 3.0 * size);
      }
    }
  }
  RngStream program(Mix(program_seed, 0x5EED));
  sensitivity_ = 0.5 + program.uniform();
  gains_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = 0.6 + 0.8 * program.uniform();
    const double shift = program.uniform() - 0.5;
    gains_[i] = base[i] * scale + shift;
  }
}

double SyntheticScorer::Score(std::span<const Token> flags) const {
  if (flags.empty()) return 0.0;
  const auto n = static_cast<std::size_t>(num_flags_);
  std::vector<int> applied(n, 0);
  std::vector<bool> credited(n * n, false);
  std::vector<std::size_t> seen;
  double raw = 0.0;
  for (Token t : flags) {
    if (t.id < 0 || t.id >= num_flags_) {
      throw InvalidTokenId("flag id " + std::to_string(t.id) + " out of range");
    }
    const auto f = static_cast<std::size_t>(t.id);
    raw += gains_[f] * std::pow(kDecay, applied[f]);
    for (std::size_t before : seen) {
      if (before == f || credited[before * n + f]) continue;
      credited[before * n + f] = true;
      raw += synergy_[before * n + f];
    }
    if (applied[f]++ == 0) seen.push_back(f);
  }
  return kBound * std::tanh(sensitivity_ * raw / kBound);
}

// --- PassTask ---------------------------------------------------------------

double PassTask::Score(std::span<const Token> tokens) const {
  TokenSeq flags;
  for (Token t : tokens) {
    if (flag_vocab.contains(t) && !flag_vocab.is_eos(t)) flags.push_back(t);
  }
  if (flags.empty()) return baseline_score;
  return scorer->Score(flags);
}

double PassTask::ScoreText(std::string_view text) const {
  TokenSeq flags;
  std::istringstream words{std::string(text)};
  std::string w;
  while (words >> w) {
    if (!flag_vocab.has_surface(w)) continue;
    const Token t = flag_vocab.lookup(w);
    if (!flag_vocab.is_eos(t)) flags.push_back(t);
  }
  return Score(flags);
}

Vocabulary FlagVocabulary(int num_flags) {
  if (num_flags < 2) throw InvalidConfig("num_flags must be >= 2");
  std::vector<std::string> surfaces;
  for (int i = 0; i < num_flags; ++i) {
    surfaces.emplace_back(static_cast<std::size_t>(i) < kPassNames.size()
                              ? std::string(kPassNames[static_cast<std::size_t>(i)])
                              : "-pass-" + std::to_string(i));
  }
  surfaces.emplace_back("<eos>");
  return Vocabulary::WithTrailingEos(std::move(surfaces));
}

std::string FlagRegex(const Vocabulary& flag_vocab) {
  std::string alternatives;
  for (std::size_t i = 0; i < flag_vocab.size(); ++i) {
    const Token t{static_cast<std::int32_t>(i)};
    if (flag_vocab.is_eos(t)) continue;
    if (!alternatives.empty()) alternatives += '|';
    alternatives += RegexEscape(flag_vocab.surface(t));
  }
  const std::string group = "(" + alternatives + ")";
  return group + "( " + group + ")*";
}

PassTask make_task(std::uint64_t seed, int num_flags, int max_flags) {
  if (max_flags < 1) throw InvalidConfig("max_flags must be >= 1");
  return PassTask{seed, FlagVocabulary(num_flags), max_flags, 0.0,
                  std::make_shared<SyntheticScorer>(seed, num_flags)};
}

// --- Autotuning ---------------------------------------------------------------

std::uint64_t AutotuneSeed(const PassTask& task) { return Mix(task.seed, 0xA070); }

AutotuneResult autotune(const PassTask& task, int budget, std::uint64_t seed) {
  if (budget < 1) throw InvalidConfig("autotune budget must be >= 1");
  const SampleSet candidates =
      random_flag_sample(task.flag_vocab, task.max_flags, seed, budget);
  AutotuneResult best;
  bool first = true;
  for (const auto& r : candidates.records) {
    const double s = task.Score(r.tokens);
    if (first || s > best.best_score) {
      best.best_score = s;
      best.best_sequence = r.tokens;
      first = false;
    }
  }
  return best;
}

std::vector<TokenSeq> build_training_corpus(std::span<const PassTask> tasks,
                                            int budget) {
  if (tasks.empty()) throw InvalidConfig("no tasks to label");
  std::vector<TokenSeq> corpus;
  corpus.reserve(tasks.size());
  for (const auto& task : tasks) {
    corpus.push_back(autotune(task, budget, AutotuneSeed(task)).best_sequence);
  }
  return corpus;
}

void WriteCorpus(const std::filesystem::path& path,
                 std::span<const TokenSeq> corpus, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  for (const auto& seq : corpus) out << detokenize(seq, vocab) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

// --- Suites -----------------------------------------------------------------

Suite make_suite(const SuiteConfig& config) {
  for (int n : {config.tasks, config.train_tasks}) {
    if (n < 1 || n >= 50000) throw InvalidConfig("task counts must be in [1, 50000)");
  }
  const std::uint64_t base = config.seed * 100000;
  std::vector<PassTask> train;
  for (int j = 0; j < config.train_tasks; ++j) {
    train.push_back(make_task(base + 50000 + static_cast<std::uint64_t>(j),
                              config.num_flags, config.max_flags));
  }
  std::vector<PassTask> tasks;
  for (int i = 0; i < config.tasks; ++i) {
    tasks.push_back(make_task(base + static_cast<std::uint64_t>(i), config.num_flags,
                              config.max_flags));
  }
  const Vocabulary& vocab = tasks.front().flag_vocab;
  std::vector<TokenSeq> corpus = build_training_corpus(train, config.autotune_budget);
  NGramModel model =
      train_ngram(corpus, vocab, config.order, config.alpha, config.max_flags + 1);
  auto guide = std::make_shared<const Guide>(Guide::Compile(FlagRegex(vocab), vocab));
  return Suite{std::move(tasks), std::move(corpus), std::move(model), std::move(guide)};
}

// --- Methods ----------------------------------------------------------------

MethodSpec ParseMethod(const std::string& name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dash = name.find('-', start);
    parts.push_back(name.substr(start, dash - start));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  MethodSpec spec;
  spec.name = name;
  const std::string& base = parts[0];
  std::size_t next = 1;
  auto numeric = [&](const char* what) -> double {
    if (next >= parts.size()) {
      throw InvalidConfig("method '" + name + "' needs a " + what);
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[next], &used);
      if (used != parts[next].size()) throw std::invalid_argument(parts[next]);
      ++next;
      return v;
    } catch (const std::exception&) {
      throw InvalidConfig("method '" + name + "': bad " + what + " '" +
                          parts[next] + "'");
    }
  };
  if (base == "greedy") {
    spec.kind = MethodKind::kGreedy;
  } else if (base == "random") {
    spec.kind = MethodKind::kRandom;
  } else if (base == "autotuner") {
    spec.kind = MethodKind::kAutotuner;
  } else if (base == "ps" || base == "psg") {
    spec.kind = MethodKind::kPriority;
    spec.metric = base == "psg" ? PriorityMetric::kGeometricMean
                                : PriorityMetric::kLastTokenProb;
  } else if (base == "nucleus") {
    spec.kind = MethodKind::kNucleus;
    spec.guided = false;
    spec.temperature = numeric("temperature");
    if (!(spec.temperature > 0.0)) {
      throw InvalidConfig("method '" + name + "': temperature must be > 0");
    }
  } else if (base == "topk") {
    spec.kind = MethodKind::kTopK;
    spec.guided = false;
    const double k = numeric("k");
    if (k < 1 || k != std::floor(k)) {
      throw InvalidConfig("method '" + name + "': k must be a positive integer");
    }
    spec.k = static_cast<int>(k);
  } else {
    throw InvalidConfig("unknown method '" + name + "'");
  }
  for (; next < parts.size(); ++next) {
    const std::string& opt = parts[next];
    if (opt == "noregex") {
      spec.guided = false;
    } else if (opt == "regex") {
      spec.guided = true;
    } else if (opt == "reject") {
      spec.invalid_policy = InvalidPolicy::kReject;
    } else if (opt.starts_with("mb") && spec.kind == MethodKind::kPriority) {
      try {
        const int mb = std::stoi(opt.substr(2));
        if (mb < 1) throw std::invalid_argument(opt);
        spec.max_branch = mb;
      } catch (const std::exception&) {
        throw InvalidConfig("method '" + name + "': bad max branch '" + opt + "'");
      }
    } else {
      throw InvalidConfig("method '" + name + "': unknown option '" + opt + "'");
    }
  }
  return spec;
}

std::vector<MethodSpec> ParseMethods(const std::string& comma_list) {
  std::vector<MethodSpec> out;
  std::stringstream in(comma_list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(ParseMethod(item));
  }
  if (out.empty()) throw InvalidConfig("no methods given");
  return out;
}

std::string DefaultMethods() {
  return "random,greedy,nucleus-0.2,nucleus-0.4,nucleus-0.6,nucleus-0.8,"
         "nucleus-1.0,nucleus-1.2,nucleus-1.4,nucleus-1.6,autotuner,ps,"
         "ps-noregex,ps-mb3,ps-mb5,psg,psg-mb3,psg-mb5";
}

SampleSet RunMethod(const MethodSpec& method, const PassTask& task,
                    const SequenceModel& model,
                    const std::shared_ptr<const Guide>& guide,
                    const BenchConfig& config, int num_samples) {
  const Guide* constrain = method.guided ? guide.get() : nullptr;
  const Guide* validator = guide.get();
  const std::uint64_t seed = Mix(config.seed, task.seed);
  switch (method.kind) {
    case MethodKind::kGreedy: {
      SampleSet s;
      s.records.push_back(greedy_decode(model, constrain));
      auto& r = s.records.back();
      r.regex_valid = validator == nullptr || validator->matches(r.tokens);
      return s;
    }
    case MethodKind::kRandom:
      return random_flag_sample(task.flag_vocab, task.max_flags, seed, num_samples,
                                validator);
    case MethodKind::kAutotuner: {
      SampleSet s;
      SampleRecord r;
      r.tokens = autotune(task, config.autotune_budget, AutotuneSeed(task)).best_sequence;
      r.regex_valid = validator == nullptr || validator->matches(r.tokens);
      s.records.push_back(std::move(r));
      return s;
    }
    case MethodKind::kPriority: {
      SamplerConfig sc;
      sc.num_samples = num_samples;
      sc.metric = method.metric;
      sc.max_branch = method.max_branch;
      sc.invalid_policy = method.invalid_policy;
      if (method.guided) {
        sc.guide = guide;
      } else {
        sc.validator = guide;
      }
      return priority_sample(model, sc);
    }
    case MethodKind::kNucleus: {
      NucleusConfig nc;
      nc.top_p = config.top_p;
      nc.temperature = method.temperature;
      nc.seed = seed;
      nc.num_samples = num_samples;
      return nucleus_sample(model, nc, constrain, validator);
    }
    case MethodKind::kTopK:
      return topk_sample(model, method.k, method.temperature, seed, num_samples,
                         constrain, validator);
  }
  throw InvalidConfig("unhandled method kind");
}

// --- Evaluation -------------------------------------------------------------

namespace {

struct TaskOutcome {
  std::vector<double> best_so_far;  // index n-1
  std::vector<int> unique_raw;      // per budget
  std::vector<int> unique_valid;
};

TaskOutcome ScoreTask(const MethodSpec& method, const PassTask& task,
                      const SequenceModel& model,
                      const std::shared_ptr<const Guide>& guide,
                      const BenchConfig& config, int max_n) {
  const SampleSet set = RunMethod(method, task, model, guide, config, max_n);
  TaskOutcome out;
  out.best_so_far.assign(static_cast<std::size_t>(max_n), 0.0);
  bool any = false;
  double best = 0.0;
  std::vector<std::string> texts;
  std::vector<bool> valid;
  for (int i = 0; i < max_n; ++i) {
    if (static_cast<std::size_t>(i) < set.records.size()) {
      const SampleRecord& r = set.records[static_cast<std::size_t>(i)];
      texts.push_back(detokenize(r.tokens, task.flag_vocab));
      valid.push_back(r.regex_valid);
      const bool counted =
          r.regex_valid || method.invalid_policy == InvalidPolicy::kFallback;
      if (counted) {
        const double s = task.Score(r.tokens);
        if (!any || s > best) best = s;
        any = true;
      }
    }
    out.best_so_far[static_cast<std::size_t>(i)] = any ? best : task.baseline_score;
  }
  for (int n : config.budgets) {
    std::set<std::string> raw;
    std::set<std::string> ok;
    const std::size_t m = std::min(static_cast<std::size_t>(n), texts.size());
    for (std::size_t i = 0; i < m; ++i) {
      raw.insert(texts[i]);
      if (valid[i]) ok.insert(texts[i]);
    }
    out.unique_raw.push_back(static_cast<int>(raw.size()));
    out.unique_valid.push_back(static_cast<int>(ok.size()));
  }
  return out;
}

}  // namespace

Evaluation evaluate(std::span<const MethodSpec> methods,
                    std::span<const PassTask> tasks, const SequenceModel& model,
                    std::shared_ptr<const Guide> guide, const BenchConfig& config) {
  if (tasks.empty()) throw InvalidConfig("no tasks to evaluate");
  if (config.budgets.empty()) throw InvalidConfig("empty budget list");
  for (int n : config.budgets) {
    if (n < 1) throw InvalidConfig("budgets must be >= 1");
  }
  const int max_n = *std::max_element(config.budgets.begin(), config.budgets.end());
  const int jobs = std::max(1, config.jobs);

  Evaluation eval;
  for (const MethodSpec& method : methods) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TaskOutcome> outcomes(tasks.size());
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    {
      std::vector<std::jthread> workers;
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (std::size_t i = static_cast<std::size_t>(w); i < tasks.size();
                 i += static_cast<std::size_t>(jobs)) {
              outcomes[i] = ScoreTask(method, tasks[i], model, guide, config, max_n);
            }
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    const double wall_ms =
        config.timing ? std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count()
                      : 0.0;

    auto& curves = eval.curves[method.name];
    for (auto& o : outcomes) curves.push_back(o.best_so_far);
    const double count = static_cast<double>(tasks.size());
    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      const int n = config.budgets[b];
      BenchRecord rec;
      rec.method = method.name;
      rec.n = n;
      rec.wall_ms = wall_ms;
      for (const auto& o : outcomes) {
        rec.mean_best += o.best_so_far[static_cast<std::size_t>(n - 1)];
        rec.mean_unique_raw += o.unique_raw[b];
        rec.mean_unique_valid += o.unique_valid[b];
      }
      rec.mean_best /= count;
      rec.mean_unique_raw /= count;
      rec.mean_unique_valid /= count;
      eval.records.push_back(rec);
    }
  }
  return eval;
}

void WriteCsv(std::ostream& out, std::span<const BenchRecord> records) {
  out << "method,n,mean_improvement_pct,mean_unique_raw,mean_unique_valid,wall_ms\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%.4f,%.1f\n", r.method.c_str(),
                  r.n, r.mean_best, r.mean_unique_raw, r.mean_unique_valid,
                  r.wall_ms);
    out << buf;
  }
}

}  // namespace prio::bench
