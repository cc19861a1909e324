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

#include "prio/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "prio/baselines.hpp"
#include "prio/bench.hpp"
#include "prio/error.hpp"
#include "prio/guide.hpp"
#include "prio/model.hpp"
#include "prio/sampler.hpp"
#include "prio/vocab.hpp"

namespace prio::cli {
namespace {

// Raised for option combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void PrintSamples(const SampleSet& set, const Vocabulary& vocab,
                  const std::string& format, std::ostream& out) {
  if (format == "csv") {
    out << "order,score,new_inferences,regex_valid,text\n";
    for (const auto& r : set.records) {
      out << r.order << ',' << Fixed(r.branch_score, 6) << ',' << r.new_inferences
          << ',' << (r.regex_valid ? "true" : "false") << ','
          << CsvField(detokenize(r.tokens, vocab)) << '\n';
    }
    return;
  }
  for (const auto& r : set.records) {
    out << r.order << ' ' << Fixed(r.branch_score, 6) << ' '
        << detokenize(r.tokens, vocab) << '\n';
  }
}

std::shared_ptr<const Guide> MaybeGuide(const std::string& regex,
                                        const Vocabulary& vocab) {
  if (regex.empty()) return nullptr;
  return std::make_shared<const Guide>(Guide::Compile(regex, vocab));
}

// --- sample -------------------------------------------------------------------

struct SampleOptions {
  std::string method = "priority";
  std::string model;
  std::string vocab;
  std::string regex;
  int n = 10;
  int k = 0;
  int max_branch = 0;
  std::string metric = "last";
  int queue_capacity = 0;
  std::string format = "lines";
  double top_p = 0.95;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int max_flags = 0;
};

int RunSample(const SampleOptions& o, std::ostream& out, std::ostream& err) {
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  const auto guide = MaybeGuide(o.regex, vocab);
  if (o.method == "random") {
    if (o.max_flags < 1) throw UsageError("--method random needs --max-flags");
    PrintSamples(random_flag_sample(vocab, o.max_flags, o.seed, o.n, guide.get()),
                 vocab, o.format, out);
    return kExitOk;
  }
  if (o.model.empty()) throw UsageError("--method " + o.method + " needs --model");
  const NGramModel model = NGramModel::Load(o.model, vocab);
  SampleSet set;
  if (o.method == "priority") {
    SamplerConfig config;
    config.num_samples = o.n;
    if (o.k > 0) config.top_k = o.k;
    if (o.max_branch > 0) config.max_branch = o.max_branch;
    if (o.queue_capacity > 0) config.queue_capacity = o.queue_capacity;
    config.metric = o.metric == "geomean" ? PriorityMetric::kGeometricMean
                                          : PriorityMetric::kLastTokenProb;
    config.guide = guide;
    set = priority_sample(model, config);
  } else if (o.method == "greedy") {
    set.records.push_back(greedy_decode(model, guide.get()));
  } else if (o.method == "nucleus") {
    NucleusConfig config;
    config.top_p = o.top_p;
    config.temperature = o.temperature;
    config.seed = o.seed;
    config.num_samples = o.n;
    set = nucleus_sample(model, config, guide.get());
  } else {
    set = topk_sample(model, o.k > 0 ? o.k : 5, o.temperature, o.seed, o.n,
                      guide.get());
  }
  PrintSamples(set, vocab, o.format, out);
  if (set.exhausted) {
    err << "note: search tree exhausted after " << set.records.size()
        << " samples\n";
  }
  return kExitOk;
}

// --- compare ------------------------------------------------------------------

struct CompareOptions {
  std::string model;
  std::string vocab;
  std::string regex;
  int n = 10;
  int k = 5;
  double top_p = 0.95;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::int64_t task_seed = -1;
  int max_flags = 10;
};

int RunCompare(const CompareOptions& o, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  const NGramModel model = NGramModel::Load(o.model, vocab);
  const auto guide = MaybeGuide(o.regex, vocab);
  std::optional<bench::PassTask> task;
  if (o.task_seed >= 0) {
    task = bench::make_task(static_cast<std::uint64_t>(o.task_seed),
                            static_cast<int>(vocab.size()) - 1, o.max_flags);
  }

  std::vector<std::pair<std::string, SampleSet>> runs;
  SamplerConfig pc;
  pc.num_samples = o.n;
  pc.guide = guide;
  runs.emplace_back("priority", priority_sample(model, pc));
  SampleSet greedy;
  greedy.records.push_back(greedy_decode(model, guide.get()));
  runs.emplace_back("greedy", std::move(greedy));
  NucleusConfig nc{o.top_p, o.temperature, o.seed, o.n};
  runs.emplace_back("nucleus", nucleus_sample(model, nc, guide.get()));
  runs.emplace_back("topk", topk_sample(model, o.k, o.temperature, o.seed, o.n,
                                        guide.get()));

  out << "method,samples,unique_raw,unique_valid,model_calls";
  if (task) out << ",best_improvement_pct";
  out << '\n';
  for (const auto& [name, set] : runs) {
    std::set<std::string> raw;
    std::set<std::string> valid;
    int calls = 0;
    double best = 0.0;
    bool any = false;
    for (const auto& r : set.records) {
      const std::string text = detokenize(r.tokens, vocab);
      raw.insert(text);
      if (r.regex_valid) valid.insert(text);
      calls += r.new_inferences;
      if (task) {
        const double s = task->ScoreText(text);
        if (!any || s > best) best = s;
        any = true;
      }
    }
    calls += set.abandoned_inferences;
    out << name << ',' << set.records.size() << ',' << raw.size() << ','
        << valid.size() << ',' << calls;
    if (task) out << ',' << Fixed(best, 4);
    out << '\n';
  }
  return kExitOk;
}

// --- bench --------------------------------------------------------------------

struct BenchOptions {
  int tasks = 200;
  int train_tasks = 0;
  std::uint64_t seed = 1;
  std::string budget_list = "1,3,5,10,30,100";
  std::string methods = bench::DefaultMethods();
  std::string scorer_cmd;
  std::string out;
  int num_flags = 24;
  int max_flags = 10;
  int autotune_budget = 2000;
  int order = 2;
  double alpha = 0.1;
  double top_p = 0.95;
  int jobs = 1;
  bool no_timing = false;
  std::string corpus_out;
};

std::vector<int> ParseBudgets(const std::string& list) {
  std::vector<int> budgets;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size() || n < 1) throw std::invalid_argument(item);
      budgets.push_back(n);
    } catch (const std::exception&) {
      throw UsageError("bad --budget-list entry '" + item + "'");
    }
  }
  if (budgets.empty()) throw UsageError("--budget-list is empty");
  return budgets;
}

int RunBench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  bench::BenchConfig config;
  config.budgets = ParseBudgets(o.budget_list);
  config.seed = o.seed;
  config.top_p = o.top_p;
  config.autotune_budget = o.autotune_budget;
  config.jobs = o.scorer_cmd.empty() ? o.jobs : 1;
  config.timing = !o.no_timing;
  std::vector<bench::MethodSpec> methods;
  try {
    methods = bench::ParseMethods(o.methods);
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }

  bench::SuiteConfig sc;
  sc.tasks = o.tasks;
  sc.train_tasks = o.train_tasks > 0 ? o.train_tasks : o.tasks;
  sc.seed = o.seed;
  sc.num_flags = o.num_flags;
  sc.max_flags = o.max_flags;
  sc.autotune_budget = o.autotune_budget;
  sc.order = o.order;
  sc.alpha = o.alpha;
  bench::Suite suite = bench::make_suite(sc);
  auto& tasks = suite.tasks;
  const Vocabulary& vocab = tasks.front().flag_vocab;
  if (!o.corpus_out.empty()) bench::WriteCorpus(o.corpus_out, suite.corpus, vocab);

  if (!o.scorer_cmd.empty()) {
    auto external = std::make_shared<const bench::ExternalScorer>(o.scorer_cmd, vocab);
    for (auto& t : tasks) t.scorer = external;
  }
  const bench::Evaluation eval = bench::evaluate(methods, tasks, suite.model, suite.guide, config);
  if (o.out.empty()) {
    bench::WriteCsv(out, eval.records);
  } else {
    std::ofstream file(o.out);
    if (!file) throw IoError("cannot write " + o.out);
    bench::WriteCsv(file, eval.records);
    if (!file) throw IoError("write failed for " + o.out);
    err << "wrote " << eval.records.size() << " records to " << o.out << '\n';
  }
  return kExitOk;
}

// --- guide-inspect --------------------------------------------------------------

struct InspectOptions {
  std::string regex;
  std::string vocab;
  int max_list = 20;
  int max_states = 64;
};

int RunInspect(const InspectOptions& o, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  const Guide guide = Guide::Compile(o.regex, vocab);
  const Dfa& dfa = guide.dfa();
  out << "regex: " << o.regex << '\n';
  out << "dfa_states: " << dfa.num_states() << " (including dead state)\n";
  out << "guide_states: " << guide.num_states() << '\n';
  out << "language_empty: " << (guide.empty() ? "yes" : "no") << '\n';
  const auto shown = std::min<std::size_t>(guide.num_states(),
                                           static_cast<std::size_t>(o.max_states));
  for (std::size_t i = 0; i < shown; ++i) {
    const auto s = static_cast<Guide::State>(i);
    const auto allowed = guide.allowed(s);
    out << "state " << s << (s == guide.initial() ? " [start]" : "")
        << " dfa=" << guide.dfa_state(s)
        << " accepting=" << (guide.accepting(s) ? "yes" : "no")
        << " live=" << (guide.live(s) ? "yes" : "no") << " allowed("
        << allowed.size() << "):";
    const auto listed =
        std::min<std::size_t>(allowed.size(), static_cast<std::size_t>(o.max_list));
    for (std::size_t j = 0; j < listed; ++j) out << ' ' << vocab.surface(allowed[j]);
    if (listed < allowed.size()) out << " ...";
    out << '\n';
  }
  if (shown < guide.num_states()) {
    out << "... " << guide.num_states() - shown << " more states\n";
  }
  return kExitOk;
}

// --- train ----------------------------------------------------------------------

struct TrainOptions {
  std::string corpus;
  std::string vocab;
  std::string out;
  int order = 2;
  double alpha = 0.1;
  int max_length = 32;
};

int RunTrain(const TrainOptions& o, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  const auto corpus = LoadCorpus(o.corpus, vocab);
  const NGramModel model = train_ngram(corpus, vocab, o.order, o.alpha, o.max_length);
  model.Save(o.out, o.vocab);
  out << "trained order-" << o.order << " model on " << corpus.size()
      << " sequences (" << model.table().size() << " contexts) -> " << o.out << '\n';
  return kExitOk;
}

// --- make-task ------------------------------------------------------------------

struct MakeTaskOptions {
  std::uint64_t seed = 1;
  int num_flags = 24;
  int max_flags = 10;
  std::string vocab_out;
  std::string score;
  int autotune = 0;
};

int RunMakeTask(const MakeTaskOptions& o, std::ostream& out) {
  const bench::PassTask task = bench::make_task(o.seed, o.num_flags, o.max_flags);
  out << "seed=" << task.seed << '\n';
  out << "num_flags=" << o.num_flags << '\n';
  out << "max_flags=" << task.max_flags << '\n';
  out << "baseline_score=" << Fixed(task.baseline_score, 10) << '\n';
  out << "regex=" << bench::FlagRegex(task.flag_vocab) << '\n';
  if (!o.vocab_out.empty()) task.flag_vocab.Save(o.vocab_out);
  if (!o.score.empty()) {
    const TokenSeq seq = tokenize(o.score, task.flag_vocab);
    out << "score=" << Fixed(task.Score(seq), 10) << '\n';
  }
  if (o.autotune > 0) {
    const auto best = bench::autotune(task, o.autotune, bench::AutotuneSeed(task));
    out << "autotune_budget=" << o.autotune << '\n';
    out << "autotune_best=" << Fixed(best.best_score, 10) << '\n';
    out << "autotune_sequence=" << detokenize(best.best_sequence, task.flag_vocab)
        << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Priority Sampling toolkit: deterministic unique-sample decoding, "
               "regex guides, baselines and a pass-ordering benchmark",
               "prio"};
  app.require_subcommand(1);

  SampleOptions so;
  auto* sample = app.add_subcommand("sample", "Draw samples from an n-gram model");
  sample->add_option("--method", so.method, "Sampling method")
      ->check(CLI::IsMember({"priority", "greedy", "nucleus", "topk", "random"}));
  sample->add_option("--model", so.model, "n-gram model file")->check(CLI::ExistingFile);
  sample->add_option("--vocab", so.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("--regex", so.regex, "Constrain output to this regex");
  sample->add_option("-n,--num-samples", so.n, "Number of samples")
      ->check(CLI::PositiveNumber);
  sample->add_option("--k", so.k,
                     "priority: candidates per expansion (default N); topk: k (default 5)")
      ->check(CLI::PositiveNumber);
  sample->add_option("--max-branch", so.max_branch, "Children per tree node")
      ->check(CLI::PositiveNumber);
  sample->add_option("--metric", so.metric, "Priority metric")
      ->check(CLI::IsMember({"last", "geomean"}));
  sample->add_option("--queue-capacity", so.queue_capacity, "Priority queue size")
      ->check(CLI::PositiveNumber);
  sample->add_option("--format", so.format, "Output format")
      ->check(CLI::IsMember({"lines", "csv"}));
  sample->add_option("--top-p", so.top_p, "Nucleus mass")->check(CLI::Range(0.0, 1.0));
  sample->add_option("--temperature", so.temperature, "Sampling temperature")
      ->check(CLI::PositiveNumber);
  sample->add_option("--seed", so.seed, "Random seed");
  sample->add_option("--max-flags", so.max_flags, "random: maximum sequence length")
      ->check(CLI::PositiveNumber);

  CompareOptions co;
  auto* compare = app.add_subcommand(
      "compare", "Run every sampler on one model and summarize uniqueness");
  compare->add_option("--model", co.model, "n-gram model file")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--vocab", co.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--regex", co.regex, "Constrain output to this regex");
  compare->add_option("-n,--num-samples", co.n, "Samples per method")
      ->check(CLI::PositiveNumber);
  compare->add_option("--k", co.k, "k for top-k sampling")->check(CLI::PositiveNumber);
  compare->add_option("--top-p", co.top_p, "Nucleus mass")->check(CLI::Range(0.0, 1.0));
  compare->add_option("--temperature", co.temperature, "Sampling temperature")
      ->check(CLI::PositiveNumber);
  compare->add_option("--seed", co.seed, "Random seed");
  compare->add_option("--task-seed", co.task_seed,
                      "Also report best score on the synthetic task with this seed");
  compare->add_option("--max-flags", co.max_flags, "Task sequence cap")
      ->check(CLI::PositiveNumber);

  BenchOptions bo;
  auto* bench_cmd = app.add_subcommand(
      "bench", "Best-of-n pass-ordering benchmark on synthetic tasks");
  bench_cmd->add_option("--tasks", bo.tasks, "Evaluation tasks")->check(CLI::Range(1, 49999));
  bench_cmd->add_option("--train-tasks", bo.train_tasks,
                        "Autotuned training tasks (default: --tasks)")
      ->check(CLI::Range(1, 49999));
  bench_cmd->add_option("--seed", bo.seed, "Suite seed");
  bench_cmd->add_option("--budget-list", bo.budget_list, "Comma-separated sample budgets");
  bench_cmd->add_option("--methods", bo.methods, "Comma-separated methods");
  bench_cmd->add_option("--scorer-cmd", bo.scorer_cmd,
                        "External scorer command (line protocol)");
  bench_cmd->add_option("--out", bo.out, "CSV output path (default stdout)");
  bench_cmd->add_option("--num-flags", bo.num_flags, "Passes in the vocabulary")
      ->check(CLI::Range(2, 10000));
  bench_cmd->add_option("--max-flags", bo.max_flags, "Maximum passes per sequence")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--autotune-budget", bo.autotune_budget,
                        "Random-search evaluations per task")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--order", bo.order, "n-gram order")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--alpha", bo.alpha, "n-gram smoothing")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--top-p", bo.top_p, "Nucleus mass")->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--jobs", bo.jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--no-timing", bo.no_timing, "Write wall_ms as 0");
  bench_cmd->add_option("--corpus-out", bo.corpus_out, "Also write the training corpus");

  InspectOptions io;
  auto* inspect = app.add_subcommand("guide-inspect", "Show a compiled regex guide");
  inspect->add_option("--regex", io.regex, "Regular expression")->required();
  inspect->add_option("--vocab", io.vocab, "Vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  inspect->add_option("--max-list", io.max_list, "Allowed tokens listed per state")
      ->check(CLI::PositiveNumber);
  inspect->add_option("--max-states", io.max_states, "States listed")
      ->check(CLI::PositiveNumber);

  TrainOptions to;
  auto* train = app.add_subcommand("train", "Train an additively smoothed n-gram model");
  train->add_option("--corpus", to.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  train->add_option("--vocab", to.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", to.out, "Model output path")->required();
  train->add_option("--order", to.order, "n-gram order")->check(CLI::PositiveNumber);
  train->add_option("--alpha", to.alpha, "Smoothing constant")->check(CLI::PositiveNumber);
  train->add_option("--max-length", to.max_length, "Generation cap including EOS")
      ->check(CLI::PositiveNumber);

  MakeTaskOptions mo;
  auto* make = app.add_subcommand("make-task", "Create a synthetic pass-ordering task");
  make->add_option("--seed", mo.seed, "Program seed");
  make->add_option("--num-flags", mo.num_flags, "Passes in the vocabulary")
      ->check(CLI::Range(2, 10000));
  make->add_option("--max-flags", mo.max_flags, "Maximum passes per sequence")
      ->check(CLI::PositiveNumber);
  make->add_option("--vocab-out", mo.vocab_out, "Write the flag vocabulary here");
  make->add_option("--score", mo.score, "Score this space-separated flag sequence");
  make->add_option("--autotune", mo.autotune, "Run random-search autotuning with this budget")
      ->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sample->parsed()) return RunSample(so, out, err);
    if (compare->parsed()) return RunCompare(co, out);
    if (bench_cmd->parsed()) return RunBench(bo, out, err);
    if (inspect->parsed()) return RunInspect(io, out);
    if (train->parsed()) return RunTrain(to, out);
    if (make->parsed()) return RunMakeTask(mo, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace prio::cli
