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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "prio/baselines.hpp"
#include "prio/bench.hpp"
#include "prio/error.hpp"

using namespace prio;
using namespace prio::bench;

namespace {

std::map<std::string, std::string> Golden(const std::string& name) {
  std::ifstream in(std::string(PRIO_GOLDEN_DIR) + "/" + name);
  REQUIRE(in);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

// The scoring rule written out from the accessors.
double ExpectedScore(const SyntheticScorer& s, const TokenSeq& flags) {
  std::map<int, int> applied;
  std::set<std::pair<int, int>> pairs;
  double raw = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const int f = flags[i].id;
    raw += s.gain(f) * std::pow(0.5, applied[f]++);
    for (std::size_t j = 0; j < i; ++j) {
      const int b = flags[j].id;
      if (b != f && pairs.insert({b, f}).second) raw += s.synergy(b, f);
    }
  }
  return 25.0 * std::tanh(s.sensitivity() * raw / 25.0);
}

std::vector<PassTask> Tasks(std::uint64_t base, int count) {
  std::vector<PassTask> out;
  for (int i = 0; i < count; ++i) out.push_back(make_task(base + i, 24, 10));
  return out;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("task scorer golden for seed 1") {
  const auto golden = Golden("make_task_seed1.txt");
  const PassTask task = make_task(1, 24, 10);
  const TokenSeq fixture = tokenize("-mem2reg -sroa -instcombine -gvn", task.flag_vocab);
  CHECK(task.Score(fixture) == doctest::Approx(std::stod(golden.at("score"))).epsilon(1e-9));
  const auto& scorer = dynamic_cast<const SyntheticScorer&>(*task.scorer);
  CHECK(scorer.Score(fixture) == doctest::Approx(ExpectedScore(scorer, fixture)).epsilon(1e-12));
}

TEST_CASE("autotune golden for seed 1, budget 2000") {
  const auto golden = Golden("make_task_seed1.txt");
  const PassTask task = make_task(1, 24, 10);
  const AutotuneResult r = autotune(task, 2000, AutotuneSeed(task));
  CHECK(r.best_score == doctest::Approx(std::stod(golden.at("autotune_best"))).epsilon(1e-9));
  CHECK(detokenize(r.best_sequence, task.flag_vocab) == golden.at("autotune_sequence"));
}

TEST_CASE("tasks are reproducible and the empty sequence is the baseline") {
  const PassTask a = make_task(7, 24, 10);
  const PassTask b = make_task(7, 24, 10);
  const SampleSet probes = random_flag_sample(a.flag_vocab, 10, 3, 50);
  for (const auto& r : probes.records) CHECK(a.Score(r.tokens) == b.Score(r.tokens));
  CHECK(a.Score(TokenSeq{}) == 0.0);
  CHECK(a.Score(TokenSeq{a.flag_vocab.eos()}) == 0.0);
  CHECK(a.ScoreText("") == 0.0);
  CHECK(a.ScoreText("-bogus -flags") == 0.0);
  CHECK(a.ScoreText("-bogus -sroa") == a.ScoreText("-sroa"));
  CHECK_THROWS_AS(make_task(1, 1, 10), InvalidConfig);
  CHECK_THROWS_AS(make_task(1, 24, 0), InvalidConfig);
}

TEST_CASE("scorer is bounded and order-sensitive, and matches its written rule") {
  bool order_matters = false;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PassTask t = make_task(seed, 24, 10);
    const auto& s = dynamic_cast<const SyntheticScorer&>(*t.scorer);
    for (const auto& r : random_flag_sample(t.flag_vocab, 10, seed, 100).records) {
      const TokenSeq flags(r.tokens.begin(), r.tokens.end() - 1);
      const double v = s.Score(flags);
      CHECK(std::abs(v) < SyntheticScorer::kBound);
      CHECK(v == doctest::Approx(ExpectedScore(s, flags)).epsilon(1e-12));
      TokenSeq rev(flags.rbegin(), flags.rend());
      if (std::abs(s.Score(rev) - v) > 1e-6) order_matters = true;
    }
  }
  CHECK(order_matters);
}

TEST_CASE("autotune budget prefix property") {
  const PassTask t = make_task(3, 24, 10);
  const auto seed = AutotuneSeed(t);
  const auto first = random_flag_sample(t.flag_vocab, 10, seed, 1).records[0];
  CHECK(autotune(t, 1, seed).best_score == t.Score(first.tokens));
  double prev = autotune(t, 1, seed).best_score;
  for (int b : {2, 5, 20, 100, 400}) {
    const double cur = autotune(t, b, seed).best_score;
    CHECK(cur >= prev);
    prev = cur;
  }
  CHECK_THROWS_AS(autotune(t, 0, seed), InvalidConfig);
}

TEST_CASE("training corpus") {
  const auto one = Tasks(10, 1);
  CHECK(build_training_corpus(one, 50).size() == 1);
  const auto tasks = Tasks(20, 12);
  const auto corpus = build_training_corpus(tasks, 50);
  REQUIRE(corpus.size() == 12);
  const Guide g = Guide::Compile(FlagRegex(tasks[0].flag_vocab), tasks[0].flag_vocab);
  for (const auto& seq : corpus) {
    CHECK(seq.back() == tasks[0].flag_vocab.eos());
    CHECK(g.matches(seq));
  }
  CHECK_THROWS_AS(build_training_corpus(std::vector<PassTask>{}, 5), InvalidConfig);
  CHECK_THROWS_AS(WriteCorpus("/nonexistent/dir/c.txt", corpus, tasks[0].flag_vocab),
                  IoError);
}

TEST_CASE("flag vocabulary and regex") {
  const Vocabulary v = FlagVocabulary(40);
  CHECK(v.size() == 41);
  CHECK(v.is_eos(Token{40}));
  CHECK(v.surface(Token{0}) == "-mem2reg");
  CHECK(v.surface(Token{39}) == "-pass-39");
  const std::string re = FlagRegex(FlagVocabulary(2));
  CHECK(re == "(-mem2reg|-sroa)( (-mem2reg|-sroa))*");
  const Dfa d = CompileRegex(re);
  CHECK(d.matches("-sroa -mem2reg"));
  CHECK_FALSE(d.matches("-sroa  -mem2reg"));
  CHECK_FALSE(d.matches(""));
}

TEST_CASE("method grammar") {
  const MethodSpec ps = ParseMethod("ps");
  CHECK(ps.kind == MethodKind::kPriority);
  CHECK(ps.guided);
  CHECK(ps.metric == PriorityMetric::kLastTokenProb);
  const MethodSpec psg = ParseMethod("psg-mb3-noregex");
  CHECK(psg.metric == PriorityMetric::kGeometricMean);
  CHECK(psg.max_branch == 3);
  CHECK_FALSE(psg.guided);
  const MethodSpec nuc = ParseMethod("nucleus-1.2");
  CHECK(nuc.kind == MethodKind::kNucleus);
  CHECK(nuc.temperature == 1.2);
  CHECK_FALSE(nuc.guided);
  CHECK(ParseMethod("nucleus-0.4-regex").guided);
  CHECK(ParseMethod("topk-5").k == 5);
  CHECK(ParseMethod("ps-reject").invalid_policy == InvalidPolicy::kReject);
  for (const char* bad : {"nope", "nucleus", "nucleus-x", "nucleus-0", "topk-1.5",
                          "ps-mb", "ps-mb0", "ps-frob"}) {
    INFO(bad);
    CHECK_THROWS_AS(ParseMethod(bad), InvalidConfig);
  }
  CHECK(ParseMethods(DefaultMethods()).size() == 18);
  CHECK_THROWS_AS(ParseMethods(""), InvalidConfig);
}

TEST_CASE("evaluation curves, uniqueness and job independence") {
  const auto train = Tasks(5000, 30);
  const auto tasks = Tasks(100, 12);
  const Vocabulary& v = tasks[0].flag_vocab;
  const NGramModel model = train_ngram(build_training_corpus(train, 200), v, 2, 0.1, 11);
  auto guide = std::make_shared<const Guide>(Guide::Compile(FlagRegex(v), v));
  const auto methods = ParseMethods("greedy,random,ps,psg-mb3,nucleus-1.0,ps-noregex,autotuner");
  BenchConfig config;
  config.budgets = {1, 3, 10, 30};
  config.autotune_budget = 100;
  config.timing = false;
  const Evaluation one = evaluate(methods, tasks, model, guide, config);
  config.jobs = 3;
  const Evaluation three = evaluate(methods, tasks, model, guide, config);
  REQUIRE(one.records.size() == methods.size() * 4);
  REQUIRE(three.records.size() == one.records.size());
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    CHECK(one.records[i].mean_best == three.records[i].mean_best);
    CHECK(one.records[i].mean_unique_valid == three.records[i].mean_unique_valid);
    CHECK(one.records[i].wall_ms == 0.0);
  }

  for (const auto& [name, per_task] : one.curves) {
    CHECK(per_task.size() == tasks.size());
    for (const auto& curve : per_task) {
      REQUIRE(curve.size() == 30);
      for (std::size_t n = 1; n < curve.size(); ++n) CHECK(curve[n] >= curve[n - 1]);
    }
  }
  std::map<std::pair<std::string, int>, BenchRecord> by;
  for (const auto& r : one.records) by[{r.method, r.n}] = r;
  for (int n : {1, 3, 10, 30}) {
    CHECK(by[{"greedy", n}].mean_best == by[{"greedy", 1}].mean_best);
    CHECK(by[{"ps", n}].mean_unique_valid == n);
    CHECK(by[{"ps", n}].mean_unique_raw == n);
    CHECK(by[{"ps", n}].mean_best >= by[{"greedy", n}].mean_best);
  }
  CHECK(by[{"ps", 1}].mean_best == by[{"greedy", 1}].mean_best);

  // Best-of-N at n = N ignores emission order.
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const SampleSet s = RunMethod(methods[2], tasks[i], model, guide, config, 30);
    double best = -1e9;
    for (auto it = s.records.rbegin(); it != s.records.rend(); ++it) {
      best = std::max(best, tasks[i].Score(it->tokens));
    }
    CHECK(one.curves.at("ps")[i].back() == best);
  }

  std::ostringstream csv;
  WriteCsv(csv, std::vector<BenchRecord>{{"ps", 10, 1.5, 10, 9.25, 0.0}});
  CHECK(csv.str() ==
        "method,n,mean_improvement_pct,mean_unique_raw,mean_unique_valid,wall_ms\n"
        "ps,10,1.5000,10.0000,9.2500,0.0\n");
}

TEST_CASE("reject policy ignores invalid samples") {
  const auto tasks = Tasks(300, 4);
  const Vocabulary& v = tasks[0].flag_vocab;
  // A model that stops immediately half the time: empty outputs are invalid.
  TableModel m(v, 4, std::vector<double>(v.size(), 1.0 / static_cast<double>(v.size())));
  Distribution root(v.size(), 0.5 / static_cast<double>(v.size() - 1));
  root.back() = 0.5;
  m.set({}, root);
  auto guide = std::make_shared<const Guide>(Guide::Compile(FlagRegex(v), v));
  BenchConfig config;
  config.budgets = {1, 5};
  config.timing = false;
  const auto eval = evaluate(ParseMethods("ps-noregex,ps-noregex-reject"), tasks, m, guide, config);
  for (const auto& r : eval.records) {
    if (r.n == 5) CHECK(r.mean_unique_valid == 4.0);
    if (r.n == 5) CHECK(r.mean_unique_raw == 5.0);
  }
  // Greedy output is [EOS]; its fallback score is the baseline.
  CHECK(eval.curves.at("ps-noregex")[0][0] == 0.0);
}

TEST_CASE("external scorer line protocol") {
  const Vocabulary v = FlagVocabulary(24);
  const ExternalScorer count("while read -r l; do set -- $l; echo $#; done", v);
  CHECK(count.Score(tokenize("-sroa -gvn -dce", v)) == 3.0);
  CHECK(count.Score(tokenize("-sroa", v)) == 1.0);
  const ExternalScorer bad("while read l; do echo nope; done", v);
  CHECK_THROWS_AS(bad.Score(tokenize("-sroa", v)), IoError);
  const ExternalScorer dead("true", v);
  CHECK_THROWS_AS(dead.Score(tokenize("-sroa", v)), IoError);
}

}  // TEST_SUITE
