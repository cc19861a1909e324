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

#include <map>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "prio/error.hpp"
#include "prio/sampler.hpp"
#include "regex_gen.hpp"

using namespace prio;
using namespace prio::testing;

namespace {

std::map<TokenSeq, double> AsMap(const std::vector<std::pair<TokenSeq, double>>& v) {
  return {v.begin(), v.end()};
}

void CheckSame(const SampleSet& got, const SampleSet& want) {
  REQUIRE(got.records.size() == want.records.size());
  CHECK(got.exhausted == want.exhausted);
  for (std::size_t i = 0; i < got.records.size(); ++i) {
    CHECK(got.records[i].tokens == want.records[i].tokens);
    CHECK(got.records[i].branch_score == want.records[i].branch_score);
    CHECK(got.records[i].order == want.records[i].order);
  }
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("enumeration of M1") {
  const auto all = AsMap(oracle::enumerate_all_sequences(M1(), 3));
  const std::map<TokenSeq, double> want{
      {{Eos()}, 0.1},           {{A(), Eos()}, 0.42},      {{A(), A(), Eos()}, 0.06},
      {{A(), B(), Eos()}, 0.12}, {{B(), Eos()}, 0.12},      {{B(), A(), Eos()}, 0.15},
      {{B(), B(), Eos()}, 0.03}};
  REQUIRE(all.size() == want.size());
  double sum = 0.0;
  for (const auto& [seq, p] : want) {
    CHECK(all.at(seq) == doctest::Approx(p).epsilon(1e-12));
    sum += all.at(seq);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumeration of trivial and uniform models") {
  const TableModel stop(AbVocab(), 4, {0.0, 0.0, 1.0});
  const auto s = oracle::enumerate_all_sequences(stop, 4);
  double mass = 0.0;
  for (const auto& [seq, p] : s) {
    if (seq == TokenSeq{Eos()}) CHECK(p == 1.0);
    mass += p;
  }
  CHECK(mass == 1.0);

  const UniformModel u(AbVocab(), 2);
  const auto m = AsMap(oracle::enumerate_all_sequences(u, 2));
  CHECK(m.size() == 3);
  CHECK(m.at({Eos()}) == doctest::Approx(1.0 / 3.0));
  CHECK(m.at({A(), Eos()}) == doctest::Approx(1.0 / 3.0));
  CHECK(m.at({B(), Eos()}) == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(oracle::enumerate_all_sequences(UniformModel(LetterVocab(10), 9), 9),
                  TooLarge);
}

TEST_CASE("enumeration sums to one on random models") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Vocabulary v = LetterVocab(1 + static_cast<int>(seed % 4));
    const int max_len = 2 + static_cast<int>(seed % 4);
    double sum = 0.0;
    for (const auto& [seq, p] :
         oracle::enumerate_all_sequences(RandomTableModel(seed, v, max_len), max_len)) {
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("reference sampler reproduces the M1 trace") {
  const auto ref = oracle::reference_priority_sample(M1(), SamplerConfig{3});
  REQUIRE(ref.set.records.size() == 3);
  CHECK(ref.set.records[0].tokens == TokenSeq{A(), Eos()});
  CHECK(ref.set.records[1].tokens == TokenSeq{B(), A(), Eos()});
  CHECK(ref.set.records[2].tokens == TokenSeq{B(), Eos()});
  CHECK(ref.model_calls == 2 + 3 + 2);  // no reuse: every position is re-inferred

  const auto one = oracle::reference_priority_sample(M1(), SamplerConfig{1});
  REQUIRE(one.set.records.size() == 1);
  CHECK(one.set.records[0].tokens == TokenSeq{A(), Eos()});

  SamplerConfig guided{3};
  guided.guide = std::make_shared<const Guide>(Guide::Compile("B( A| B)*", AbVocab()));
  CheckSame(priority_sample(M1(), guided),
            oracle::reference_priority_sample(M1(), guided).set);
  CHECK(oracle::reference_priority_sample(M1(), guided).set.records[0].tokens ==
        TokenSeq{B(), A(), Eos()});
}

TEST_CASE("differential: sampler equals the reference on random table models") {
  int runs = 0;
  for (std::uint64_t seed = 1; seed <= 80; ++seed) {
    const Vocabulary v = LetterVocab(1 + static_cast<int>(seed % 4));
    const int max_len = 2 + static_cast<int>(seed % 4);
    const TableModel m = RandomTableModel(seed * 31, v, max_len);
    for (auto metric : {PriorityMetric::kLastTokenProb, PriorityMetric::kGeometricMean}) {
      for (std::optional<int> mb : {std::optional<int>{2}, std::optional<int>{3},
                                    std::optional<int>{5}, std::optional<int>{}}) {
        SamplerConfig c;
        c.num_samples = 1 + static_cast<int>((seed + runs) % 8);
        c.metric = metric;
        c.max_branch = mb;
        if (seed % 5 == 0) c.top_k = 2;
        if (seed % 7 == 0) c.queue_capacity = 2;
        CheckSame(priority_sample(m, c), oracle::reference_priority_sample(m, c).set);
        ++runs;
      }
    }
  }
  CHECK(runs == 640);
}

TEST_CASE("differential: guided runs") {
  RegexGen gen(909);
  int runs = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const Vocabulary v = gen.Vocab();
    auto guide = std::make_shared<const Guide>(Guide::Compile(gen.Pattern(), v));
    if (guide->empty()) continue;
    const TableModel m = RandomTableModel(static_cast<std::uint64_t>(trial) + 1, v, 5);
    SamplerConfig c;
    c.num_samples = 8;
    c.guide = guide;
    c.metric = trial % 2 ? PriorityMetric::kGeometricMean : PriorityMetric::kLastTokenProb;
    if (trial % 3 == 0) c.max_branch = 2;
    CheckSame(priority_sample(m, c), oracle::reference_priority_sample(m, c).set);
    ++runs;
  }
  CHECK(runs >= 50);
}

}  // TEST_SUITE
