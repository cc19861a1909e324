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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "prio/cli.hpp"
#include "prio/model.hpp"

using namespace prio;

namespace {

const std::string kData = PRIO_DATA_DIR;
const std::string kGolden = PRIO_GOLDEN_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Run(std::vector<std::string> args) {
  args.insert(args.begin(), "prio");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the installed binary through the shell; returns stdout and exit code.
std::pair<std::string, int> Shell(const std::string& args) {
  const std::string cmd = std::string(PRIO_BINARY) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = pclose(p);
  return {out, WIFEXITED(status) ? WEXITSTATUS(status) : -1};
}

std::string Regex() {
  const std::string text = ReadFile(kGolden + "/make_task_seed1.txt");
  const auto at = text.find("regex=") + 6;
  return text.substr(at, text.find('\n', at) - at);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sample goldens") {
  const std::string model = kData + "/flags.ngram";
  const std::string vocab = kData + "/flags24.txt";
  auto r = Run({"sample", "--method", "priority", "--model", model, "--vocab", vocab, "-n", "8"});
  CHECK(r.code == 0);
  CHECK(r.out == ReadFile(kGolden + "/sample_priority_n8.txt"));

  r = Run({"sample", "--method", "priority", "--model", model, "--vocab", vocab, "-n", "6",
           "--metric", "geomean", "--max-branch", "3", "--format", "csv", "--regex", Regex()});
  CHECK(r.code == 0);
  CHECK(r.out == ReadFile(kGolden + "/sample_psg_csv.txt"));

  r = Run({"sample", "--method", "nucleus", "--model", model, "--vocab", vocab, "-n", "6",
           "--temperature", "1.2", "--seed", "9"});
  CHECK(r.code == 0);
  CHECK(r.out == ReadFile(kGolden + "/sample_nucleus_seed9.txt"));
}

TEST_CASE("priority sample prints unique lines") {
  const auto r = Run({"sample", "--method", "priority", "--model", kData + "/flags.ngram",
                      "--vocab", kData + "/flags24.txt", "-n", "5"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::set<std::string> texts;
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    texts.insert(line.substr(line.find(' ', line.find(' ') + 1) + 1));
  }
  CHECK(count == 5);
  CHECK(texts.size() == 5);
}

TEST_CASE("other sample methods") {
  const std::string model = kData + "/flags.ngram";
  const std::string vocab = kData + "/flags24.txt";
  auto r = Run({"sample", "--method", "greedy", "--model", model, "--vocab", vocab});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("0 1.000000 ", 0) == 0);
  r = Run({"sample", "--method", "topk", "--k", "3", "--model", model, "--vocab", vocab,
           "-n", "4", "--seed", "2"});
  CHECK(r.code == 0);
  CHECK(r.out == Run({"sample", "--method", "topk", "--k", "3", "--model", model, "--vocab",
                      vocab, "-n", "4", "--seed", "2"})
                     .out);
  r = Run({"sample", "--method", "random", "--vocab", vocab, "--max-flags", "4", "-n", "3"});
  CHECK(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
}

TEST_CASE("guide-inspect golden") {
  const auto r = Run({"guide-inspect", "--regex", "a b*", "--vocab", kData + "/chars.txt"});
  CHECK(r.code == 0);
  CHECK(r.out == ReadFile(kGolden + "/guide_inspect_a_bstar.txt"));
  const auto e = Run({"guide-inspect", "--regex", "x", "--vocab", kData + "/chars.txt"});
  CHECK(e.code == 0);
  CHECK(e.out.find("language_empty: yes") != std::string::npos);
}

TEST_CASE("bench golden") {
  const auto r = Run({"bench", "--tasks", "6", "--budget-list", "1,3,10", "--methods",
                      "random,greedy,ps,psg-mb3,nucleus-1.2,topk-5,autotuner",
                      "--autotune-budget", "200", "--no-timing"});
  CHECK(r.code == 0);
  CHECK(r.out == ReadFile(kGolden + "/bench_small.csv"));
  const auto jobs = Run({"bench", "--tasks", "6", "--budget-list", "1,3,10", "--methods",
                         "random,greedy,ps,psg-mb3,nucleus-1.2,topk-5,autotuner",
                         "--autotune-budget", "200", "--no-timing", "--jobs", "4"});
  CHECK(jobs.out == r.out);
}

TEST_CASE("bench with an external scorer and file output") {
  const auto dir = std::filesystem::temp_directory_path() / "prio_cli_bench";
  std::filesystem::create_directories(dir);
  const auto out = (dir / "r.csv").string();
  const auto r = Run({"bench", "--tasks", "3", "--budget-list", "1,2", "--methods",
                      "greedy,ps", "--autotune-budget", "20", "--no-timing", "--scorer-cmd",
                      "while read -r l; do set -- $l; echo $#; done", "--out", out});
  CHECK(r.code == 0);
  const std::string csv = ReadFile(out);
  // Score = number of flags; greedy hits the ten-flag cap.
  CHECK(csv.find("greedy,1,10.0000,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("make-task golden") {
  const auto r = Run({"make-task", "--seed", "1", "--score=-mem2reg -sroa -instcombine -gvn",
                      "--autotune", "2000"});
  CHECK(r.code == 0);
  CHECK(r.out == ReadFile(kGolden + "/make_task_seed1.txt"));
}

TEST_CASE("train writes a loadable model") {
  const auto dir = std::filesystem::temp_directory_path() / "prio_cli_train";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "m.ngram").string();
  const auto r = Run({"train", "--corpus", kData + "/corpus.txt", "--vocab",
                      kData + "/flags24.txt", "--order", "2", "--alpha", "0.1",
                      "--max-length", "11", "--out", path});
  CHECK(r.code == 0);
  const Vocabulary v = Vocabulary::Load(kData + "/flags24.txt");
  const NGramModel fresh = NGramModel::Load(path, v);
  const NGramModel committed = NGramModel::Load(kData + "/flags.ngram", v);
  CHECK(fresh.table().size() == committed.table().size());
  CHECK(fresh.next_distribution(TokenSeq{}) == committed.next_distribution(TokenSeq{}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(Run({}).code == 1);
  CHECK(Run({"frobnicate"}).code == 1);
  const auto unknown = Run({"sample", "--vocab", kData + "/chars.txt", "--bogus"});
  CHECK(unknown.code == 1);
  CHECK_FALSE(unknown.err.empty());
  CHECK(Run({"sample", "--vocab", kData + "/chars.txt", "--method", "priority"}).code == 1);
  CHECK(Run({"bench", "--budget-list", "1,x"}).code == 1);
  CHECK(Run({"bench", "--methods", "nope"}).code == 1);
  CHECK(Run({"--help"}).code == 0);
  // Data errors.
  const auto bad_regex = Run({"guide-inspect", "--regex", "(a", "--vocab", kData + "/chars.txt"});
  CHECK(bad_regex.code == 2);
  CHECK(bad_regex.err.find("position 0: unterminated group") != std::string::npos);
  CHECK(Run({"sample", "--model", kData + "/corpus.txt", "--vocab", kData + "/flags24.txt"})
            .code == 2);
  CHECK(Run({"sample", "--model", kData + "/flags.ngram", "--vocab", kData + "/flags24.txt",
             "--regex", "nothing"})
            .code == 2);
  CHECK(Run({"make-task", "--score=-nope"}).code == 2);
}

TEST_CASE("binary output is byte-identical across invocations") {
  const std::string args = "sample --method priority --model " + kData +
                           "/flags.ngram --vocab " + kData + "/flags24.txt -n 20";
  const auto a = Shell(args);
  const auto b = Shell(args);
  CHECK(a.second == 0);
  CHECK(a.first == b.first);
  CHECK(a.first == Run({"sample", "--method", "priority", "--model", kData + "/flags.ngram",
                        "--vocab", kData + "/flags24.txt", "-n", "20"})
                       .out);
  CHECK(Shell("sample --bogus").second == 1);
  CHECK(Shell("guide-inspect --regex '(' --vocab " + kData + "/chars.txt").second == 2);
}

}  // TEST_SUITE
