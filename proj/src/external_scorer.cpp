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

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "prio/bench.hpp"
#include "prio/error.hpp"

namespace prio::bench {

ExternalScorer::ExternalScorer(std::string command, Vocabulary flag_vocab)
    : command_(std::move(command)), vocab_(std::move(flag_vocab)) {
  // A scorer that exits early must surface as an IoError, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw IoError("pipe() failed for external scorer");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw IoError("pipe() failed for external scorer");
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw IoError("fork() failed for external scorer");
  }
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  from_child_ = fdopen(out_pipe[0], "r");
  if (from_child_ == nullptr) {
    close(out_pipe[0]);
    throw IoError("fdopen() failed for external scorer");
  }
}

ExternalScorer::~ExternalScorer() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ != nullptr) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

double ExternalScorer::Score(std::span<const Token> flags) const {
  if (flags.empty()) return 0.0;
  std::lock_guard<std::mutex> lock(mu_);
  std::string line = detokenize(flags, vocab_);
  line.push_back('\n');
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n <= 0) throw IoError("external scorer '" + command_ + "' closed its input");
    written += static_cast<std::size_t>(n);
  }
  char* reply = nullptr;
  std::size_t cap = 0;
  const ssize_t got = getline(&reply, &cap, from_child_);
  std::string text = got > 0 ? std::string(reply, static_cast<std::size_t>(got)) : "";
  std::free(reply);
  if (got <= 0) throw IoError("external scorer '" + command_ + "' produced no score");
  char* end = nullptr;
  const double score = std::strtod(text.c_str(), &end);
  while (end != nullptr && (*end == '\n' || *end == '\r' || *end == ' ')) ++end;
  if (end == text.c_str() || (end != nullptr && *end != '\0')) {
    throw IoError("external scorer '" + command_ + "' replied '" + text +
                  "', expected a decimal score");
  }
  return score;
}

}  // namespace prio::bench
