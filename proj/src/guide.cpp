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

#include "prio/guide.hpp"

#include <deque>
#include <map>
#include <utility>

#include "prio/error.hpp"

namespace prio {

Guide::Guide(std::string pattern, Dfa dfa, Vocabulary vocab)
    : pattern_(std::move(pattern)), dfa_(std::move(dfa)), vocab_(std::move(vocab)) {}

Guide Guide::Compile(std::string_view pattern, const Vocabulary& vocab) {
  Guide guide(std::string(pattern), CompileRegex(pattern), vocab);
  guide.BuildTokenIndex();
  return guide;
}

void Guide::BuildTokenIndex() {
  const std::size_t v = vocab_.size();
  std::map<std::pair<std::int32_t, bool>, State> ids;
  auto intern = [&](std::int32_t d, bool pending) {
    auto [it, inserted] = ids.emplace(std::pair{d, pending},
                                      static_cast<State>(dfa_state_.size()));
    if (inserted) {
      dfa_state_.push_back(d);
      pending_.push_back(pending);
      step_table_.resize(dfa_state_.size() * v, kReject);
    }
    return it->second;
  };

  intern(dfa_.start, false);
  for (std::size_t s = 0; s < dfa_state_.size(); ++s) {
    const std::int32_t d = dfa_state_[s];
    if (d == Dfa::kDead) continue;
    for (std::size_t i = 0; i < v; ++i) {
      const Token t{static_cast<std::int32_t>(i)};
      if (vocab_.is_eos(t)) continue;
      std::int32_t target = d;
      if (pending_[s]) target = dfa_.next(target, ' ');
      target = dfa_.run(target, vocab_.surface(t));
      if (target == Dfa::kDead) continue;
      const State next = intern(target, true);
      step_table_[s * v + i] = next;
    }
  }

  // Token-level liveness: some token sequence then EOS reaches acceptance.
  const std::size_t n = dfa_state_.size();
  live_.assign(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    live_[s] = dfa_.accepting[static_cast<std::size_t>(dfa_state_[s])];
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (live_[s]) continue;
      for (std::size_t i = 0; i < v; ++i) {
        const State next = step_table_[s * v + i];
        if (next != kReject && live_[static_cast<std::size_t>(next)]) {
          live_[s] = true;
          changed = true;
          break;
        }
      }
    }
  }

  allowed_.assign(n, {});
  allowed_mask_.assign(n * v, false);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < v; ++i) {
      const Token t{static_cast<std::int32_t>(i)};
      State& entry = step_table_[s * v + i];
      if (vocab_.is_eos(t)) {
        entry = dfa_.accepting[static_cast<std::size_t>(dfa_state_[s])]
                    ? static_cast<State>(s)
                    : kReject;
      } else if (entry != kReject && !live_[static_cast<std::size_t>(entry)]) {
        entry = kReject;
      }
      if (entry != kReject) {
        allowed_[s].push_back(t);
        allowed_mask_[s * v + i] = true;
      }
    }
  }
}

void Guide::CheckState(State s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= dfa_state_.size()) {
    throw InvalidConfig("guide state " + std::to_string(s) + " out of range");
  }
}

bool Guide::accepting(State s) const {
  CheckState(s);
  return dfa_.accepting[static_cast<std::size_t>(dfa_state_[static_cast<std::size_t>(s)])];
}

bool Guide::live(State s) const {
  CheckState(s);
  return live_[static_cast<std::size_t>(s)];
}

bool Guide::allows(State s, Token t) const {
  CheckState(s);
  return vocab_.contains(t) && allowed_mask_[cell(s, t)];
}

std::span<const Token> Guide::allowed(State s) const {
  CheckState(s);
  return allowed_[static_cast<std::size_t>(s)];
}

Guide::State Guide::lookup(State s, Token t) const {
  CheckState(s);
  if (!vocab_.contains(t)) {
    throw InvalidTokenId("token id " + std::to_string(t.id) + " out of range");
  }
  return step_table_[cell(s, t)];
}

Guide::State Guide::step(State s, Token t) const {
  const State next = lookup(s, t);
  if (next == kReject) {
    throw RejectedToken("token '" + vocab_.surface(t) +
                        "' is not allowed in guide state " + std::to_string(s) +
                        " of /" + pattern_ + "/");
  }
  return next;
}

std::int32_t Guide::dfa_state(State s) const {
  CheckState(s);
  return dfa_state_[static_cast<std::size_t>(s)];
}

bool Guide::separator_pending(State s) const {
  CheckState(s);
  return pending_[static_cast<std::size_t>(s)];
}

bool Guide::matches(std::span<const Token> tokens) const {
  return dfa_.matches(detokenize(tokens, vocab_));
}

}  // namespace prio
