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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prio/vocab.hpp"

namespace prio {

// Deterministic automaton over bytes, trimmed to live states.
//
// State 0 is the dead state; every other state is live (an accepting state is
// reachable from it). The transition function is total: anything that would
// leave the live set goes to the dead state.
struct Dfa {
  static constexpr std::int32_t kDead = 0;
  static constexpr int kAlphabet = 256;

  std::int32_t start = kDead;
  std::vector<std::int32_t> transitions;  // state * kAlphabet + byte
  std::vector<bool> accepting;
  std::vector<bool> live;

  std::size_t num_states() const noexcept { return accepting.size(); }
  std::int32_t next(std::int32_t state, unsigned char c) const noexcept {
    return transitions[static_cast<std::size_t>(state) * kAlphabet + c];
  }
  // Runs `text` from `state`; stays dead once dead.
  std::int32_t run(std::int32_t state, std::string_view text) const noexcept;
  bool matches(std::string_view text) const noexcept;
};

// Supported syntax: literals, concatenation, |, *, +, ?, parentheses, '.',
// bracket classes with ranges and negation, and backslash escapes (\d \w \s
// and escaped metacharacters). Throws RegexSyntaxError.
Dfa CompileRegex(std::string_view pattern);

// Escapes regex metacharacters so `text` matches literally.
std::string RegexEscape(std::string_view text);

// A regex compiled against a vocabulary. Decoding-time masking is a table
// lookup.
//
// The regex is matched against the detokenized text: token surfaces joined
// by single spaces. A guide state therefore tracks the DFA state plus whether
// the next non-EOS token must first consume the separating space. Guide
// states are dense integers; initial() has no pending separator.
//
// Immutable after compilation; decoding sessions carry their own state value.
class Guide {
 public:
  using State = std::int32_t;
  static constexpr State kReject = -1;

  // Never throws for an empty language; check empty() instead.
  // Throws RegexSyntaxError.
  static Guide Compile(std::string_view pattern, const Vocabulary& vocab);

  const std::string& pattern() const noexcept { return pattern_; }
  const Dfa& dfa() const noexcept { return dfa_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }

  State initial() const noexcept { return 0; }
  std::size_t num_states() const noexcept { return dfa_state_.size(); }

  // True when no token sequence is accepted.
  bool empty() const noexcept { return !live_[0]; }

  bool accepting(State s) const;
  bool live(State s) const;
  bool allows(State s, Token t) const;
  std::span<const Token> allowed(State s) const;

  // Raw table entry: the target state or kReject. EOS maps to `s` itself
  // when `s` is accepting.
  State lookup(State s, Token t) const;

  // Throws RejectedToken when `t` is not in allowed(s).
  State step(State s, Token t) const;

  std::int32_t dfa_state(State s) const;
  bool separator_pending(State s) const;

  // Whether the detokenized text of `tokens` (trailing EOS optional) is in the
  // language. Independent of the token tables.
  bool matches(std::span<const Token> tokens) const;
  bool matches_text(std::string_view text) const { return dfa_.matches(text); }

 private:
  Guide(std::string pattern, Dfa dfa, Vocabulary vocab);
  void BuildTokenIndex();
  std::size_t cell(State s, Token t) const {
    return static_cast<std::size_t>(s) * vocab_.size() +
           static_cast<std::size_t>(t.id);
  }
  void CheckState(State s) const;

  std::string pattern_;
  Dfa dfa_;
  Vocabulary vocab_;

  std::vector<std::int32_t> dfa_state_;
  std::vector<bool> pending_;
  std::vector<State> step_table_;  // state * V + token
  std::vector<bool> live_;
  std::vector<std::vector<Token>> allowed_;
  std::vector<bool> allowed_mask_;  // state * V + token
};

}  // namespace prio
