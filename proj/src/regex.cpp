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

// Regex -> Thompson NFA -> subset-construction DFA -> trim to live states.

#include <algorithm>
#include <bitset>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "prio/error.hpp"
#include "prio/guide.hpp"

namespace prio {
namespace {

using ByteSet = std::bitset<Dfa::kAlphabet>;

struct NfaState {
  ByteSet bytes;
  int byte_target = -1;  // -1: no byte transition
  std::vector<int> epsilon;
};

struct Fragment {
  int start;
  int accept;
};

class Parser {
 public:
  explicit Parser(std::string_view pattern) : pattern_(pattern) {}

  std::vector<NfaState> Parse(int& start, int& accept) {
    Fragment f = ParseAlternation();
    if (pos_ < pattern_.size()) {
      // Only an unmatched ')' stops the top-level alternation early.
      throw RegexSyntaxError("unmatched ')'", pos_);
    }
    start = f.start;
    accept = f.accept;
    return std::move(states_);
  }

 private:
  int NewState() {
    states_.emplace_back();
    return static_cast<int>(states_.size()) - 1;
  }

  Fragment Epsilon() {
    const int s = NewState();
    const int a = NewState();
    states_[s].epsilon.push_back(a);
    return {s, a};
  }

  Fragment Bytes(const ByteSet& set) {
    const int s = NewState();
    const int a = NewState();
    states_[s].bytes = set;
    states_[s].byte_target = a;
    return {s, a};
  }

  Fragment Concat(Fragment a, Fragment b) {
    states_[a.accept].epsilon.push_back(b.start);
    return {a.start, b.accept};
  }

  Fragment Alternate(Fragment a, Fragment b) {
    const int s = NewState();
    const int t = NewState();
    states_[s].epsilon = {a.start, b.start};
    states_[a.accept].epsilon.push_back(t);
    states_[b.accept].epsilon.push_back(t);
    return {s, t};
  }

  Fragment Star(Fragment f) {
    const int s = NewState();
    const int t = NewState();
    states_[s].epsilon = {f.start, t};
    states_[f.accept].epsilon.push_back(f.start);
    states_[f.accept].epsilon.push_back(t);
    return {s, t};
  }

  Fragment Plus(Fragment f) {
    const int t = NewState();
    states_[f.accept].epsilon.push_back(f.start);
    states_[f.accept].epsilon.push_back(t);
    return {f.start, t};
  }

  Fragment Optional(Fragment f) {
    const int s = NewState();
    const int t = NewState();
    states_[s].epsilon = {f.start, t};
    states_[f.accept].epsilon.push_back(t);
    return {s, t};
  }

  bool AtEnd() const { return pos_ >= pattern_.size(); }
  char Peek() const { return pattern_[pos_]; }

  Fragment ParseAlternation() {
    Fragment f = ParseConcatenation();
    while (!AtEnd() && Peek() == '|') {
      ++pos_;
      f = Alternate(f, ParseConcatenation());
    }
    return f;
  }

  Fragment ParseConcatenation() {
    Fragment f = Epsilon();
    while (!AtEnd() && Peek() != '|' && Peek() != ')') {
      f = Concat(f, ParseRepetition());
    }
    return f;
  }

  Fragment ParseRepetition() {
    Fragment f = ParseAtom();
    while (!AtEnd()) {
      const char c = Peek();
      if (c == '*') {
        f = Star(f);
      } else if (c == '+') {
        f = Plus(f);
      } else if (c == '?') {
        f = Optional(f);
      } else {
        break;
      }
      ++pos_;
    }
    return f;
  }

  Fragment ParseAtom() {
    const std::size_t at = pos_;
    const char c = Peek();
    switch (c) {
      case '(': {
        ++pos_;
        Fragment inner = ParseAlternation();
        if (AtEnd() || Peek() != ')') {
          throw RegexSyntaxError("unterminated group", at);
        }
        ++pos_;
        return inner;
      }
      case '*':
      case '+':
      case '?':
        throw RegexSyntaxError(std::string("nothing to repeat before '") + c + "'",
                               at);
      case '[':
        return Bytes(ParseClass());
      case '.': {
        ++pos_;
        ByteSet any;
        any.set();
        any.reset('\n');
        return Bytes(any);
      }
      case '\\':
        return Bytes(ParseEscape());
      default: {
        ++pos_;
        ByteSet one;
        one.set(static_cast<unsigned char>(c));
        return Bytes(one);
      }
    }
  }

  // Consumes a backslash escape starting at pos_.
  ByteSet ParseEscape() {
    const std::size_t at = pos_;
    ++pos_;
    if (AtEnd()) throw RegexSyntaxError("trailing backslash", at);
    const char c = pattern_[pos_++];
    ByteSet set;
    auto add_range = [&set](int lo, int hi) {
      for (int b = lo; b <= hi; ++b) set.set(static_cast<std::size_t>(b));
    };
    switch (c) {
      case 'd':
      case 'D':
        add_range('0', '9');
        break;
      case 'w':
      case 'W':
        add_range('a', 'z');
        add_range('A', 'Z');
        add_range('0', '9');
        set.set('_');
        break;
      case 's':
      case 'S':
        for (char w : {' ', '\t', '\n', '\r', '\f', '\v'}) {
          set.set(static_cast<unsigned char>(w));
        }
        break;
      case 'n':
        set.set('\n');
        return set;
      case 't':
        set.set('\t');
        return set;
      case 'r':
        set.set('\r');
        return set;
      default:
        set.set(static_cast<unsigned char>(c));
        return set;
    }
    if (c == 'D' || c == 'W' || c == 'S') set.flip();
    return set;
  }

  ByteSet ParseClass() {
    const std::size_t at = pos_;
    ++pos_;
    bool negate = false;
    if (!AtEnd() && Peek() == '^') {
      negate = true;
      ++pos_;
    }
    ByteSet set;
    bool any_item = false;
    while (true) {
      if (AtEnd()) throw RegexSyntaxError("unterminated character class", at);
      if (Peek() == ']') {
        if (!any_item) throw RegexSyntaxError("empty character class", at);
        ++pos_;
        break;
      }
      any_item = true;
      const std::size_t item_at = pos_;
      ByteSet lo_set;
      int lo = -1;
      if (Peek() == '\\') {
        lo_set = ParseEscape();
        if (lo_set.count() == 1) {
          for (int b = 0; b < Dfa::kAlphabet; ++b) {
            if (lo_set.test(static_cast<std::size_t>(b))) lo = b;
          }
        }
      } else {
        lo = static_cast<unsigned char>(pattern_[pos_++]);
        lo_set.set(static_cast<std::size_t>(lo));
      }
      const bool is_range = pos_ + 1 < pattern_.size() && Peek() == '-' &&
                            pattern_[pos_ + 1] != ']';
      if (!is_range) {
        set |= lo_set;
        continue;
      }
      if (lo < 0) throw RegexSyntaxError("class escape used as range bound", item_at);
      ++pos_;  // '-'
      int hi = -1;
      if (Peek() == '\\') {
        ByteSet hi_set = ParseEscape();
        if (hi_set.count() != 1) {
          throw RegexSyntaxError("class escape used as range bound", item_at);
        }
        for (int b = 0; b < Dfa::kAlphabet; ++b) {
          if (hi_set.test(static_cast<std::size_t>(b))) hi = b;
        }
      } else {
        hi = static_cast<unsigned char>(pattern_[pos_++]);
      }
      if (hi < lo) throw RegexSyntaxError("reversed range in class", item_at);
      for (int b = lo; b <= hi; ++b) set.set(static_cast<std::size_t>(b));
    }
    if (negate) set.flip();
    return set;
  }

  std::string_view pattern_;
  std::size_t pos_ = 0;
  std::vector<NfaState> states_;
};

using StateSet = std::vector<int>;

void Closure(const std::vector<NfaState>& nfa, StateSet& set) {
  std::vector<bool> seen(nfa.size(), false);
  std::vector<int> stack(set.begin(), set.end());
  for (int s : set) seen[static_cast<std::size_t>(s)] = true;
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (int t : nfa[static_cast<std::size_t>(s)].epsilon) {
      if (!seen[static_cast<std::size_t>(t)]) {
        seen[static_cast<std::size_t>(t)] = true;
        set.push_back(t);
        stack.push_back(t);
      }
    }
  }
  std::sort(set.begin(), set.end());
}

}  // namespace

std::int32_t Dfa::run(std::int32_t state, std::string_view text) const noexcept {
  for (char c : text) {
    if (state == kDead) return kDead;
    state = next(state, static_cast<unsigned char>(c));
  }
  return state;
}

bool Dfa::matches(std::string_view text) const noexcept {
  return accepting[static_cast<std::size_t>(run(start, text))];
}

Dfa CompileRegex(std::string_view pattern) {
  int nfa_start = 0;
  int nfa_accept = 0;
  const std::vector<NfaState> nfa = Parser(pattern).Parse(nfa_start, nfa_accept);

  // Subset construction. Index 0 is reserved for the empty set.
  std::map<StateSet, int> ids;
  std::vector<StateSet> sets;
  std::vector<int> raw;  // subset transitions, id * 256 + byte
  ids[StateSet{}] = 0;
  sets.emplace_back();
  raw.assign(Dfa::kAlphabet, 0);

  StateSet initial{nfa_start};
  Closure(nfa, initial);
  ids.emplace(initial, 1);
  sets.push_back(initial);
  raw.resize(2 * Dfa::kAlphabet, 0);

  for (std::size_t id = 1; id < sets.size(); ++id) {
    std::vector<StateSet> moves(Dfa::kAlphabet);
    for (int s : sets[id]) {
      const NfaState& st = nfa[static_cast<std::size_t>(s)];
      if (st.byte_target < 0) continue;
      for (int b = 0; b < Dfa::kAlphabet; ++b) {
        if (st.bytes.test(static_cast<std::size_t>(b))) {
          moves[static_cast<std::size_t>(b)].push_back(st.byte_target);
        }
      }
    }
    for (int b = 0; b < Dfa::kAlphabet; ++b) {
      StateSet& target = moves[static_cast<std::size_t>(b)];
      if (target.empty()) continue;
      Closure(nfa, target);
      auto [it, inserted] = ids.emplace(target, static_cast<int>(sets.size()));
      if (inserted) {
        sets.push_back(target);
        raw.resize(sets.size() * Dfa::kAlphabet, 0);
      }
      raw[id * Dfa::kAlphabet + static_cast<std::size_t>(b)] = it->second;
    }
  }

  const std::size_t n = sets.size();
  std::vector<bool> accepting(n, false);
  for (std::size_t id = 1; id < n; ++id) {
    accepting[id] = std::binary_search(sets[id].begin(), sets[id].end(), nfa_accept);
  }

  // Live = backward closure of the accepting states.
  std::vector<std::vector<int>> reverse(n);
  for (std::size_t id = 0; id < n; ++id) {
    for (int b = 0; b < Dfa::kAlphabet; ++b) {
      reverse[static_cast<std::size_t>(raw[id * Dfa::kAlphabet + static_cast<std::size_t>(b)])]
          .push_back(static_cast<int>(id));
    }
  }
  std::vector<bool> live = accepting;
  std::deque<int> work;
  for (std::size_t id = 0; id < n; ++id) {
    if (live[id]) work.push_back(static_cast<int>(id));
  }
  while (!work.empty()) {
    const int s = work.front();
    work.pop_front();
    for (int p : reverse[static_cast<std::size_t>(s)]) {
      if (!live[static_cast<std::size_t>(p)]) {
        live[static_cast<std::size_t>(p)] = true;
        work.push_back(p);
      }
    }
  }

  // Trim: dead and non-live subsets collapse into state 0.
  std::vector<std::int32_t> remap(n, Dfa::kDead);
  std::int32_t next_id = 1;
  for (std::size_t id = 1; id < n; ++id) {
    if (live[id]) remap[id] = next_id++;
  }
  Dfa dfa;
  const auto m = static_cast<std::size_t>(next_id);
  dfa.transitions.assign(m * Dfa::kAlphabet, Dfa::kDead);
  dfa.accepting.assign(m, false);
  dfa.live.assign(m, true);
  dfa.live[Dfa::kDead] = false;
  for (std::size_t id = 1; id < n; ++id) {
    if (!live[id]) continue;
    const auto to = static_cast<std::size_t>(remap[id]);
    dfa.accepting[to] = accepting[id];
    for (std::size_t b = 0; b < Dfa::kAlphabet; ++b) {
      dfa.transitions[to * Dfa::kAlphabet + b] =
          remap[static_cast<std::size_t>(raw[id * Dfa::kAlphabet + b])];
    }
  }
  dfa.start = remap[1];
  return dfa;
}

std::string RegexEscape(std::string_view text) {
  static constexpr std::string_view kMeta = "\\^$.|?*+()[]{}";
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (kMeta.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace prio
