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

#include <iosfwd>
#include <string>
#include <vector>

namespace prio::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point for the `prio` tool. `args[0]` is the program name.
// Subcommands: sample, compare, bench, guide-inspect, train, make-task.
// Returns 0 on success, 1 on usage errors, 2 on data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prio::cli
