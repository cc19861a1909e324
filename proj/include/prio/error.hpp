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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prio {

enum class ErrorKind {
  kUnknownSymbol,
  kInvalidTokenId,
  kInvalidVocabulary,
  kPrefixTooLong,
  kPrefixContainsEos,
  kInvalidDistribution,
  kEmptyCorpus,
  kBadOrder,
  kRegexSyntax,
  kRejectedToken,
  kEmptyLanguage,
  kNoAllowedToken,
  kInvalidConfig,
  kTooLarge,
  kIo,
  kFormat,
};

// Base of every data error raised by the library. The CLI maps these to
// exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define PRIO_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  };

PRIO_DEFINE_ERROR(InvalidTokenId, ErrorKind::kInvalidTokenId)
PRIO_DEFINE_ERROR(InvalidVocabulary, ErrorKind::kInvalidVocabulary)
PRIO_DEFINE_ERROR(PrefixTooLong, ErrorKind::kPrefixTooLong)
PRIO_DEFINE_ERROR(PrefixContainsEos, ErrorKind::kPrefixContainsEos)
PRIO_DEFINE_ERROR(InvalidDistribution, ErrorKind::kInvalidDistribution)
PRIO_DEFINE_ERROR(EmptyCorpus, ErrorKind::kEmptyCorpus)
PRIO_DEFINE_ERROR(BadOrder, ErrorKind::kBadOrder)
PRIO_DEFINE_ERROR(RejectedToken, ErrorKind::kRejectedToken)
PRIO_DEFINE_ERROR(EmptyLanguage, ErrorKind::kEmptyLanguage)
PRIO_DEFINE_ERROR(NoAllowedToken, ErrorKind::kNoAllowedToken)
PRIO_DEFINE_ERROR(InvalidConfig, ErrorKind::kInvalidConfig)
PRIO_DEFINE_ERROR(TooLarge, ErrorKind::kTooLarge)
PRIO_DEFINE_ERROR(IoError, ErrorKind::kIo)
PRIO_DEFINE_ERROR(FormatError, ErrorKind::kFormat)

#undef PRIO_DEFINE_ERROR

class UnknownSymbol : public Error {
 public:
  explicit UnknownSymbol(std::string word)
      : Error(ErrorKind::kUnknownSymbol, "unknown symbol '" + word + "'"),
        word_(std::move(word)) {}

  const std::string& word() const noexcept { return word_; }

 private:
  std::string word_;
};

class RegexSyntaxError : public Error {
 public:
  RegexSyntaxError(const std::string& message, std::size_t position)
      : Error(ErrorKind::kRegexSyntax,
              "regex syntax error at position " + std::to_string(position) +
                  ": " + message),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace prio
