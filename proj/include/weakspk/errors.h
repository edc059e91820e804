// weakspk/errors.h

// Copyright 2026 The weakspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WEAKSPK_ERRORS_H_
#define WEAKSPK_ERRORS_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace weakspk {

enum class ErrorKind {
  kUnresolvedReference,
  kEmptyCluster,
  kMissingTargetSpeech,
  kDuplicateSegment,
  kInvalidFeatures,
  kInvalidLabel,
  kInsufficientSegments,
  kDegenerateConfig,
  kEmptyRecording,
  kDegenerateEmbedding,
  kEmptyInput,
  kNoKnownExamples,
  kBagTooLarge,
  kNonFiniteGradient,
  kEmptySelection,
  kSingleClass,
  kMissingArtifacts,
  kConfigError,
  kFormatError,
  kIoError,
};

const char *ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Streams the arguments into a message and throws Error(kind, message).
template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, const Args &...args) {
  std::ostringstream os;
  (os << ... << args);
  throw Error(kind, os.str());
}

}  // namespace weakspk

#endif  // WEAKSPK_ERRORS_H_
