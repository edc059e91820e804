// src/io.cc

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

#include "weakspk/io.h"

#include <fstream>
#include <sstream>

#include "weakspk/errors.h"

namespace weakspk {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnresolvedReference: return "UnresolvedReference";
    case ErrorKind::kEmptyCluster: return "EmptyCluster";
    case ErrorKind::kMissingTargetSpeech: return "MissingTargetSpeech";
    case ErrorKind::kDuplicateSegment: return "DuplicateSegment";
    case ErrorKind::kInvalidFeatures: return "InvalidFeatures";
    case ErrorKind::kInvalidLabel: return "InvalidLabel";
    case ErrorKind::kInsufficientSegments: return "InsufficientSegments";
    case ErrorKind::kDegenerateConfig: return "DegenerateConfig";
    case ErrorKind::kEmptyRecording: return "EmptyRecording";
    case ErrorKind::kDegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kNoKnownExamples: return "NoKnownExamples";
    case ErrorKind::kBagTooLarge: return "BagTooLarge";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kEmptySelection: return "EmptySelection";
    case ErrorKind::kSingleClass: return "SingleClass";
    case ErrorKind::kMissingArtifacts: return "MissingArtifacts";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kFormatError: return "FormatError";
    case ErrorKind::kIoError: return "IoError";
  }
  return "Unknown";
}

std::string_view ByteReader::GetBytes(size_t n) {
  if (remaining() < n)
    Fail(ErrorKind::kFormatError, "truncated input: wanted ", n, " bytes at offset ",
         pos_, ", have ", remaining());
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

uint32_t ByteReader::GetU32() {
  std::string_view b = GetBytes(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(b[i])) << (8 * i);
  return v;
}

uint64_t ByteReader::GetU64() {
  std::string_view b = GetBytes(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(b[i])) << (8 * i);
  return v;
}

std::string ReadFileBytes(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kMissingArtifacts, "cannot open ", path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void WriteFileAtomic(const std::filesystem::path &path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) Fail(ErrorKind::kIoError, "cannot write ", tmp.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) Fail(ErrorKind::kIoError, "short write to ", tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace weakspk
