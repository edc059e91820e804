// weakspk/io.h

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

// Little-endian binary encoding and atomic file output.

#ifndef WEAKSPK_IO_H_
#define WEAKSPK_IO_H_

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace weakspk {

// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  void PutBytes(std::string_view bytes) { buf_.append(bytes); }
  void PutU32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void PutU64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void PutF32(float v) { PutU32(std::bit_cast<uint32_t>(v)); }
  void PutF64(double v) { PutU64(std::bit_cast<uint64_t>(v)); }

  const std::string &data() const { return buf_; }
  std::string &&Take() { return std::move(buf_); }

 private:
  std::string buf_;
};

// Sequential little-endian reader over an in-memory buffer; throws
// Error(kFormatError) on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view GetBytes(size_t n);
  uint32_t GetU32();
  uint64_t GetU64();
  float GetF32() { return std::bit_cast<float>(GetU32()); }
  double GetF64() { return std::bit_cast<double>(GetU64()); }

  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }

 private:
  std::string_view data_;
  size_t pos_ = 0;
};

std::string ReadFileBytes(const std::filesystem::path &path);

// Writes to "<path>.tmp" and renames over path, so readers never observe a
// partially written file.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view contents);

}  // namespace weakspk

#endif  // WEAKSPK_IO_H_
