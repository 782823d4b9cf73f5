// Copyright 2026 The attrport Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian binary record streams shared by the embedding file and the
// checkpoint parameter archive. Integers are u32, strings are u32 length +
// bytes, reals are IEEE-754 binary32.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attrport/tensor.hpp"

namespace attrport {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BinaryWriter {
 public:
  void u32(std::uint32_t v);
  void str(std::string_view s);
  void f32s(std::span<const float> values);
  void raw(std::string_view bytes) { buf_.append(bytes); }

  const std::string& bytes() const { return buf_; }
  /// Writes to `path` via a temp file + rename.
  void save(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string bytes) : buf_(std::move(bytes)) {}
  static BinaryReader open(const std::filesystem::path& path);

  std::uint32_t u32();
  std::string str();
  std::vector<float> f32s(std::size_t count);
  std::string raw(std::size_t count);
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const;
  std::string buf_;
  std::size_t pos_ = 0;
};

/// A named array of binary32 values with its NCHW extents.
struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// Parameter archive: header {magic "APARRAY1", version, count} followed by
/// records {name, 4 dims, values}.
void write_array_archive(const std::filesystem::path& path,
                         const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_array_archive(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

}  // namespace attrport
