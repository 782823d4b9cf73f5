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

#include "attrport/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace attrport {
namespace {

constexpr std::string_view kArrayMagic = "APARRAY1";
constexpr std::uint32_t kArrayVersion = 1;

}  // namespace

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinaryWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void BinaryWriter::f32s(std::span<const float> values) {
  for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
}

void BinaryWriter::save(const std::filesystem::path& path) const {
  write_file_atomic(path, buf_);
}

BinaryReader BinaryReader::open(const std::filesystem::path& path) {
  return BinaryReader(read_file(path));
}

void BinaryReader::need(std::size_t n) const {
  if (buf_.size() - pos_ < n) throw ArchiveError("truncated archive");
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i]))
         << (8 * i);
  pos_ += 4;
  return v;
}

std::string BinaryReader::str() {
  const std::uint32_t n = u32();
  return raw(n);
}

std::string BinaryReader::raw(std::size_t count) {
  need(count);
  std::string s = buf_.substr(pos_, count);
  pos_ += count;
  return s;
}

std::vector<float> BinaryReader::f32s(std::size_t count) {
  if (count > (buf_.size() - pos_) / 4) throw ArchiveError("truncated archive");
  std::vector<float> out(count);
  for (auto& f : out) f = std::bit_cast<float>(u32());
  return out;
}

void write_array_archive(const std::filesystem::path& path,
                         const std::vector<NamedArray>& arrays) {
  BinaryWriter w;
  w.raw(kArrayMagic);
  w.u32(kArrayVersion);
  w.u32(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    if (a.values.size() != a.shape.numel())
      throw ArchiveError("array '" + a.name + "' size does not match shape");
    w.str(a.name);
    for (int d : {a.shape.n, a.shape.c, a.shape.h, a.shape.w})
      w.u32(static_cast<std::uint32_t>(d));
    w.f32s(a.values);
  }
  w.save(path);
}

std::vector<NamedArray> read_array_archive(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::open(path);
  if (r.raw(kArrayMagic.size()) != kArrayMagic)
    throw ArchiveError(path.string() + ": not a parameter archive");
  const std::uint32_t version = r.u32();
  if (version != kArrayVersion)
    throw ArchiveError(path.string() + ": unsupported archive version " +
                       std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<NamedArray> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.str();
    a.shape.n = static_cast<int>(r.u32());
    a.shape.c = static_cast<int>(r.u32());
    a.shape.h = static_cast<int>(r.u32());
    a.shape.w = static_cast<int>(r.u32());
    a.values = r.f32s(a.shape.numel());
    out.push_back(std::move(a));
  }
  if (!r.at_end()) throw ArchiveError(path.string() + ": trailing bytes");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArchiveError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ArchiveError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace attrport
