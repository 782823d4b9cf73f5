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

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace attrport {

/// NCHW extents. Dense activations use h = w = 1.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t per_sample() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major NCHW buffer. Value type; copies are deep.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.numel(), fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
                     shape_.w + x];
  }
  const T& at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
                     shape_.w + x];
  }

  /// Pointer to the first element of sample n.
  T* sample(int n) { return data_.data() + n * shape_.per_sample(); }
  const T* sample(int n) const {
    return data_.data() + n * shape_.per_sample();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same storage, new extents. Element count must match.
  Tensor reshaped(Shape s) const {
    if (s.numel() != data_.size())
      throw ShapeError("reshape " + to_string(shape_) + " -> " + to_string(s));
    Tensor t;
    t.shape_ = s;
    t.data_ = data_;
    return t;
  }
  void reshape_inplace(Shape s) {
    if (s.numel() != data_.size())
      throw ShapeError("reshape " + to_string(shape_) + " -> " + to_string(s));
    shape_ = s;
  }

  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

 private:
  Shape shape_{};
  std::vector<T> data_;
};

inline std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.n) + "," + std::to_string(s.c) + "," +
         std::to_string(s.h) + "," + std::to_string(s.w) + "]";
}

inline void require_shape(const Shape& got, const Shape& want,
                          const char* what) {
  if (!(got == want))
    throw ShapeError(std::string(what) + ": expected " + to_string(want) +
                     ", got " + to_string(got));
}

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
  Tensor<To> out(src.shape());
  for (std::size_t i = 0; i < src.size(); ++i)
    out[i] = static_cast<To>(src[i]);
  return out;
}

}  // namespace attrport
