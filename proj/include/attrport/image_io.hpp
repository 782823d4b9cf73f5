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

// 8-bit RGB PNG codec and resampling. Images are (1, 3, H, W) float tensors
// with values in [0, 1].

#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include "attrport/tensor.hpp"

namespace attrport {

using Image = Tensor<float>;

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Any PNG colour type / bit depth is converted to 8-bit RGB.
Image decode_png(std::span<const unsigned char> bytes);
Image read_png(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and rounded to 8 bits.
std::string encode_png(const Image& img);
void write_png(const std::filesystem::path& path, const Image& img);

/// Bilinear with half-pixel centers; identity when the size is unchanged.
Image resize_bilinear(const Image& img, int height, int width);

/// Decode + resize to size x size, values in [0, 1].
Image preprocess(std::span<const unsigned char> bytes, int size);
Image preprocess_file(const std::filesystem::path& path, int size);

/// [-1, 1] -> [0, 1] and back.
Image signed_to_unit(const Image& img);
Image unit_to_signed(const Image& img);

/// Rec. 601 luma of pixel (y, x) in sample n.
double luminance(const Image& img, int n, int y, int x);

}  // namespace attrport
