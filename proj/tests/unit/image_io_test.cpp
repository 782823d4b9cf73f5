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


#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <fstream>
#include <random>

#include "attrport/image_io.hpp"
#include "support/temp_dir.hpp"

namespace attrport {
namespace {

namespace fs = std::filesystem;

std::span<const unsigned char> as_bytes(const std::string& s) {
  return {reinterpret_cast<const unsigned char*>(s.data()), s.size()};
}

Image random_image(int h, int w, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> d(0, 255);
  Image img(Shape{1, 3, h, w});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = d(gen) / 255.0f;
  return img;
}

void append(png_structp png, png_bytep data, png_size_t n) {
  static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<char*>(data), n);
}

/// PNG of an arbitrary colour type and depth, built directly with libpng.
std::string raw_png(int w, int h, int color, int depth, const std::vector<unsigned char>& px) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_set_write_fn(png, &out, append, nullptr);
  png_set_IHDR(png, info, w, h, depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = px.size() / h;
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(px.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

TEST(Png, EncodeDecodeIsLossless) {
  const Image img = random_image(7, 5, 1);
  const Image back = decode_png(as_bytes(encode_png(img)));
  ASSERT_EQ(back.shape(), img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back[i], img[i]);
}

TEST(Png, ValuesAreClampedAndRounded) {
  Image img(Shape{1, 3, 1, 3});
  const float v[] = {-0.5f, 0.5f, 2.0f};
  for (int x = 0; x < 3; ++x)
    for (int c = 0; c < 3; ++c) img.at(0, c, 0, x) = v[x];
  const Image back = decode_png(as_bytes(encode_png(img)));
  EXPECT_EQ(back.at(0, 0, 0, 0), 0.0f);
  EXPECT_EQ(back.at(0, 1, 0, 1), 128 / 255.0f);
  EXPECT_EQ(back.at(0, 2, 0, 2), 1.0f);
}

TEST(Png, GrayscaleExpandsToRgb) {
  const Image img = decode_png(as_bytes(raw_png(2, 1, PNG_COLOR_TYPE_GRAY, 8, {0, 51})));
  ASSERT_EQ(img.shape(), (Shape{1, 3, 1, 2}));
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(img.at(0, c, 0, 0), 0.0f);
    EXPECT_FLOAT_EQ(img.at(0, c, 0, 1), 0.2f);
  }
}

TEST(Png, SixteenBitAlphaIsStripped) {
  // one pixel, RGBA 16-bit big-endian: (65535, 0, 32896, 0)
  const Image img = decode_png(as_bytes(raw_png(1, 1, PNG_COLOR_TYPE_RGB_ALPHA, 16,
                                                {0xff, 0xff, 0, 0, 0x80, 0x80, 0, 0})));
  ASSERT_EQ(img.shape(), (Shape{1, 3, 1, 1}));
  EXPECT_EQ(img[0], 1.0f);
  EXPECT_EQ(img[1], 0.0f);
  EXPECT_EQ(img[2], 128 / 255.0f);
}

TEST(Png, GarbageIsRejected) {
  EXPECT_THROW(decode_png(as_bytes("hello")), ImageError);
  std::string png = encode_png(random_image(8, 8, 2));
  EXPECT_THROW(decode_png(as_bytes(png.substr(0, png.size() / 2))), ImageError);
  png[45] ^= 0x55;
  EXPECT_THROW(decode_png(as_bytes(png)), ImageError);
  EXPECT_THROW(encode_png(Image(Shape{2, 3, 4, 4})), ShapeError);
  EXPECT_THROW(encode_png(Image(Shape{1, 1, 4, 4})), ShapeError);
}

TEST(Png, FileRoundTripAndMissingFile) {
  const fs::path d = testing::temp_dir("png");
  const Image img = random_image(4, 6, 3);
  write_png(d / "x.png", img);
  const Image back = read_png(d / "x.png");
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back[i], img[i]);
  EXPECT_THROW(read_png(d / "missing.png"), ImageError);
  std::ofstream(d / "bad.png") << "not png";
  try {
    read_png(d / "bad.png");
    FAIL();
  } catch (const ImageError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.png"), std::string::npos);
  }
  fs::remove_all(d);
}

TEST(Resize, SameSizeIsIdentity) {
  const Image img = random_image(9, 9, 4);
  const Image out = preprocess(as_bytes(encode_png(img)), 9);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(out[i], img[i]);
}

TEST(Resize, HalvingAveragesTwoByTwoBlocks) {
  const Image img = random_image(128, 128, 5);
  const Image out = preprocess(as_bytes(encode_png(img)), 64);
  ASSERT_EQ(out.shape(), (Shape{1, 3, 64, 64}));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const double mean = (img.at(0, c, 2 * y, 2 * x) + img.at(0, c, 2 * y + 1, 2 * x) +
                             img.at(0, c, 2 * y, 2 * x + 1) +
                             img.at(0, c, 2 * y + 1, 2 * x + 1)) / 4;
        ASSERT_NEAR(out.at(0, c, y, x), mean, 1e-6);
      }
}

TEST(Resize, OutputStaysInUnitRange) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Image img = random_image(13 + seed, 21 - seed, seed);
    for (int size : {5, 16, 40}) {
      const Image out = preprocess(as_bytes(encode_png(img)), size);
      EXPECT_EQ(out.shape(), (Shape{1, 3, size, size}));
      for (std::size_t i = 0; i < out.size(); ++i) {
        ASSERT_GE(out[i], 0.0f);
        ASSERT_LE(out[i], 1.0f);
      }
    }
  }
}

TEST(Resize, ConstantImageStaysConstant) {
  const Image out = resize_bilinear(Image(Shape{2, 3, 5, 7}, 0.25f), 11, 3);
  EXPECT_EQ(out.shape(), (Shape{2, 3, 11, 3}));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_FLOAT_EQ(out[i], 0.25f);
  EXPECT_THROW(resize_bilinear(out, 0, 3), std::invalid_argument);
}

TEST(Range, SignedUnitRoundTrip) {
  const Image img = random_image(3, 3, 6);
  const Image s = unit_to_signed(img);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_FLOAT_EQ(s[i], 2 * img[i] - 1);
    EXPECT_NEAR(signed_to_unit(s)[i], img[i], 1e-7);
  }
}

TEST(Range, LuminanceWeights) {
  Image img(Shape{1, 3, 1, 1});
  img[0] = 1.0f;
  EXPECT_NEAR(luminance(img, 0, 0, 0), 0.299, 1e-12);
  img.fill(1.0f);
  EXPECT_NEAR(luminance(img, 0, 0, 0), 1.0, 1e-12);
}

}  // namespace
}  // namespace attrport
