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

#include "attrport/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "attrport/archive.hpp"

namespace attrport {
namespace {

struct ReadCursor {
  std::span<const unsigned char> bytes;
  std::size_t pos = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->bytes.size() - cur->pos < n) png_error(png, "truncated PNG data");
  std::memcpy(out, cur->bytes.data() + cur->pos, n);
  cur->pos += n;
}

void write_callback(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  *err = msg;
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

}  // namespace

Image decode_png(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw ImageError("not a PNG image");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           error_callback, warning_callback);
  if (!png) throw ImageError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("PNG decode failed: " + err);
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (width == 0 || height == 0 || width > 16384 || height > 16384)
    png_error(png, "unsupported image dimensions");
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(width) * 3)
    png_error(png, "unexpected row layout");
  pixels.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int h = static_cast<int>(height), w = static_cast<int>(width);
  Image img(Shape{1, 3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(0, c, y, x) = pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
  return img;
}

Image read_png(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const ArchiveError& e) {
    throw ImageError(e.what());
  }
  try {
    return decode_png({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

std::string encode_png(const Image& img) {
  const Shape s = img.shape();
  if (s.n != 1 || s.c != 3) throw ShapeError("encode_png expects (1,3,H,W), got " + to_string(s));
  std::vector<unsigned char> pixels(static_cast<std::size_t>(s.h) * s.w * 3);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(0, c, y, x), 0.0f, 1.0f);
        pixels[(static_cast<std::size_t>(y) * s.w + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
  std::string out, err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            error_callback, warning_callback);
  if (!png) throw ImageError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(s.h);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, s.w, s.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < s.h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * s.w * 3;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  write_file_atomic(path, encode_png(img));
}

Image resize_bilinear(const Image& img, int height, int width) {
  const Shape s = img.shape();
  if (height < 1 || width < 1) throw std::invalid_argument("resize: bad target size");
  if (s.h == height && s.w == width) return img;
  Image out(Shape{s.n, s.c, height, width});
  const double sy = static_cast<double>(s.h) / height;
  const double sx = static_cast<double>(s.w) / width;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, s.h - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, s.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
          const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, s.w - 1.0);
          const int x0 = static_cast<int>(fx);
          const int x1 = std::min(x0 + 1, s.w - 1);
          const double wx = fx - x0;
          const double top = (1 - wx) * img.at(n, c, y0, x0) + wx * img.at(n, c, y0, x1);
          const double bot = (1 - wx) * img.at(n, c, y1, x0) + wx * img.at(n, c, y1, x1);
          out.at(n, c, y, x) = static_cast<float>((1 - wy) * top + wy * bot);
        }
      }
  return out;
}

Image preprocess(std::span<const unsigned char> bytes, int size) {
  return resize_bilinear(decode_png(bytes), size, size);
}

Image preprocess_file(const std::filesystem::path& path, int size) {
  return resize_bilinear(read_png(path), size, size);
}

Image signed_to_unit(const Image& img) {
  Image out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] + 1.0f) * 0.5f;
  return out;
}

Image unit_to_signed(const Image& img) {
  Image out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = 2.0f * img[i] - 1.0f;
  return out;
}

double luminance(const Image& img, int n, int y, int x) {
  return 0.299 * img.at(n, 0, y, x) + 0.587 * img.at(n, 1, y, x) +
         0.114 * img.at(n, 2, y, x);
}

}  // namespace attrport
