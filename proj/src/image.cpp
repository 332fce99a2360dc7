// Copyright 2026 The Radanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "radanon/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "radanon/error.hpp"

namespace radanon {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Fractional overlap weights of output cells over input cells along one axis.
struct AxisWeights {
  std::vector<std::size_t> first;
  std::vector<std::vector<double>> w;
};

AxisWeights MakeAxisWeights(std::size_t in, std::size_t out) {
  AxisWeights a;
  a.first.resize(out);
  a.w.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double lo = o * ratio;
    const double hi = (o + 1) * ratio;
    const auto i0 = static_cast<std::size_t>(std::floor(lo));
    const auto i1 = std::min(in, static_cast<std::size_t>(std::ceil(hi)));
    a.first[o] = i0;
    double total = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
      const double cover =
          std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
      a.w[o].push_back(std::max(0.0, cover));
      total += a.w[o].back();
    }
    for (double& v : a.w[o]) v /= total;
  }
  return a;
}

}  // namespace

Image LoadPng(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("png: cannot open " + path);
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8)) {
    throw IoError("png: " + path + " is not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: out of memory");
  }
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: decode failed for " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t w = png_get_image_width(png, info);
  const std::size_t h = png_get_image_height(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * h);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) img.at(y, x) = rows[y][x] / 255.0;
  return img;
}

void SavePng(const Image& image, const std::string& path) {
  if (image.empty()) throw InvalidArgument("png: refusing to write empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("png: cannot open " + path + " for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: out of memory");
  }
  std::vector<unsigned char> buffer(image.width * image.height);
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    buffer[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::vector<png_bytep> rows(image.height);
  for (std::size_t y = 0; y < image.height; ++y) rows[y] = buffer.data() + y * image.width;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encode failed for " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image ResizeArea(const Image& image, std::size_t side) {
  if (side == 0 || image.empty()) {
    throw InvalidArgument("resize: empty input or zero target side");
  }
  const AxisWeights wy = MakeAxisWeights(image.height, side);
  const AxisWeights wx = MakeAxisWeights(image.width, side);
  // Horizontal pass then vertical pass.
  Image tmp(image.height, side);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t ox = 0; ox < side; ++ox) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wx.w[ox].size(); ++k)
        acc += wx.w[ox][k] * image.at(y, wx.first[ox] + k);
      tmp.at(y, ox) = acc;
    }
  Image out(side, side);
  for (std::size_t oy = 0; oy < side; ++oy)
    for (std::size_t x = 0; x < side; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wy.w[oy].size(); ++k)
        acc += wy.w[oy][k] * tmp.at(wy.first[oy] + k, x);
      out.at(oy, x) = acc;
    }
  return out;
}

Tensor StackImages(std::span<const Image* const> images) {
  if (images.empty()) throw InvalidArgument("stack: no images");
  const std::size_t h = images[0]->height, w = images[0]->width;
  Tensor t({images.size(), 1, h, w});
  auto dst = t.data();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->height != h || images[i]->width != w) {
      throw InvalidArgument("stack: images differ in extent");
    }
    std::copy(images[i]->pixels.begin(), images[i]->pixels.end(),
              dst.begin() + i * h * w);
  }
  return t;
}

Tensor StackImages(std::span<const Image> images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const Image& im : images) ptrs.push_back(&im);
  return StackImages(std::span<const Image* const>(ptrs));
}

Image ImageFromTensor(const Tensor& t, std::size_t index) {
  if (t.rank() != 4 || index >= t.dim(0)) {
    throw InvalidArgument("image: cannot extract sample " +
                          std::to_string(index) + " from " +
                          ShapeString(t.shape()));
  }
  const std::size_t h = t.dim(2), w = t.dim(3);
  Image img(h, w);
  const auto src = t.data().subspan(index * t.dim(1) * h * w, h * w);
  std::copy(src.begin(), src.end(), img.pixels.begin());
  return img;
}

}  // namespace radanon
