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
#ifndef RADANON_IMAGE_HPP_
#define RADANON_IMAGE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "radanon/tensor.hpp"

namespace radanon {

// Gray-scale image, row-major, intensities nominally in [0,1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool empty() const { return pixels.empty(); }
  bool SameExtent(const Image& o) const {
    return height == o.height && width == o.width;
  }
};

// Reads any PNG, converting to 8-bit gray, scaled to [0,1].
Image LoadPng(const std::string& path);
// Writes an 8-bit gray PNG; values are clamped to [0,1] and rounded.
void SavePng(const Image& image, const std::string& path);

// Area-average (box filter) resampling to side x side; every output pixel is
// the coverage-weighted mean of the input pixels under its footprint.
Image ResizeArea(const Image& image, std::size_t side);

// Packs equally sized images into a [N,1,H,W] tensor.
Tensor StackImages(std::span<const Image> images);
Tensor StackImages(std::span<const Image* const> images);
// Extracts sample `index` (channel 0) of a [N,C,H,W] tensor.
Image ImageFromTensor(const Tensor& t, std::size_t index);

}  // namespace radanon

#endif  // RADANON_IMAGE_HPP_
