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
//
// Differentially private pixelization: b x b cell averaging followed by
// Laplace noise with scale 255 m / (b^2 epsilon) in 8-bit intensity units.
#ifndef RADANON_DP_PIX_HPP_
#define RADANON_DP_PIX_HPP_

#include <cstddef>
#include <cstdint>
#include <random>

#include "radanon/image.hpp"

namespace radanon {

struct DpPixConfig {
  std::size_t b = 8;       // cell size in pixels
  double epsilon = 0.1;    // privacy budget
  double m = 1.0;          // neighbourhood sensitivity factor
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless b >= 1, epsilon > 0 and m >= 1.
  void Validate() const;
  // Laplace scale in 8-bit intensity units.
  double NoiseScale255() const;
  // Laplace scale in [0,1] intensity units.
  double NoiseScale() const { return NoiseScale255() / 255.0; }
};

// Replaces every pixel by the mean of its b x b cell. Cells at the right and
// bottom edges average over their actual (possibly smaller) extent.
Image Pixelize(const Image& image, std::size_t b);

// Inverse-CDF Laplace transform of u in (-0.5, 0.5):
//   -scale * sign(u) * ln(1 - 2|u|).
double LaplaceFromUniform(double u, double scale);
// Draws one Laplace(0, scale) variate.
double LaplaceSample(std::mt19937_64& rng, double scale);

// Pixelizes, adds one Laplace draw per cell (shared by the cell's pixels),
// and clips to [0,1]. Deterministic for a given config seed.
Image DpPixelize(const Image& image, const DpPixConfig& config);

// Same as DpPixelize but drawing noise from a caller-owned generator.
Image DpPixelize(const Image& image, const DpPixConfig& config,
                 std::mt19937_64& rng);

}  // namespace radanon

#endif  // RADANON_DP_PIX_HPP_
