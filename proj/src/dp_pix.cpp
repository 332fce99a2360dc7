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
#include "radanon/dp_pix.hpp"

#include <algorithm>
#include <cmath>

#include "radanon/error.hpp"

namespace radanon {

void DpPixConfig::Validate() const {
  if (b < 1) throw InvalidArgument("dp-pix: cell size b must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("dp-pix: epsilon must be finite and > 0");
  }
  if (!(m >= 1.0) || !std::isfinite(m)) {
    throw InvalidArgument("dp-pix: m must be finite and >= 1");
  }
}

double DpPixConfig::NoiseScale255() const {
  const double cell = static_cast<double>(b) * static_cast<double>(b);
  return 255.0 * m / (cell * epsilon);
}

Image Pixelize(const Image& image, std::size_t b) {
  if (b < 1) throw InvalidArgument("pixelize: cell size b must be >= 1");
  Image out(image.height, image.width);
  for (std::size_t y0 = 0; y0 < image.height; y0 += b) {
    const std::size_t y1 = std::min(image.height, y0 + b);
    for (std::size_t x0 = 0; x0 < image.width; x0 += b) {
      const std::size_t x1 = std::min(image.width, x0 + b);
      double acc = 0.0;
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) acc += image.at(y, x);
      const double mean = acc / static_cast<double>((y1 - y0) * (x1 - x0));
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) out.at(y, x) = mean;
    }
  }
  return out;
}

double LaplaceFromUniform(double u, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("laplace: scale must be > 0");
  if (!(u > -0.5 && u < 0.5)) {
    throw InvalidArgument("laplace: u must lie in (-0.5, 0.5)");
  }
  const double sign = (u > 0.0) - (u < 0.0);
  return -scale * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

double LaplaceSample(std::mt19937_64& rng, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("laplace: scale must be > 0");
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  double u = dist(rng);
  while (u <= -0.5) u = dist(rng);
  return LaplaceFromUniform(u, scale);
}

Image DpPixelize(const Image& image, const DpPixConfig& config,
                 std::mt19937_64& rng) {
  config.Validate();
  Image out = Pixelize(image, config.b);
  const double scale = config.NoiseScale();
  for (std::size_t y0 = 0; y0 < out.height; y0 += config.b) {
    const std::size_t y1 = std::min(out.height, y0 + config.b);
    for (std::size_t x0 = 0; x0 < out.width; x0 += config.b) {
      const std::size_t x1 = std::min(out.width, x0 + config.b);
      const double noise = LaplaceSample(rng, scale);
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x)
          out.at(y, x) = std::clamp(out.at(y, x) + noise, 0.0, 1.0);
    }
  }
  return out;
}

Image DpPixelize(const Image& image, const DpPixConfig& config) {
  std::mt19937_64 rng(config.seed);
  return DpPixelize(image, config, rng);
}

}  // namespace radanon
