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
// Flow-field mathematics for deformation-based anonymisation.
//
// Coordinates are normalised to [-1,1] with pixel centres at (2i+1)/S - 1
// (the "align corners = false" convention). Channel 0 of a field holds the x
// (column) sampling coordinate, channel 1 the y (row) coordinate. Samples
// falling outside the image clamp to the border.
#ifndef RADANON_WARP_HPP_
#define RADANON_WARP_HPP_

#include <cstddef>
#include <vector>

#include "radanon/image.hpp"
#include "radanon/tensor.hpp"

namespace radanon {

// Two-channel sampling grid [2,S,S], row-major per channel.
struct FlowField {
  std::size_t side = 0;
  std::vector<double> grid;
  // Deformation degree the field was constrained with (0 for raw fields).
  double mu = 0.0;

  FlowField() = default;
  explicit FlowField(std::size_t s, double fill = 0.0)
      : side(s), grid(2 * s * s, fill) {}

  double& x(std::size_t row, std::size_t col) { return grid[row * side + col]; }
  double& y(std::size_t row, std::size_t col) {
    return grid[side * side + row * side + col];
  }
  double x(std::size_t row, std::size_t col) const { return grid[row * side + col]; }
  double y(std::size_t row, std::size_t col) const {
    return grid[side * side + row * side + col];
  }
};

// Normalised 1-D Gaussian taps exp(-k^2 / (2 sigma^2)), k = -r..r.
struct GaussianKernel {
  std::size_t size = 0;
  double sigma = 0.0;
  std::vector<double> weights;

  // Throws for even or zero size and non-positive sigma.
  static GaussianKernel Make(std::size_t size, double sigma);
};

inline constexpr std::size_t kFlowKernelSize = 9;
inline constexpr double kFlowKernelSigma = 2.0;

// Normalised coordinate of pixel centre i on an axis with `side` pixels.
double PixelCenter(std::size_t i, std::size_t side);

FlowField IdentityGrid(std::size_t side);

// identity - mu * raw, per channel. `raw` is expected in [-1,1].
FlowField ConstrainFlow(const FlowField& raw, double mu);

// Separable Gaussian filtering of both channels with edge replication.
FlowField GaussianSmooth(const FlowField& flow, const GaussianKernel& kernel);

// Turns a raw generator field into the sampling grid used for warping:
// the raw field is smoothed, then constrained around the identity. Because
// smoothing is linear this equals smoothing the displacement from identity,
// which keeps |grid - identity| <= mu and leaves the identity untouched at
// the borders.
FlowField ConstrainedSmoothFlow(const FlowField& raw, double mu,
                                const GaussianKernel& kernel);

// Bilinear resampling of `image` at the coordinates of `flow`.
Image ApplyFlow(const Image& image, const FlowField& flow);

// |x - fx| elementwise.
Image DifferenceMap(const Image& x, const Image& fx);

// Largest |flow - identity| over both channels.
double MaxDeviationFromIdentity(const FlowField& flow);

FlowField FlowFromTensor(const Tensor& t, std::size_t index);
Tensor FlowToTensor(const FlowField& flow);

namespace warp_ops {

// Identity grid replicated over a batch: [n,2,side,side].
Tensor IdentityGrid(std::size_t n, std::size_t side);

// identity - mu * raw for raw [N,2,S,S].
Tensor ConstrainFlow(Graph& g, const Tensor& raw, double mu);

// Separable smoothing of every channel of [N,C,H,W] with edge replication.
Tensor GaussianSmooth(Graph& g, const Tensor& field,
                      const GaussianKernel& kernel);

// ConstrainFlow(GaussianSmooth(raw), mu).
Tensor SamplingGrid(Graph& g, const Tensor& raw, double mu,
                    const GaussianKernel& kernel);

// Bilinear sampling of images [N,C,H,W] at grid [N,2,H,W] with border
// clamping. Differentiable with respect to both inputs; the grid gradient is
// zero where a coordinate is clamped.
Tensor GridSample(Graph& g, const Tensor& images, const Tensor& grid);

}  // namespace warp_ops

}  // namespace radanon

#endif  // RADANON_WARP_HPP_
