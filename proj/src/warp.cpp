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
#include "radanon/warp.hpp"

#include <algorithm>
#include <cmath>

#include "radanon/error.hpp"

namespace radanon {

GaussianKernel GaussianKernel::Make(std::size_t size, double sigma) {
  if (size == 0 || size % 2 == 0) {
    throw InvalidArgument("gaussian kernel: size must be odd, got " +
                          std::to_string(size));
  }
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian kernel: sigma must be > 0");
  GaussianKernel k;
  k.size = size;
  k.sigma = sigma;
  k.weights.resize(size);
  const long r = static_cast<long>(size / 2);
  double total = 0.0;
  for (long i = -r; i <= r; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k.weights[static_cast<std::size_t>(i + r)] = v;
    total += v;
  }
  for (double& v : k.weights) v /= total;
  return k;
}

double PixelCenter(std::size_t i, std::size_t side) {
  return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(side) - 1.0;
}

FlowField IdentityGrid(std::size_t side) {
  if (side < 2) throw InvalidArgument("identity grid: side must be >= 2");
  FlowField f(side);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      f.x(r, c) = PixelCenter(c, side);
      f.y(r, c) = PixelCenter(r, side);
    }
  return f;
}

FlowField FlowFromTensor(const Tensor& t, std::size_t index) {
  if (t.rank() != 4 || t.dim(1) != 2 || t.dim(2) != t.dim(3) ||
      index >= t.dim(0)) {
    throw InvalidArgument("flow: cannot extract sample from " +
                          ShapeString(t.shape()));
  }
  FlowField f(t.dim(2));
  const auto src = t.data().subspan(index * f.grid.size(), f.grid.size());
  std::copy(src.begin(), src.end(), f.grid.begin());
  return f;
}

Tensor FlowToTensor(const FlowField& flow) {
  if (flow.grid.size() != 2 * flow.side * flow.side) {
    throw InvalidArgument("flow: grid size does not match side");
  }
  return Tensor({1, 2, flow.side, flow.side}, flow.grid);
}

FlowField ConstrainFlow(const FlowField& raw, double mu) {
  Graph g(Graph::Mode::kInference);
  FlowField out = FlowFromTensor(warp_ops::ConstrainFlow(g, FlowToTensor(raw), mu), 0);
  out.mu = mu;
  return out;
}

FlowField GaussianSmooth(const FlowField& flow, const GaussianKernel& kernel) {
  Graph g(Graph::Mode::kInference);
  FlowField out =
      FlowFromTensor(warp_ops::GaussianSmooth(g, FlowToTensor(flow), kernel), 0);
  out.mu = flow.mu;
  return out;
}

FlowField ConstrainedSmoothFlow(const FlowField& raw, double mu,
                                const GaussianKernel& kernel) {
  Graph g(Graph::Mode::kInference);
  FlowField out =
      FlowFromTensor(warp_ops::SamplingGrid(g, FlowToTensor(raw), mu, kernel), 0);
  out.mu = mu;
  return out;
}

Image ApplyFlow(const Image& image, const FlowField& flow) {
  if (image.height != flow.side || image.width != flow.side) {
    throw InvalidArgument("apply_flow: image is " + std::to_string(image.height) +
                          "x" + std::to_string(image.width) + ", flow is " +
                          std::to_string(flow.side) + "x" +
                          std::to_string(flow.side));
  }
  Graph g(Graph::Mode::kInference);
  const Tensor img({1, 1, image.height, image.width}, image.pixels);
  return ImageFromTensor(warp_ops::GridSample(g, img, FlowToTensor(flow)), 0);
}

Image DifferenceMap(const Image& x, const Image& fx) {
  if (!x.SameExtent(fx)) {
    throw InvalidArgument("difference_map: images differ in extent");
  }
  Image out(x.height, x.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::fabs(x.pixels[i] - fx.pixels[i]);
  }
  return out;
}

double MaxDeviationFromIdentity(const FlowField& flow) {
  const FlowField id = IdentityGrid(flow.side);
  double worst = 0.0;
  for (std::size_t i = 0; i < id.grid.size(); ++i) {
    worst = std::max(worst, std::fabs(flow.grid[i] - id.grid[i]));
  }
  return worst;
}

namespace warp_ops {

namespace {

void RequireFlowShape(const Tensor& t, const char* op) {
  if (t.rank() != 4 || t.dim(1) != 2) {
    throw InvalidArgument(std::string(op) + ": expected [N,2,H,W], got " +
                          ShapeString(t.shape()));
  }
}

// One separable pass along rows (horizontal) or columns with edge
// replication. The transpose pass scatters instead of gathering and is the
// exact adjoint of the forward pass.
void SmoothPass(std::span<const double> in, std::span<double> out,
                std::size_t planes, std::size_t h, std::size_t w,
                const std::vector<double>& taps, bool horizontal,
                bool transpose) {
  const long r = static_cast<long>(taps.size() / 2);
  const long extent = static_cast<long>(horizontal ? w : h);
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t here = base + y * w + x;
        const long pos = static_cast<long>(horizontal ? x : y);
        for (long k = -r; k <= r; ++k) {
          const double wt = taps[static_cast<std::size_t>(k + r)];
          const auto q = static_cast<std::size_t>(std::clamp(pos + k, 0L, extent - 1));
          const std::size_t there = horizontal ? base + y * w + q : base + q * w + x;
          if (transpose) {
            out[there] += wt * in[here];
          } else {
            out[here] += wt * in[there];
          }
        }
      }
  }
}

}  // namespace

Tensor IdentityGrid(std::size_t n, std::size_t side) {
  const FlowField id = radanon::IdentityGrid(side);
  Tensor t({n, 2, side, side});
  auto dst = t.data();
  for (std::size_t s = 0; s < n; ++s) {
    std::copy(id.grid.begin(), id.grid.end(), dst.begin() + s * id.grid.size());
  }
  return t;
}

Tensor ConstrainFlow(Graph& g, const Tensor& raw, double mu) {
  RequireFlowShape(raw, "constrain_flow");
  if (mu < 0.0 || !std::isfinite(mu)) {
    throw InvalidArgument("constrain_flow: mu must be finite and >= 0");
  }
  if (raw.dim(2) != raw.dim(3)) {
    throw InvalidArgument("constrain_flow: field must be square");
  }
  const Tensor id = IdentityGrid(raw.dim(0), raw.dim(2));
  return ops::sub(g, id, ops::scale(g, raw, mu));
}

Tensor GaussianSmooth(Graph& g, const Tensor& field,
                      const GaussianKernel& kernel) {
  if (field.rank() != 4) {
    throw InvalidArgument("gaussian_smooth: expected [N,C,H,W], got " +
                          ShapeString(field.shape()));
  }
  if (kernel.size % 2 == 0 || kernel.weights.size() != kernel.size) {
    throw InvalidArgument("gaussian_smooth: kernel size must be odd");
  }
  const std::size_t planes = field.dim(0) * field.dim(1);
  const std::size_t h = field.dim(2), w = field.dim(3);
  std::vector<double> tmp(field.size(), 0.0);
  Tensor out(field.shape());
  SmoothPass(field.data(), tmp, planes, h, w, kernel.weights, true, false);
  SmoothPass(tmp, out.data(), planes, h, w, kernel.weights, false, false);
  if (g.Tracks({&field})) {
    out.set_requires_grad(true);
    g.Push([field, out, planes, h, w, taps = kernel.weights]() mutable {
      if (!out.has_grad()) return;
      std::vector<double> tmp(field.size(), 0.0);
      SmoothPass(std::as_const(out).grad(), tmp, planes, h, w, taps, false, true);
      SmoothPass(tmp, field.ensure_grad(), planes, h, w, taps, true, true);
    });
  }
  return out;
}

Tensor SamplingGrid(Graph& g, const Tensor& raw, double mu,
                    const GaussianKernel& kernel) {
  return ConstrainFlow(g, GaussianSmooth(g, raw, kernel), mu);
}

Tensor GridSample(Graph& g, const Tensor& images, const Tensor& grid) {
  RequireFlowShape(grid, "grid_sample");
  if (images.rank() != 4 || images.dim(0) != grid.dim(0) ||
      images.dim(2) != grid.dim(2) || images.dim(3) != grid.dim(3)) {
    throw InvalidArgument("grid_sample: images " + ShapeString(images.shape()) +
                          " and grid " + ShapeString(grid.shape()) +
                          " differ in batch or extent");
  }
  const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2),
                    w = images.dim(3);
  const std::size_t hw = h * w;

  // Per output pixel: the four source indices and bilinear weights.
  struct Tap {
    std::size_t x0, x1, y0, y1;
    double wx, wy;
    bool clamp_x, clamp_y;
  };
  std::vector<Tap> taps(n * hw);
  auto gv = grid.data();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t p = 0; p < hw; ++p) {
      const double gx = gv[s * 2 * hw + p];
      const double gy = gv[s * 2 * hw + hw + p];
      double ix = ((gx + 1.0) * static_cast<double>(w) - 1.0) * 0.5;
      double iy = ((gy + 1.0) * static_cast<double>(h) - 1.0) * 0.5;
      Tap t{};
      t.clamp_x = ix < 0.0 || ix > static_cast<double>(w - 1);
      t.clamp_y = iy < 0.0 || iy > static_cast<double>(h - 1);
      ix = std::clamp(ix, 0.0, static_cast<double>(w - 1));
      iy = std::clamp(iy, 0.0, static_cast<double>(h - 1));
      const double fx = std::floor(ix), fy = std::floor(iy);
      t.x0 = static_cast<std::size_t>(fx);
      t.y0 = static_cast<std::size_t>(fy);
      t.x1 = std::min(t.x0 + 1, w - 1);
      t.y1 = std::min(t.y0 + 1, h - 1);
      t.wx = ix - fx;
      t.wy = iy - fy;
      taps[s * hw + p] = t;
    }

  Tensor out(images.shape());
  auto iv = images.data();
  auto ov = out.data();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* src = iv.data() + (s * c + ch) * hw;
      double* dst = ov.data() + (s * c + ch) * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        const Tap& t = taps[s * hw + p];
        const double top = (1.0 - t.wx) * src[t.y0 * w + t.x0] + t.wx * src[t.y0 * w + t.x1];
        const double bot = (1.0 - t.wx) * src[t.y1 * w + t.x0] + t.wx * src[t.y1 * w + t.x1];
        dst[p] = (1.0 - t.wy) * top + t.wy * bot;
      }
    }

  if (g.Tracks({&images, &grid})) {
    out.set_requires_grad(true);
    g.Push([images, grid, out, taps = std::move(taps), n, c, h, w, hw]() mutable {
      if (!out.has_grad()) return;
      auto go = std::as_const(out).grad();
      auto iv = std::as_const(images).data();
      const bool need_img = images.requires_grad();
      const bool need_grid = grid.requires_grad();
      std::span<double> gi = need_img ? images.ensure_grad() : std::span<double>();
      std::span<double> gg = need_grid ? grid.ensure_grad() : std::span<double>();
      // d(ix)/d(gx) = w/2, d(iy)/d(gy) = h/2.
      const double sx = 0.5 * static_cast<double>(w);
      const double sy = 0.5 * static_cast<double>(h);
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t base = (s * c + ch) * hw;
          const double* src = iv.data() + base;
          for (std::size_t p = 0; p < hw; ++p) {
            const Tap& t = taps[s * hw + p];
            const double gy = go[base + p];
            if (gy == 0.0) continue;
            if (need_img) {
              gi[base + t.y0 * w + t.x0] += gy * (1.0 - t.wx) * (1.0 - t.wy);
              gi[base + t.y0 * w + t.x1] += gy * t.wx * (1.0 - t.wy);
              gi[base + t.y1 * w + t.x0] += gy * (1.0 - t.wx) * t.wy;
              gi[base + t.y1 * w + t.x1] += gy * t.wx * t.wy;
            }
            if (need_grid) {
              const double v00 = src[t.y0 * w + t.x0], v01 = src[t.y0 * w + t.x1];
              const double v10 = src[t.y1 * w + t.x0], v11 = src[t.y1 * w + t.x1];
              if (!t.clamp_x) {
                const double dx = (1.0 - t.wy) * (v01 - v00) + t.wy * (v11 - v10);
                gg[s * 2 * hw + p] += gy * dx * sx;
              }
              if (!t.clamp_y) {
                const double dy = (1.0 - t.wx) * (v10 - v00) + t.wx * (v11 - v01);
                gg[s * 2 * hw + hw + p] += gy * dy * sy;
              }
            }
          }
        }
    });
  }
  return out;
}

}  // namespace warp_ops

}  // namespace radanon
