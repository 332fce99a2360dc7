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
#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "radanon/error.hpp"
#include "radanon/tensor.hpp"

namespace radanon::ops {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void RequireRank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw InvalidArgument(std::string(op) + ": expected rank " +
                          std::to_string(rank) + ", got shape " +
                          ShapeString(t.shape()));
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " +
                          ShapeString(a.shape()) + " vs " +
                          ShapeString(b.shape()));
  }
}

// Applies f(x) elementwise; backward multiplies by df computed from (x, y).
template <typename Fwd, typename Deriv>
Tensor Unary(Graph& g, const Tensor& x, Fwd f, Deriv df) {
  Tensor out(x.shape());
  auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
  if (g.Tracks({&x})) {
    out.set_requires_grad(true);
    g.Push([x, out, df]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      auto xv = std::as_const(x).data();
      auto yv = std::as_const(out).data();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
    });
  }
  return out;
}

// Unrolls one sample [C,H,W] into columns [C*kh*kw, Ho*Wo].
void Im2Col(const double* x, std::size_t c, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride,
            std::size_t pad, std::size_t ho, std::size_t wo, double* col) {
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        double* row = col + ((ci * kh + ki) * kw + kj) * ho * wo;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const long iy = static_cast<long>(oy * stride + ki) - static_cast<long>(pad);
          double* dst = row + oy * wo;
          if (iy < 0 || iy >= static_cast<long>(h)) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = x + (ci * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const long ix = static_cast<long>(ox * stride + kj) - static_cast<long>(pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void Col2ImAdd(const double* col, std::size_t c, std::size_t h, std::size_t w,
               std::size_t kh, std::size_t kw, std::size_t stride,
               std::size_t pad, std::size_t ho, std::size_t wo, double* x) {
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        const double* row = col + ((ci * kh + ki) * kw + kj) * ho * wo;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const long iy = static_cast<long>(oy * stride + ki) - static_cast<long>(pad);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          double* dst = x + (ci * h + static_cast<std::size_t>(iy)) * w;
          const double* src = row + oy * wo;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const long ix = static_cast<long>(ox * stride + kj) - static_cast<long>(pad);
            if (ix >= 0 && ix < static_cast<long>(w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(Graph& g, const Tensor& input, const Tensor& kernel,
              std::size_t stride, std::size_t padding) {
  RequireRank(input, 4, "conv2d");
  RequireRank(kernel, 4, "conv2d");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2),
                    w = input.dim(3);
  const std::size_t k = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != c) {
    throw InvalidArgument("conv2d: kernel " + ShapeString(kernel.shape()) +
                          " expects " + std::to_string(kernel.dim(1)) +
                          " input channels, input " +
                          ShapeString(input.shape()) + " has " +
                          std::to_string(c));
  }
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw InvalidArgument("conv2d: kernel extents must be odd, got " +
                          ShapeString(kernel.shape()));
  }
  if (stride == 0) throw InvalidArgument("conv2d: stride must be positive");
  if (h + 2 * padding < kh || w + 2 * padding < kw) {
    throw InvalidArgument("conv2d: kernel larger than padded input");
  }
  if ((h + 2 * padding - kh) % stride != 0 ||
      (w + 2 * padding - kw) % stride != 0) {
    throw InvalidArgument("conv2d: output extent is not integral for input " +
                          ShapeString(input.shape()) + ", stride " +
                          std::to_string(stride) + ", padding " +
                          std::to_string(padding));
  }
  const std::size_t ho = (h + 2 * padding - kh) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kw) / stride + 1;
  const std::size_t ckk = c * kh * kw;
  const std::size_t hw = ho * wo;
  const bool direct = kh == 1 && kw == 1 && stride == 1 && padding == 0;

  Tensor out({n, k, ho, wo});
  ConstMapMat wmat(kernel.data().data(), k, ckk);
  AlignedBuffer col(direct ? 0 : ckk * hw);
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = input.data().data() + s * c * h * w;
    const double* cp = xs;
    if (!direct) {
      Im2Col(xs, c, h, w, kh, kw, stride, padding, ho, wo, col.data());
      cp = col.data();
    }
    MapMat(out.data().data() + s * k * hw, k, hw).noalias() =
        wmat * ConstMapMat(cp, ckk, hw);
  }

  if (g.Tracks({&input, &kernel})) {
    out.set_requires_grad(true);
    g.Push([input, kernel, out, n, c, h, w, k, kh, kw, ho, wo, ckk, hw, stride,
            padding, direct]() mutable {
      if (!out.has_grad()) return;
      const double* gy = std::as_const(out).grad().data();
      const bool need_w = kernel.requires_grad();
      const bool need_x = input.requires_grad();
      AlignedBuffer col(direct ? 0 : ckk * hw);
      AlignedBuffer dcol(direct ? 0 : ckk * hw);
      ConstMapMat wmat(std::as_const(kernel).data().data(), k, ckk);
      for (std::size_t s = 0; s < n; ++s) {
        ConstMapMat gys(gy + s * k * hw, k, hw);
        const double* xs = std::as_const(input).data().data() + s * c * h * w;
        if (need_w) {
          const double* cp = xs;
          if (!direct) {
            Im2Col(xs, c, h, w, kh, kw, stride, padding, ho, wo, col.data());
            cp = col.data();
          }
          MapMat(kernel.ensure_grad().data(), k, ckk).noalias() +=
              gys * ConstMapMat(cp, ckk, hw).transpose();
        }
        if (need_x) {
          double* gx = input.ensure_grad().data() + s * c * h * w;
          if (direct) {
            MapMat(gx, ckk, hw).noalias() += wmat.transpose() * gys;
          } else {
            MapMat(dcol.data(), ckk, hw).noalias() = wmat.transpose() * gys;
            Col2ImAdd(dcol.data(), c, h, w, kh, kw, stride, padding, ho, wo, gx);
          }
        }
      }
    });
  }
  return out;
}

Tensor bias_add(Graph& g, const Tensor& x, const Tensor& bias) {
  if (x.rank() < 2) throw InvalidArgument("bias_add: input rank must be >= 2");
  RequireRank(bias, 1, "bias_add");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (bias.dim(0) != c) {
    throw InvalidArgument("bias_add: bias " + ShapeString(bias.shape()) +
                          " does not match channels of " +
                          ShapeString(x.shape()));
  }
  const std::size_t inner = x.size() / (n * c);
  Tensor out(x.shape());
  auto xv = x.data();
  auto bv = bias.data();
  auto yv = out.data();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (s * c + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) yv[base + i] = xv[base + i] + bv[ch];
    }
  if (g.Tracks({&x, &bias})) {
    out.set_requires_grad(true);
    g.Push([x, bias, out, n, c, inner]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      if (x.requires_grad()) {
        auto gx = x.ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.ensure_grad();
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t base = (s * c + ch) * inner;
            double acc = 0.0;
            for (std::size_t i = 0; i < inner; ++i) acc += gy[base + i];
            gb[ch] += acc;
          }
      }
    });
  }
  return out;
}

Tensor dense(Graph& g, const Tensor& x, const Tensor& weight,
             const Tensor& bias) {
  RequireRank(x, 2, "dense");
  RequireRank(weight, 2, "dense");
  RequireRank(bias, 1, "dense");
  const std::size_t n = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in || bias.dim(0) != out_dim) {
    throw InvalidArgument("dense: input " + ShapeString(x.shape()) +
                          ", weight " + ShapeString(weight.shape()) +
                          ", bias " + ShapeString(bias.shape()) +
                          " are incompatible");
  }
  Tensor out({n, out_dim});
  ConstMapMat xm(x.data().data(), n, in);
  ConstMapMat wm(weight.data().data(), out_dim, in);
  Eigen::Map<const Eigen::RowVectorXd> bv(bias.data().data(), out_dim);
  MapMat ym(out.data().data(), n, out_dim);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += bv;
  if (g.Tracks({&x, &weight, &bias})) {
    out.set_requires_grad(true);
    g.Push([x, weight, bias, out, n, in, out_dim]() mutable {
      if (!out.has_grad()) return;
      ConstMapMat gy(std::as_const(out).grad().data(), n, out_dim);
      if (x.requires_grad()) {
        MapMat(x.ensure_grad().data(), n, in).noalias() +=
            gy * ConstMapMat(std::as_const(weight).data().data(), out_dim, in);
      }
      if (weight.requires_grad()) {
        MapMat(weight.ensure_grad().data(), out_dim, in).noalias() +=
            gy.transpose() * ConstMapMat(std::as_const(x).data().data(), n, in);
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::RowVectorXd>(bias.ensure_grad().data(), out_dim) +=
            gy.colwise().sum();
      }
    });
  }
  return out;
}

Tensor relu(Graph& g, const Tensor& x) {
  return Unary(
      g, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(Graph& g, const Tensor& x) {
  return Unary(
      g, x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Graph& g, const Tensor& x) {
  return Unary(
      g, x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor abs(Graph& g, const Tensor& x) {
  return Unary(
      g, x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor max_pool2x2(Graph& g, const Tensor& x) {
  RequireRank(x, 4, "max_pool2x2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) {
    throw InvalidArgument("max_pool2x2: spatial extents must be even, got " +
                          ShapeString(x.shape()));
  }
  const std::size_t ho = h / 2, wo = w / 2;
  Tensor out({n, c, ho, wo});
  std::vector<std::size_t> argmax(out.size());
  auto xv = x.data();
  auto yv = out.data();
  for (std::size_t p = 0; p < n * c; ++p) {
    const std::size_t in_base = p * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = in_base + (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = in_base + (2 * oy + dy) * w + 2 * ox + dx;
            if (xv[idx] > xv[best]) best = idx;
          }
        const std::size_t o = p * ho * wo + oy * wo + ox;
        yv[o] = xv[best];
        argmax[o] = best;
      }
  }
  if (g.Tracks({&x})) {
    out.set_requires_grad(true);
    g.Push([x, out, argmax = std::move(argmax)]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      auto gx = x.ensure_grad();
      for (std::size_t o = 0; o < gy.size(); ++o) gx[argmax[o]] += gy[o];
    });
  }
  return out;
}

Tensor upsample_nearest2x(Graph& g, const Tensor& x) {
  RequireRank(x, 4, "upsample_nearest2x");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out({n, c, 2 * h, 2 * w});
  auto xv = x.data();
  auto yv = out.data();
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        yv[(p * 2 * h + y) * 2 * w + xx] = xv[(p * h + y / 2) * w + xx / 2];
  if (g.Tracks({&x})) {
    out.set_requires_grad(true);
    g.Push([x, out, n, c, h, w]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      auto gx = x.ensure_grad();
      for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t y = 0; y < 2 * h; ++y)
          for (std::size_t xx = 0; xx < 2 * w; ++xx)
            gx[(p * h + y / 2) * w + xx / 2] += gy[(p * 2 * h + y) * 2 * w + xx];
    });
  }
  return out;
}

Tensor global_avg_pool(Graph& g, const Tensor& x) {
  RequireRank(x, 4, "global_avg_pool");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor out({n, c});
  auto xv = x.data();
  auto yv = out.data();
  for (std::size_t p = 0; p < n * c; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += xv[p * hw + i];
    yv[p] = acc / static_cast<double>(hw);
  }
  if (g.Tracks({&x})) {
    out.set_requires_grad(true);
    g.Push([x, out, n, c, hw]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      auto gx = x.ensure_grad();
      const double inv = 1.0 / static_cast<double>(hw);
      for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t i = 0; i < hw; ++i) gx[p * hw + i] += gy[p] * inv;
    });
  }
  return out;
}

namespace {

// out = alpha * a + beta * b
Tensor Axpby(Graph& g, const Tensor& a, const Tensor& b, double alpha,
             double beta, const char* op) {
  RequireSameShape(a, b, op);
  Tensor out(a.shape());
  auto av = a.data();
  auto bv = b.data();
  auto yv = out.data();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = alpha * av[i] + beta * bv[i];
  if (g.Tracks({&a, &b})) {
    out.set_requires_grad(true);
    g.Push([a, b, out, alpha, beta]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += alpha * gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += beta * gy[i];
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  return Axpby(g, a, b, 1.0, 1.0, "add");
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
  return Axpby(g, a, b, 1.0, -1.0, "sub");
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  Tensor out(a.shape());
  auto av = a.data();
  auto bv = b.data();
  auto yv = out.data();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[i];
  if (g.Tracks({&a, &b})) {
    out.set_requires_grad(true);
    g.Push([a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      auto av = std::as_const(a).data();
      auto bv = std::as_const(b).data();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(Graph& g, const Tensor& x, double factor) {
  return Unary(
      g, x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor concat_channels(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || a.rank() != b.rank() || a.dim(0) != b.dim(0)) {
    throw InvalidArgument("concat_channels: incompatible shapes " +
                          ShapeString(a.shape()) + " and " +
                          ShapeString(b.shape()));
  }
  for (std::size_t ax = 2; ax < a.rank(); ++ax) {
    if (a.dim(ax) != b.dim(ax)) {
      throw InvalidArgument("concat_channels: incompatible shapes " +
                            ShapeString(a.shape()) + " and " +
                            ShapeString(b.shape()));
    }
  }
  const std::size_t n = a.dim(0);
  const std::size_t sa = a.size() / n, sb = b.size() / n;
  Shape shape = a.shape();
  shape[1] += b.dim(1);
  Tensor out(shape);
  auto av = a.data();
  auto bv = b.data();
  auto yv = out.data();
  for (std::size_t s = 0; s < n; ++s) {
    std::copy_n(av.begin() + s * sa, sa, yv.begin() + s * (sa + sb));
    std::copy_n(bv.begin() + s * sb, sb, yv.begin() + s * (sa + sb) + sa);
  }
  if (g.Tracks({&a, &b})) {
    out.set_requires_grad(true);
    g.Push([a, b, out, n, sa, sb]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t i = 0; i < sa; ++i) ga[s * sa + i] += gy[s * (sa + sb) + i];
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t i = 0; i < sb; ++i)
            gb[s * sb + i] += gy[s * (sa + sb) + sa + i];
      }
    });
  }
  return out;
}

Tensor reshape(Graph& g, const Tensor& x, Shape shape) {
  if (ShapeSize(shape) != x.size()) {
    throw InvalidArgument("reshape: cannot view " + ShapeString(x.shape()) +
                          " as " + ShapeString(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (g.Tracks({&x})) {
    out.set_requires_grad(true);
    g.Push([x, out]() mutable {
      if (!out.has_grad()) return;
      auto gy = std::as_const(out).grad();
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
    });
  }
  return out;
}

Tensor sum(Graph& g, const Tensor& x) {
  Tensor out({1});
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.data()[0] = acc;
  if (g.Tracks({&x})) {
    out.set_requires_grad(true);
    g.Push([x, out]() mutable {
      if (!out.has_grad()) return;
      const double gy = std::as_const(out).grad()[0];
      for (double& v : x.ensure_grad()) v += gy;
    });
  }
  return out;
}

Tensor mean(Graph& g, const Tensor& x) {
  return scale(g, sum(g, x), 1.0 / static_cast<double>(x.size()));
}

Tensor mse(Graph& g, const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mse");
  Tensor out({1});
  auto av = a.data();
  auto bv = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(av.size());
  out.data()[0] = acc * inv_n;
  if (g.Tracks({&a, &b})) {
    out.set_requires_grad(true);
    g.Push([a, b, out, inv_n]() mutable {
      if (!out.has_grad()) return;
      const double gy = std::as_const(out).grad()[0];
      auto av = std::as_const(a).data();
      auto bv = std::as_const(b).data();
      if (a.requires_grad()) {
        auto ga = a.ensure_grad();
        for (std::size_t i = 0; i < ga.size(); ++i)
          ga[i] += gy * 2.0 * (av[i] - bv[i]) * inv_n;
      }
      if (b.requires_grad()) {
        auto gb = b.ensure_grad();
        for (std::size_t i = 0; i < gb.size(); ++i)
          gb[i] -= gy * 2.0 * (av[i] - bv[i]) * inv_n;
      }
    });
  }
  return out;
}

}  // namespace radanon::ops
