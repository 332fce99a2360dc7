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
// Dense double-precision tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a handle onto shared storage holding values and (optionally) a
// gradient buffer. Copying a Tensor copies the handle, not the numbers; use
// clone() for a deep copy. Operations live in radanon::ops and record their
// backward closures onto an explicit Graph, so several models can be driven
// through independent graphs at the same time.
#ifndef RADANON_TENSOR_HPP_
#define RADANON_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/align/aligned_allocator.hpp>

namespace radanon {

using Shape = std::vector<std::size_t>;

// Cache-line aligned storage. Vectorized kernels pick their scalar prologue
// from the buffer address, so a fixed alignment keeps results independent of
// where a buffer happens to land.
using AlignedBuffer =
    std::vector<double, boost::alignment::aligned_allocator<double, 64>>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

class Tensor {
 public:
  // An undefined tensor; most accessors throw on it.
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<double> data();
  std::span<const double> data() const;
  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);

  bool has_grad() const;
  std::span<double> grad();
  std::span<const double> grad() const;
  // Allocates a zero gradient buffer when none exists and returns it. The
  // buffer belongs to the shared storage, so this works through any handle;
  // backward closures accumulate into it.
  std::span<double> ensure_grad() const;
  void zero_grad();
  void clear_grad();

  // Deep copy of the values; the copy carries no gradient and is not tracked.
  Tensor detach() const;
  // Deep copy of values and requires_grad flag (gradient dropped).
  Tensor clone() const;
  bool same_storage(const Tensor& other) const {
    return storage_ == other.storage_;
  }

 private:
  struct Storage {
    Shape shape;
    AlignedBuffer data;
    AlignedBuffer grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
};

// Records the backward closures of executed operations in execution order.
// backward() replays them in exact reverse order. A graph supports a single
// backward pass; a second call is an error.
class Graph {
 public:
  enum class Mode { kRecord, kInference };

  explicit Graph(Mode mode = Mode::kRecord) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  bool recording() const { return mode_ == Mode::kRecord; }

  // True when an op over `inputs` must be taped: the graph records and at
  // least one input participates in differentiation.
  bool Tracks(std::initializer_list<const Tensor*> inputs) const;

  void Push(std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss) = 1 and runs the tape backwards. Gradients are
  // accumulated (+=) into every tracked tensor.
  void Backward(const Tensor& loss);

  std::size_t num_ops() const { return tape_.size(); }
  bool consumed() const { return consumed_; }

 private:
  Mode mode_;
  std::vector<std::function<void()>> tape_;
  bool consumed_ = false;
};

namespace ops {

// Cross-correlation. input [N,C,H,W], kernel [K,C,kh,kw] -> [N,K,H',W'].
Tensor conv2d(Graph& g, const Tensor& input, const Tensor& kernel,
              std::size_t stride = 1, std::size_t padding = 0);
// Adds a per-channel bias [C] to x [N,C,...].
Tensor bias_add(Graph& g, const Tensor& x, const Tensor& bias);
// x [N,in], weight [out,in], bias [out] -> [N,out].
Tensor dense(Graph& g, const Tensor& x, const Tensor& weight,
             const Tensor& bias);

Tensor relu(Graph& g, const Tensor& x);
Tensor tanh(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);
Tensor abs(Graph& g, const Tensor& x);

// [N,C,H,W] -> [N,C,H/2,W/2]; H and W must be even.
Tensor max_pool2x2(Graph& g, const Tensor& x);
// [N,C,H,W] -> [N,C,2H,2W].
Tensor upsample_nearest2x(Graph& g, const Tensor& x);
// [N,C,H,W] -> [N,C].
Tensor global_avg_pool(Graph& g, const Tensor& x);

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& x, double factor);
// Concatenates along axis 1 ([N,Ca,...] + [N,Cb,...] -> [N,Ca+Cb,...]).
Tensor concat_channels(Graph& g, const Tensor& a, const Tensor& b);
Tensor reshape(Graph& g, const Tensor& x, Shape shape);

Tensor sum(Graph& g, const Tensor& x);
Tensor mean(Graph& g, const Tensor& x);
// Mean squared error over all elements.
Tensor mse(Graph& g, const Tensor& a, const Tensor& b);

}  // namespace ops

// Named, ordered parameter collection (one per network).
class ParamSet {
 public:
  // Registers a new trainable tensor. Names must be unique.
  Tensor& Add(std::string name, Tensor tensor);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  Tensor& at(std::size_t i) { return entries_[i].second; }
  const Tensor& at(std::size_t i) const { return entries_[i].second; }
  // Throws when the name is unknown.
  Tensor& Get(const std::string& name);
  const Tensor& Get(const std::string& name) const;

  std::size_t NumScalars() const;
  void ZeroGrad();
  void ClearGrad();
  void SetRequiresGrad(bool on);
  // Deep copy; the copy owns separate storage.
  ParamSet Clone() const;
  // Copies values from `other`, which must have identical names and shapes.
  void CopyValuesFrom(const ParamSet& other);

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Kaiming-uniform (fan-in) initialisation: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor KaimingUniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Holds first/second moment state for one
// ParamSet; the set must outlive the optimiser.
class Adam {
 public:
  Adam(ParamSet& params, AdamConfig config);

  // Applies one update from the current gradients. Every parameter must have
  // a populated gradient.
  void Step();
  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  ParamSet* params_;
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Named-tensor container: magic "DANV1", little-endian u32/u64 headers and
// f64 payloads. Used for model checkpoints and exported flow fields.
void SaveTensors(const std::string& path, const NamedTensors& tensors);
NamedTensors LoadTensors(const std::string& path);

// Appends every parameter of `params` to `out` under prefix + name.
void CollectParams(const ParamSet& params, const std::string& prefix,
                   NamedTensors& out);
// Copies values for every parameter of `params` from `tensors`, matched by
// prefix + name. Missing names or shape mismatches throw.
void AssignParams(const NamedTensors& tensors, const std::string& prefix,
                  ParamSet& params);

}  // namespace radanon

#endif  // RADANON_TENSOR_HPP_
