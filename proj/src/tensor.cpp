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
#include "radanon/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "radanon/error.hpp"

namespace radanon {

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : storage_(std::make_shared<Storage>()) {
  const std::size_t n = ShapeSize(shape);
  storage_->shape = std::move(shape);
  storage_->data.assign(n, fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : storage_(std::make_shared<Storage>()) {
  if (ShapeSize(shape) != values.size()) {
    throw InvalidArgument("tensor: shape " + ShapeString(shape) + " holds " +
                          std::to_string(ShapeSize(shape)) + " values, got " +
                          std::to_string(values.size()));
  }
  storage_->shape = std::move(shape);
  storage_->data.assign(values.begin(), values.end());
}

namespace {
void RequireDefined(bool defined) {
  if (!defined) throw StateError("tensor: access to undefined tensor");
}
}  // namespace

const Shape& Tensor::shape() const {
  RequireDefined(defined());
  return storage_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw InvalidArgument("tensor: axis " + std::to_string(axis) +
                          " out of range for shape " + ShapeString(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const {
  RequireDefined(defined());
  return storage_->data.size();
}

std::span<double> Tensor::data() {
  RequireDefined(defined());
  return storage_->data;
}

std::span<const double> Tensor::data() const {
  RequireDefined(defined());
  return storage_->data;
}

double Tensor::item() const {
  if (size() != 1) {
    throw InvalidArgument("tensor: item() on shape " + ShapeString(shape()));
  }
  return storage_->data[0];
}

bool Tensor::requires_grad() const {
  return defined() && storage_->requires_grad;
}

void Tensor::set_requires_grad(bool on) {
  RequireDefined(defined());
  storage_->requires_grad = on;
}

bool Tensor::has_grad() const {
  return defined() && !storage_->grad.empty();
}

std::span<double> Tensor::grad() {
  RequireDefined(defined());
  return storage_->grad;
}

std::span<const double> Tensor::grad() const {
  RequireDefined(defined());
  return storage_->grad;
}

std::span<double> Tensor::ensure_grad() const {
  RequireDefined(defined());
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), 0.0);
  return storage_->grad;
}

void Tensor::zero_grad() {
  if (has_grad()) std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0);
}

void Tensor::clear_grad() {
  if (defined()) {
    storage_->grad.clear();
    storage_->grad.shrink_to_fit();
  }
}

Tensor Tensor::detach() const {
  return Tensor(shape(), std::vector<double>(storage_->data.begin(), storage_->data.end()));
}

Tensor Tensor::clone() const {
  Tensor t = detach();
  t.set_requires_grad(requires_grad());
  return t;
}

// --- Graph -----------------------------------------------------------------

bool Graph::Tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void Graph::Push(std::function<void()> backward_fn) {
  if (consumed_) throw StateError("graph: cannot record after backward()");
  tape_.push_back(std::move(backward_fn));
}

void Graph::Backward(const Tensor& loss) {
  if (consumed_) {
    throw StateError("graph: backward() already ran on this graph");
  }
  if (loss.size() != 1) {
    throw InvalidArgument("graph: backward() needs a scalar loss, got shape " +
                          ShapeString(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw InvalidArgument(
        "graph: loss does not depend on any tracked tensor");
  }
  consumed_ = true;
  Tensor seed = loss;
  seed.ensure_grad()[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  tape_.clear();
}

// --- ParamSet --------------------------------------------------------------

Tensor& ParamSet::Add(std::string name, Tensor tensor) {
  for (const auto& [n, t] : entries_) {
    if (n == name) throw InvalidArgument("params: duplicate name " + name);
  }
  tensor.set_requires_grad(true);
  entries_.emplace_back(std::move(name), std::move(tensor));
  return entries_.back().second;
}

Tensor& ParamSet::Get(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw InvalidArgument("params: unknown parameter " + name);
}

const Tensor& ParamSet::Get(const std::string& name) const {
  return const_cast<ParamSet*>(this)->Get(name);
}

std::size_t ParamSet::NumScalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

void ParamSet::ZeroGrad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

void ParamSet::ClearGrad() {
  for (auto& [name, t] : entries_) t.clear_grad();
}

void ParamSet::SetRequiresGrad(bool on) {
  for (auto& [name, t] : entries_) t.set_requires_grad(on);
}

ParamSet ParamSet::Clone() const {
  ParamSet copy;
  for (const auto& [name, t] : entries_) {
    copy.entries_.emplace_back(name, t.clone());
  }
  return copy;
}

void ParamSet::CopyValuesFrom(const ParamSet& other) {
  if (other.size() != size()) {
    throw InvalidArgument("params: parameter count mismatch");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (other.name(i) != name(i) || other.at(i).shape() != at(i).shape()) {
      throw InvalidArgument("params: layout mismatch at " + name(i));
    }
    auto src = other.at(i).data();
    std::copy(src.begin(), src.end(), at(i).data().begin());
  }
}

Tensor KaimingUniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  if (fan_in == 0) throw InvalidArgument("kaiming: fan_in must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// --- Adam ------------------------------------------------------------------

Adam::Adam(ParamSet& params, AdamConfig config)
    : params_(&params), config_(config) {
  if (!(config.lr > 0) || !(config.eps > 0) || config.beta1 < 0 ||
      config.beta1 >= 1 || config.beta2 < 0 || config.beta2 >= 1) {
    throw InvalidArgument("adam: invalid hyperparameters");
  }
  for (const auto& [name, t] : params) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void Adam::Step() {
  if (m_.size() != params_->size()) {
    throw StateError("adam: parameter set changed after construction");
  }
  for (std::size_t i = 0; i < params_->size(); ++i) {
    if (!params_->at(i).has_grad()) {
      throw StateError("adam: parameter " + params_->name(i) +
                       " has no gradient");
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params_->size(); ++i) {
    Tensor& p = params_->at(i);
    auto w = p.data();
    auto g = std::as_const(p).grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

// --- Checkpoint container --------------------------------------------------

namespace {

constexpr char kMagic[5] = {'D', 'A', 'N', 'V', '1'};

void PutU32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

void PutU64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

std::uint64_t GetLE(std::istream& is, int bytes, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), bytes)) {
    throw IoError("checkpoint: truncated file " + path);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void SaveTensors(const std::string& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  PutU32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    PutU32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutU32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) PutU64(os, d);
    for (double v : t.data()) PutU64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw IoError("checkpoint: write failed for " + path);
}

NamedTensors LoadTensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw IoError("checkpoint: " + path + " is not a DANV1 container");
  }
  const auto count = GetLE(is, 4, path);
  NamedTensors out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = GetLE(is, 4, path);
    if (name_len > 4096) throw IoError("checkpoint: corrupt name in " + path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len))) {
      throw IoError("checkpoint: truncated file " + path);
    }
    const auto rank = GetLE(is, 4, path);
    if (rank > 8) throw IoError("checkpoint: corrupt rank in " + path);
    Shape shape(rank);
    for (auto& d : shape) d = GetLE(is, 8, path);
    const std::size_t n = ShapeSize(shape);
    if (n > (std::size_t{1} << 32)) {
      throw IoError("checkpoint: implausible tensor size in " + path);
    }
    std::vector<double> values(n);
    for (double& v : values) v = std::bit_cast<double>(GetLE(is, 8, path));
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void CollectParams(const ParamSet& params, const std::string& prefix,
                   NamedTensors& out) {
  for (const auto& [name, t] : params) out.emplace_back(prefix + name, t);
}

void AssignParams(const NamedTensors& tensors, const std::string& prefix,
                  ParamSet& params) {
  for (auto& [name, t] : params) {
    const std::string key = prefix + name;
    auto it = std::find_if(tensors.begin(), tensors.end(),
                           [&](const auto& e) { return e.first == key; });
    if (it == tensors.end()) {
      throw IoError("checkpoint: missing tensor " + key);
    }
    if (it->second.shape() != t.shape()) {
      throw IoError("checkpoint: tensor " + key + " has shape " +
                    ShapeString(it->second.shape()) + ", expected " +
                    ShapeString(t.shape()));
    }
    auto src = it->second.data();
    std::copy(src.begin(), src.end(), t.data().begin());
  }
}

}  // namespace radanon
