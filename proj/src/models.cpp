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
#include "radanon/models.hpp"

#include <cmath>
#include <random>
#include <string>

#include "radanon/error.hpp"

namespace radanon {

namespace {

void AddConv(ParamSet& params, const std::string& name, std::size_t in,
             std::size_t out, std::size_t k, std::mt19937_64& rng) {
  params.Add(name + ".w", KaimingUniform({out, in, k, k}, in * k * k, rng));
  params.Add(name + ".b", Tensor({out}));
}

void AddDense(ParamSet& params, const std::string& name, std::size_t in,
              std::size_t out, std::mt19937_64& rng) {
  params.Add(name + ".w", KaimingUniform({out, in}, in, rng));
  params.Add(name + ".b", Tensor({out}));
}

// 3x3 same-padding convolution + bias.
Tensor Conv3(Graph& g, const ParamSet& p, const std::string& name,
             const Tensor& x) {
  return ops::bias_add(g, ops::conv2d(g, x, p.Get(name + ".w"), 1, 1),
                       p.Get(name + ".b"));
}

Tensor Dense(Graph& g, const ParamSet& p, const std::string& name,
             const Tensor& x) {
  return ops::dense(g, x, p.Get(name + ".w"), p.Get(name + ".b"));
}

void RequireInput(const Tensor& images, std::size_t side, const char* who) {
  if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != side ||
      images.dim(3) != side) {
    throw InvalidArgument(std::string(who) + ": expected [N,1," +
                          std::to_string(side) + "," + std::to_string(side) +
                          "] input, got " + ShapeString(images.shape()));
  }
}

void RequireDivisible(std::size_t side, std::size_t halvings, const char* who) {
  if (side == 0 || side % (std::size_t{1} << halvings) != 0) {
    throw InvalidArgument(std::string(who) + ": side " + std::to_string(side) +
                          " must be divisible by 2^" + std::to_string(halvings));
  }
}

std::string Level(const char* stem, std::size_t l) {
  return std::string(stem) + std::to_string(l);
}

}  // namespace

void GeneratorConfig::Validate() const {
  if (base_width == 0 || levels == 0) {
    throw InvalidArgument("generator: base_width and levels must be positive");
  }
  RequireDivisible(side, levels, "generator");
}

void ClassifierConfig::Validate() const {
  if (widths.empty() || num_classes == 0) {
    throw InvalidArgument("classifier: needs at least one block and one class");
  }
  RequireDivisible(side, widths.size(), "classifier");
}

void VerifierConfig::Validate() const {
  if (widths.empty() || embedding == 0) {
    throw InvalidArgument("verifier: needs at least one block and embedding > 0");
  }
  RequireDivisible(side, widths.size(), "verifier");
}

// --- Generator -------------------------------------------------------------

Generator::Generator(GeneratorConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const std::size_t w = config_.base_width;
  std::size_t in = 1;
  for (std::size_t l = 0; l < config_.levels; ++l) {
    const std::size_t c = w << l;
    AddConv(params_, Level("enc", l) + ".c1", in, c, 3, rng);
    AddConv(params_, Level("enc", l) + ".c2", c, c, 3, rng);
    in = c;
  }
  const std::size_t cb = w << config_.levels;
  AddConv(params_, "bottleneck.c1", in, cb, 3, rng);
  AddConv(params_, "bottleneck.c2", cb, cb, 3, rng);
  for (std::size_t l = config_.levels; l-- > 0;) {
    const std::size_t c = w << l;
    AddConv(params_, Level("up", l), 2 * c, c, 3, rng);
    AddConv(params_, Level("dec", l) + ".c1", 2 * c, c, 3, rng);
    AddConv(params_, Level("dec", l) + ".c2", c, c, 3, rng);
  }
  AddConv(params_, "head", w, 2, 1, rng);
}

Tensor Generator::Forward(Graph& g, const Tensor& images) const {
  RequireInput(images, config_.side, "generator");
  const ParamSet& p = params_;
  std::vector<Tensor> skips;
  Tensor x = images;
  for (std::size_t l = 0; l < config_.levels; ++l) {
    x = ops::relu(g, Conv3(g, p, Level("enc", l) + ".c1", x));
    x = ops::relu(g, Conv3(g, p, Level("enc", l) + ".c2", x));
    skips.push_back(x);
    x = ops::max_pool2x2(g, x);
  }
  x = ops::relu(g, Conv3(g, p, "bottleneck.c1", x));
  x = ops::relu(g, Conv3(g, p, "bottleneck.c2", x));
  for (std::size_t l = config_.levels; l-- > 0;) {
    x = ops::upsample_nearest2x(g, x);
    x = ops::relu(g, Conv3(g, p, Level("up", l), x));
    x = ops::concat_channels(g, skips[l], x);
    x = ops::relu(g, Conv3(g, p, Level("dec", l) + ".c1", x));
    x = ops::relu(g, Conv3(g, p, Level("dec", l) + ".c2", x));
  }
  Tensor head = ops::bias_add(g, ops::conv2d(g, x, p.Get("head.w")), p.Get("head.b"));
  return ops::tanh(g, head);
}

// --- AuxClassifier ---------------------------------------------------------

AuxClassifier::AuxClassifier(ClassifierConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  std::size_t in = 1;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    AddConv(params_, Level("block", i), in, config_.widths[i], 3, rng);
    in = config_.widths[i];
  }
  const std::size_t cells = config_.side >> config_.widths.size();
  AddDense(params_, "fc", in * cells * cells, config_.num_classes, rng);
}

Tensor AuxClassifier::Logits(Graph& g, const Tensor& images) const {
  RequireInput(images, config_.side, "classifier");
  Tensor x = images;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    x = ops::relu(g, Conv3(g, params_, Level("block", i), x));
    x = ops::max_pool2x2(g, x);
  }
  // Findings are told apart by where they sit, so the head keeps the layout.
  const std::size_t n = x.dim(0);
  return Dense(g, params_, "fc", ops::reshape(g, x, {n, x.size() / n}));
}

Tensor AuxClassifier::Forward(Graph& g, const Tensor& images) const {
  return ops::sigmoid(g, Logits(g, images));
}

// --- Verifier --------------------------------------------------------------

Verifier::Verifier(VerifierConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  std::size_t in = 1;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    AddConv(params_, Level("block", i), in, config_.widths[i], 3, rng);
    in = config_.widths[i];
  }
  const std::size_t cells = config_.side >> config_.widths.size();
  AddDense(params_, "embed", in * cells * cells, config_.embedding, rng);
  params_.Add("score.w", Tensor({1, config_.embedding}));
  params_.Add("score.b", Tensor({1}));
}

Tensor Verifier::Embed(Graph& g, const Tensor& images) const {
  RequireInput(images, config_.side, "verifier");
  Tensor x = images;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    x = ops::relu(g, Conv3(g, params_, Level("block", i), x));
    x = ops::max_pool2x2(g, x);
  }
  const std::size_t n = x.dim(0);
  x = ops::reshape(g, x, {n, x.size() / n});
  return Dense(g, params_, "embed", x);
}

Tensor Verifier::Forward(Graph& g, const Tensor& a, const Tensor& b) const {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("verifier: pair inputs differ in shape " +
                          ShapeString(a.shape()) + " vs " +
                          ShapeString(b.shape()));
  }
  const Tensor diff = ops::abs(g, ops::sub(g, Embed(g, a), Embed(g, b)));
  return ops::sigmoid(g, Dense(g, params_, "score", diff));
}

// --- Checkpoints -----------------------------------------------------------

ModelBundle MakeBundle(const GeneratorConfig& g, const ClassifierConfig& c,
                       const VerifierConfig& v, std::uint64_t seed) {
  return {Generator(g, seed), AuxClassifier(c, seed + 1), Verifier(v, seed + 2),
          0.0};
}

namespace {

Tensor Ints(const std::vector<std::size_t>& v) {
  std::vector<double> d(v.begin(), v.end());
  const std::size_t n = d.size();
  return Tensor({n}, std::move(d));
}

std::vector<std::size_t> FromInts(const Tensor& t) {
  std::vector<std::size_t> out;
  for (double v : t.data()) {
    if (!(v >= 0.0) || v != std::floor(v)) {
      throw IoError("checkpoint: malformed architecture entry");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

const Tensor& Find(const NamedTensors& t, const std::string& name) {
  for (const auto& [n, v] : t) {
    if (n == name) return v;
  }
  throw IoError("checkpoint: missing entry " + name);
}

}  // namespace

void SaveBundle(const std::string& path, const ModelBundle& bundle) {
  const GeneratorConfig& g = bundle.generator.config();
  const ClassifierConfig& c = bundle.classifier.config();
  const VerifierConfig& v = bundle.verifier.config();
  NamedTensors t;
  t.emplace_back("arch.generator", Ints({g.side, g.base_width, g.levels}));
  std::vector<std::size_t> ca = {c.side, c.num_classes};
  ca.insert(ca.end(), c.widths.begin(), c.widths.end());
  t.emplace_back("arch.classifier", Ints(ca));
  std::vector<std::size_t> va = {v.side, v.embedding};
  va.insert(va.end(), v.widths.begin(), v.widths.end());
  t.emplace_back("arch.verifier", Ints(va));
  t.emplace_back("mu", Tensor({1}, bundle.mu));
  CollectParams(bundle.generator.params(), "generator.", t);
  CollectParams(bundle.classifier.params(), "classifier.", t);
  CollectParams(bundle.verifier.params(), "verifier.", t);
  SaveTensors(path, t);
}

ModelBundle LoadBundle(const std::string& path) {
  const NamedTensors t = LoadTensors(path);
  const auto ga = FromInts(Find(t, "arch.generator"));
  const auto ca = FromInts(Find(t, "arch.classifier"));
  const auto va = FromInts(Find(t, "arch.verifier"));
  if (ga.size() != 3 || ca.size() < 3 || va.size() < 3) {
    throw IoError("checkpoint: malformed architecture in " + path);
  }
  ClassifierConfig cc{ca[0], {ca.begin() + 2, ca.end()}, ca[1]};
  VerifierConfig vc{va[0], {va.begin() + 2, va.end()}, va[1]};
  ModelBundle b = MakeBundle({ga[0], ga[1], ga[2]}, cc, vc, 0);
  b.mu = Find(t, "mu").item();
  AssignParams(t, "generator.", b.generator.params());
  AssignParams(t, "classifier.", b.classifier.params());
  AssignParams(t, "verifier.", b.verifier.params());
  return b;
}

}  // namespace radanon
