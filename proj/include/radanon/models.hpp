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
// The three networks of the anonymisation pipeline, at desk scale:
//
//   Generator      U-Net predicting a tanh-bounded 2-channel flow field.
//   AuxClassifier  multi-label CNN with 14 independent sigmoid outputs.
//   Verifier       siamese CNN; twin encoders share one parameter set, the
//                  embeddings are merged by |e1 - e2| and scored by a dense
//                  layer with sigmoid.
//
// All networks take images as [N,1,S,S] tensors with values in [0,1].
#ifndef RADANON_MODELS_HPP_
#define RADANON_MODELS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "radanon/tensor.hpp"

namespace radanon {

inline constexpr std::size_t kNumClasses = 14;

struct GeneratorConfig {
  std::size_t side = 64;
  std::size_t base_width = 16;
  std::size_t levels = 3;

  void Validate() const;
};

struct ClassifierConfig {
  std::size_t side = 64;
  std::vector<std::size_t> widths = {8, 16, 32, 32};
  std::size_t num_classes = kNumClasses;

  void Validate() const;
};

struct VerifierConfig {
  std::size_t side = 64;
  std::vector<std::size_t> widths = {8, 16, 16, 32};
  std::size_t embedding = 128;

  void Validate() const;
};

class Generator {
 public:
  Generator(GeneratorConfig config, std::uint64_t seed);

  // Raw flow field [N,2,S,S] in (-1,1).
  Tensor Forward(Graph& g, const Tensor& images) const;

  const GeneratorConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  GeneratorConfig config_;
  ParamSet params_;
};

class AuxClassifier {
 public:
  AuxClassifier(ClassifierConfig config, std::uint64_t seed);

  // Pre-sigmoid scores [N,num_classes].
  Tensor Logits(Graph& g, const Tensor& images) const;
  // Per-class probabilities [N,num_classes].
  Tensor Forward(Graph& g, const Tensor& images) const;

  const ClassifierConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  ClassifierConfig config_;
  ParamSet params_;
};

class Verifier {
 public:
  // The final scoring layer starts at zero, so an untrained verifier
  // scores every pair at sigmoid(0) = 0.5.
  Verifier(VerifierConfig config, std::uint64_t seed);

  // Embedding [N,embedding] of one branch.
  Tensor Embed(Graph& g, const Tensor& images) const;
  // Same-patient probability [N,1]; symmetric in (a, b).
  Tensor Forward(Graph& g, const Tensor& a, const Tensor& b) const;

  const VerifierConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  VerifierConfig config_;
  ParamSet params_;
};

// The three networks of one run plus the deformation degree the generator
// was trained for. `classifier` is the frozen clean-data classifier used for
// utility evaluation.
struct ModelBundle {
  Generator generator;
  AuxClassifier classifier;
  Verifier verifier;
  double mu = 0.0;
};

ModelBundle MakeBundle(const GeneratorConfig& g, const ClassifierConfig& c,
                       const VerifierConfig& v, std::uint64_t seed);

// Checkpoints are named-tensor files; the architecture travels with the
// weights, so loading needs no configuration.
void SaveBundle(const std::string& path, const ModelBundle& bundle);
ModelBundle LoadBundle(const std::string& path);

}  // namespace radanon

#endif  // RADANON_MODELS_HPP_
