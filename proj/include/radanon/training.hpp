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
// Objectives and training loops: generator pre-training, classifier and
// verifier pre-training, the alternating adversarial loop and inference.
//
// Every probability entering a logarithm is clipped to [1e-7, 1 - 1e-7].
#ifndef RADANON_TRAINING_HPP_
#define RADANON_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radanon/data.hpp"
#include "radanon/models.hpp"
#include "radanon/tensor.hpp"
#include "radanon/warp.hpp"

namespace radanon {

inline constexpr double kProbClip = 1e-7;

// --- Scalar objectives -----------------------------------------------------

// Class-wise binary cross entropy summed over the 14 classes.
double AuxLoss(std::span<const double> probs, std::span<const double> labels);
// -log(1 - p_v): small when the verifier is fooled.
double VerLoss(double prob);
// Generator objective: aux + ver.
double TotalGenLoss(double aux, double ver);
// Binary cross entropy for the verifier; label must be 0 or 1.
double SnnBceLoss(double prob, double label);

// --- Differentiable objectives (batch means) -------------------------------

namespace loss_ops {

// probs, labels [N,C] -> mean over N of the per-row class sum.
Tensor Aux(Graph& g, const Tensor& probs, const Tensor& labels);
// probs [N,1] -> mean of -log(1 - p).
Tensor Ver(Graph& g, const Tensor& probs);
// probs [N,1], labels [N] in {0,1} -> mean BCE.
Tensor SnnBce(Graph& g, const Tensor& probs, const Tensor& labels);

}  // namespace loss_ops

// --- Inference ----------------------------------------------------------------

// Sampling grid of one image: identity - mu * smooth(G(x)).
FlowField PredictFlow(const Generator& generator, const Image& image, double mu);
// Deforms `image` with the generator's constrained, smoothed flow.
Image Anonymize(const Generator& generator, const Image& image, double mu);
// Batched Anonymize over a whole set of images.
std::vector<Image> AnonymizeAll(const Generator& generator,
                                std::span<const Image> images, double mu,
                                std::size_t batch = 16);

// Images of every record, in corpus order.
std::vector<Image> CorpusImages(const Corpus& corpus);

// --- Pre-training ---------------------------------------------------------------

struct PretrainConfig {
  std::size_t epochs = 200;
  std::size_t batch = 64;
  double lr = 1e-4;
  // Early stopping on the validation metric; 0 disables it.
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct PretrainResult {
  std::vector<double> train_curve;  // mean training loss per epoch
  std::vector<double> val_curve;    // validation metric per epoch
  std::size_t best_epoch = 0;       // 1-based
  double best_val = 0.0;
};

// Reconstruction pre-training: minimises MSE(warp(x, grid(G(x))), x).
// The returned generator holds the best-on-validation parameters.
PretrainResult PretrainGenerator(Generator& generator,
                                 std::span<const Image> train,
                                 std::span<const Image> val, double mu,
                                 const PretrainConfig& config);

// Multi-label pre-training on clean images; selection by validation loss.
PretrainResult PretrainClassifier(AuxClassifier& classifier,
                                  const Corpus& corpus,
                                  std::span<const std::size_t> train,
                                  std::span<const std::size_t> val,
                                  const PretrainConfig& config);

// Verifier training on pairs whose first image is taken from `first` and
// second image from `second` (both indexed by record). Early stopping and
// selection use validation AUC; the best parameters are restored.
PretrainResult TrainVerifier(Verifier& verifier, std::span<const Image> first,
                             std::span<const Image> second,
                             std::span<const ImagePair> train_pairs,
                             std::span<const ImagePair> val_pairs,
                             const PretrainConfig& config);

// Same-patient probabilities for `pairs`.
std::vector<double> ScorePairs(const Verifier& verifier,
                               std::span<const Image> first,
                               std::span<const Image> second,
                               std::span<const ImagePair> pairs,
                               std::size_t batch = 32);

// --- Adversarial training ---------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 250;      // E_max
  std::size_t iterations = 100;  // I_max, batches per epoch
  std::size_t batch = 64;
  double lr = 1e-4;              // generator
  double aux_lr = 1e-4;
  double ver_lr = 1e-4;
  double mu = 0.01;
  // Weight of the verification term in the generator objective.
  double ver_weight = 1.0;
  std::uint64_t seed = 0;
  // Per-epoch CSV log; empty disables logging.
  std::string log_path;

  void Validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double aux = 0.0;
  double ver = 0.0;
  double total = 0.0;
  double val_aux = 0.0;
  double val_ver = 0.0;
  double val_total = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_val_total = 0.0;
};

// One alternating iteration on a batch: generator step on aux + w * ver with
// the classifier and verifier frozen, then a classifier step on the freshly
// deformed first images, then a verifier step on (deformed first, real
// second) pairs.
struct AdversarialState {
  Generator* generator;
  AuxClassifier* classifier;
  Verifier* verifier;
  Adam gen_opt;
  Adam aux_opt;
  Adam ver_opt;

  AdversarialState(Generator& g, AuxClassifier& a, Verifier& v,
                   const TrainConfig& config);
};

struct BatchLosses {
  double aux = 0.0;
  double ver = 0.0;
  double total = 0.0;
};

BatchLosses AdversarialStep(AdversarialState& state, const Corpus& corpus,
                            std::span<const ImagePair> batch,
                            const TrainConfig& config);

// Validation aux, ver and total (generator objective) on `pairs`.
BatchLosses EvaluateGenerator(const Generator& generator,
                              const AuxClassifier& classifier,
                              const Verifier& verifier, const Corpus& corpus,
                              std::span<const ImagePair> pairs,
                              const TrainConfig& config);

// Full alternating loop. The generator is left at the parameters with the
// lowest validation total; classifier and verifier keep their final state.
TrainResult TrainAdversarial(Generator& generator, AuxClassifier& classifier,
                             Verifier& verifier, const Corpus& corpus,
                             std::span<const ImagePair> train_pairs,
                             std::span<const ImagePair> val_pairs,
                             const TrainConfig& config);

}  // namespace radanon

#endif  // RADANON_TRAINING_HPP_
