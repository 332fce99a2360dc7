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
// The end-to-end experimental protocol on one corpus:
//
//   1. pre-train classifier, verifier and (per deformation degree) generator;
//   2. adversarial training per deformation degree;
//   3. linkage attack with re-trained verifiers on every anonymized corpus;
//   4. frozen-classifier utility on every anonymized test split.
//
// Clean data and DP-Pix are evaluated alongside as reference rows.
#ifndef RADANON_PIPELINE_HPP_
#define RADANON_PIPELINE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "radanon/data.hpp"
#include "radanon/dp_pix.hpp"
#include "radanon/evaluation.hpp"
#include "radanon/models.hpp"
#include "radanon/training.hpp"

namespace radanon {

// Defaults are sized for a single core and a 200-patient, 64 x 64 corpus.
struct PipelineConfig {
  std::uint64_t split_seed = 1;
  std::uint64_t pair_seed = 2;
  PairCounts pairs{800, 400, 1000};

  GeneratorConfig generator{64, 8, 3};
  ClassifierConfig classifier;
  VerifierConfig verifier;
  std::uint64_t model_seed = 10;

  PretrainConfig gen_pretrain = Pretrain(1, 16, 1e-3, 0);
  PretrainConfig clf_pretrain = Pretrain(40, 16, 1e-3, 5);
  PretrainConfig ver_pretrain = Pretrain(12, 32, 1e-3, 5);
  TrainConfig train = Adversarial();
  std::vector<double> mus = {0.02, 0.1, 0.2};

  AttackConfig attack = Attack();
  DpPixConfig dp_pix;
  BootstrapConfig bootstrap;

  // When set, checkpoints, training logs and reports are written here.
  std::string out_dir;
  std::function<void(const std::string&)> progress;

  void Validate() const;

  static PretrainConfig Pretrain(std::size_t epochs, std::size_t batch,
                                 double lr, std::size_t patience);
  static TrainConfig Adversarial();
  static AttackConfig Attack();
};

struct PipelineResult {
  ReportRow clean;                   // no anonymization
  std::vector<double> mus;
  std::vector<ReportRow> deformed;   // one row per mu
  ReportRow dp_pix;

  std::vector<ReportRow> Rows() const;
};

// Runs the full protocol. Deterministic for a fixed corpus and config.
PipelineResult RunPipeline(const Corpus& corpus, const PipelineConfig& config);

// DP-Pix applied to every image of `corpus` with one generator seeded from
// config.seed, drawing in corpus order.
std::vector<Image> DpPixelizeAll(std::span<const Image> images,
                                 const DpPixConfig& config);

}  // namespace radanon

#endif  // RADANON_PIPELINE_HPP_
