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
// ROC AUC, bootstrap intervals, the linkage attack and utility evaluation.
#ifndef RADANON_EVALUATION_HPP_
#define RADANON_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radanon/data.hpp"
#include "radanon/models.hpp"
#include "radanon/training.hpp"

namespace radanon {

// Mann-Whitney estimate P(s+ > s-) + P(s+ = s-) / 2. Labels must be 0 or 1
// and both classes must be present.
double RocAuc(std::span<const double> scores, std::span<const int> labels);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

struct BootstrapConfig {
  std::size_t n_boot = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  // Single-class resamples are redrawn, at most this many times in total.
  std::size_t max_redraws = 10000;

  void Validate() const;
};

// Percentile interval of the AUC over resampled-with-replacement test sets.
// The interval is widened, if needed, to contain the full-sample estimate.
ConfidenceInterval BootstrapCi(std::span<const double> scores,
                               std::span<const int> labels,
                               const BootstrapConfig& config);

// --- Linkage attack ------------------------------------------------------------

enum class RetrainPairing {
  kDeformedReal,      // (anonymized x1, real x2), as in the attack itself
  kDeformedDeformed,  // (anonymized x1, anonymized x2)
};

struct AttackConfig {
  std::size_t runs = 10;
  VerifierConfig verifier;
  PretrainConfig train = [] {
    PretrainConfig c;
    c.batch = 32;
    c.epochs = 100;
    c.patience = 5;
    return c;
  }();
  RetrainPairing pairing = RetrainPairing::kDeformedReal;
  // Run r uses seed + r for initialisation and batching.
  std::uint64_t seed = 0;

  void Validate() const;
};

struct AttackReport {
  std::vector<double> per_run_auc;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
  std::size_t runs = 0;
};

// Mean and sample standard deviation of `aucs`.
AttackReport SummarizeRuns(std::vector<double> aucs);

// Re-trains a fresh verifier per run on training pairs drawn from the
// anonymized images and tests it on (anonymized x1, real x2) test pairs.
// `anonymized` and `real` are indexed by record.
AttackReport LinkageAttack(std::span<const Image> anonymized,
                           std::span<const Image> real,
                           const ExperimentData& data,
                           const AttackConfig& config);

// --- Utility -----------------------------------------------------------------

struct UtilityReport {
  // NaN for classes whose test labels are all equal.
  std::vector<double> per_class_auc;
  std::vector<std::size_t> excluded;
  double mean_auc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Mean of the defined per-class AUCs of `probs` [n x C, row-major].
double MeanClassAuc(std::span<const double> probs,
                    std::span<const LabelVector> labels,
                    std::vector<double>* per_class = nullptr);

// Scores `images` with the frozen classifier and reports per-class AUC,
// their mean and a bootstrap interval of the mean.
UtilityReport UtilityEval(const AuxClassifier& classifier,
                          std::span<const Image> images,
                          std::span<const LabelVector> labels,
                          const BootstrapConfig& bootstrap);

// Class probabilities [n x C, row-major] for `images`.
std::vector<double> Classify(const AuxClassifier& classifier,
                             std::span<const Image> images,
                             std::size_t batch = 32);

// --- Report ------------------------------------------------------------------

struct ReportRow {
  std::string method;
  AttackReport attack;
  UtilityReport utility;
};

// Methods x {verification AUC mean +- std, classification AUC with CI},
// values in percent.
std::string RenderTable(std::span<const ReportRow> rows);
std::string RenderCsv(std::span<const ReportRow> rows);

}  // namespace radanon

#endif  // RADANON_EVALUATION_HPP_
