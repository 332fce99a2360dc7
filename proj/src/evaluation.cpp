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
#include "radanon/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "radanon/error.hpp"

namespace radanon {

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidArgument("auc: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw InvalidArgument("auc: NaN score");
    if (labels[i] == 1) {
      ++n_pos;
    } else if (labels[i] == 0) {
      ++n_neg;
    } else {
      throw InvalidArgument("auc: labels must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw InvalidArgument("auc: both classes must be present");
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the Mann-Whitney U, accumulated exactly over tie groups.
  std::uint64_t twice_u = 0;
  std::uint64_t neg_below = 0;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s;
    std::uint64_t pos = 0, neg = 0;
    while (e < order.size() && scores[order[e]] == scores[order[s]]) {
      (labels[order[e]] == 1 ? pos : neg) += 1;
      ++e;
    }
    twice_u += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    s = e;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) *
                                         static_cast<double>(n_neg));
}

void BootstrapConfig::Validate() const {
  if (n_boot == 0) throw InvalidArgument("bootstrap: n_boot must be positive");
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("bootstrap: level must lie in (0,1)");
  }
}

namespace {

// Linear-interpolated quantile of sorted data.
double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Percentile bootstrap of `stat` over index resamples of size n. `stat`
// returns NaN for a degenerate resample, which is redrawn.
template <typename Stat>
ConfidenceInterval Bootstrap(std::size_t n, double point,
                             const BootstrapConfig& config, Stat stat) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  std::vector<double> stats;
  stats.reserve(config.n_boot);
  std::size_t redraws = 0;
  while (stats.size() < config.n_boot) {
    for (auto& i : idx) i = pick(rng);
    const double v = stat(idx);
    if (std::isnan(v)) {
      if (++redraws > config.max_redraws) {
        throw StateError("bootstrap: too many single-class resamples");
      }
      continue;
    }
    stats.push_back(v);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - config.level;
  ConfidenceInterval ci{Quantile(stats, alpha / 2.0),
                        Quantile(stats, 1.0 - alpha / 2.0)};
  ci.low = std::min(ci.low, point);
  ci.high = std::max(ci.high, point);
  return ci;
}

}  // namespace

ConfidenceInterval BootstrapCi(std::span<const double> scores,
                               std::span<const int> labels,
                               const BootstrapConfig& config) {
  const double point = RocAuc(scores, labels);
  std::vector<double> s(scores.size());
  std::vector<int> l(labels.size());
  return Bootstrap(scores.size(), point, config,
                   [&](const std::vector<std::size_t>& idx) {
                     bool pos = false, neg = false;
                     for (std::size_t k = 0; k < idx.size(); ++k) {
                       s[k] = scores[idx[k]];
                       l[k] = labels[idx[k]];
                       (l[k] ? pos : neg) = true;
                     }
                     if (!pos || !neg) return std::numeric_limits<double>::quiet_NaN();
                     return RocAuc(s, l);
                   });
}

// --- Linkage attack ------------------------------------------------------------

void AttackConfig::Validate() const {
  if (runs == 0) throw InvalidArgument("attack: runs must be positive");
  verifier.Validate();
  train.Validate();
}

AttackReport SummarizeRuns(std::vector<double> aucs) {
  AttackReport r;
  r.runs = aucs.size();
  r.per_run_auc = std::move(aucs);
  if (r.runs == 0) return r;
  r.mean = std::accumulate(r.per_run_auc.begin(), r.per_run_auc.end(), 0.0) /
           static_cast<double>(r.runs);
  if (r.runs > 1) {
    double ss = 0.0;
    for (double a : r.per_run_auc) ss += (a - r.mean) * (a - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(r.runs - 1));
  }
  return r;
}

AttackReport LinkageAttack(std::span<const Image> anonymized,
                           std::span<const Image> real,
                           const ExperimentData& data,
                           const AttackConfig& config) {
  config.Validate();
  if (anonymized.size() != real.size()) {
    throw InvalidArgument("attack: anonymized and real image sets differ in size");
  }
  const std::span<const Image> train_second =
      config.pairing == RetrainPairing::kDeformedReal ? real : anonymized;
  std::vector<int> test_labels;
  for (const ImagePair& p : data.test_pairs) test_labels.push_back(p.same);

  std::vector<double> aucs;
  for (std::size_t r = 0; r < config.runs; ++r) {
    Verifier verifier(config.verifier, config.seed + r);
    PretrainConfig tc = config.train;
    tc.seed = config.seed + r;
    TrainVerifier(verifier, anonymized, train_second, data.train_pairs,
                  data.val_pairs, tc);
    aucs.push_back(RocAuc(ScorePairs(verifier, anonymized, real, data.test_pairs),
                          test_labels));
  }
  return SummarizeRuns(std::move(aucs));
}

// --- Utility -----------------------------------------------------------------

std::vector<double> Classify(const AuxClassifier& classifier,
                             std::span<const Image> images, std::size_t batch) {
  if (batch == 0) throw InvalidArgument("classify: batch must be positive");
  std::vector<double> out;
  out.reserve(images.size() * classifier.config().num_classes);
  for (std::size_t s = 0; s < images.size(); s += batch) {
    const auto part = images.subspan(s, std::min(batch, images.size() - s));
    Graph g(Graph::Mode::kInference);
    const Tensor p = classifier.Forward(g, StackImages(part));
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return out;
}

namespace {

double MeanClassAucOver(std::span<const double> probs,
                        std::span<const LabelVector> labels,
                        const std::vector<std::size_t>* idx,
                        std::vector<double>* per_class) {
  const std::size_t n = idx ? idx->size() : labels.size();
  std::vector<double> s(n);
  std::vector<int> l(n);
  double acc = 0.0;
  std::size_t defined = 0;
  if (per_class) per_class->assign(kNumClasses, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    int pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = idx ? (*idx)[k] : k;
      s[k] = probs[i * kNumClasses + c];
      l[k] = labels[i][c];
      pos += l[k];
    }
    if (pos == 0 || pos == static_cast<int>(n)) continue;
    const double auc = RocAuc(s, l);
    if (per_class) (*per_class)[c] = auc;
    acc += auc;
    ++defined;
  }
  return defined ? acc / static_cast<double>(defined)
                 : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double MeanClassAuc(std::span<const double> probs,
                    std::span<const LabelVector> labels,
                    std::vector<double>* per_class) {
  if (probs.size() != labels.size() * kNumClasses) {
    throw InvalidArgument("utility: expected " + std::to_string(kNumClasses) +
                          " probabilities per labelled image");
  }
  const double m = MeanClassAucOver(probs, labels, nullptr, per_class);
  if (std::isnan(m)) {
    throw InvalidArgument("utility: no class has both positive and negative images");
  }
  return m;
}

UtilityReport UtilityEval(const AuxClassifier& classifier,
                          std::span<const Image> images,
                          std::span<const LabelVector> labels,
                          const BootstrapConfig& bootstrap) {
  if (images.size() != labels.size()) {
    throw InvalidArgument("utility: images and labels differ in count");
  }
  if (classifier.config().num_classes != kNumClasses) {
    throw InvalidArgument("utility: classifier must have " +
                          std::to_string(kNumClasses) + " outputs");
  }
  const std::vector<double> probs = Classify(classifier, images);
  UtilityReport r;
  r.mean_auc = MeanClassAuc(probs, labels, &r.per_class_auc);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (std::isnan(r.per_class_auc[c])) r.excluded.push_back(c);
  }
  const ConfidenceInterval ci =
      Bootstrap(images.size(), r.mean_auc, bootstrap,
                [&](const std::vector<std::size_t>& idx) {
                  return MeanClassAucOver(probs, labels, &idx, nullptr);
                });
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  return r;
}

// --- Report ------------------------------------------------------------------

namespace {

std::string Fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

std::string Pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace

std::string RenderTable(std::span<const ReportRow> rows) {
  std::size_t w = 6;
  for (const ReportRow& r : rows) w = std::max(w, r.method.size());
  w += 2;
  std::ostringstream os;
  os << Pad("Method", w) << Pad("Verification AUC (%)", 24)
     << "Classification AUC (%) [95% CI]\n";
  os << std::string(w + 24 + 31, '-') << '\n';
  for (const ReportRow& r : rows) {
    os << Pad(r.method, w);
    os << Pad(r.attack.runs ? Fmt("%.1f +- %.1f", 100 * r.attack.mean, 100 * r.attack.std)
                            : std::string("-"),
              24);
    os << Fmt("%.1f [%.1f, %.1f]", 100 * r.utility.mean_auc, 100 * r.utility.ci_low,
              100 * r.utility.ci_high)
       << '\n';
  }
  return os.str();
}

namespace {

// RFC 4180 quoting for fields holding commas, quotes or line breaks.
std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string RenderCsv(std::span<const ReportRow> rows) {
  std::ostringstream os;
  os << "method,attack_runs,attack_mean,attack_std,utility_mean,utility_ci_low,"
        "utility_ci_high\n";
  for (const ReportRow& r : rows) {
    os << CsvField(r.method) << ',' << r.attack.runs << ','
       << Fmt("%.17g,%.17g", r.attack.mean, r.attack.std) << ','
       << Fmt("%.17g,%.17g,%.17g", r.utility.mean_auc, r.utility.ci_low,
              r.utility.ci_high)
       << '\n';
  }
  return os.str();
}

}  // namespace radanon
