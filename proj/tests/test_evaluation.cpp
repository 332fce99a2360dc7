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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "radanon/data.hpp"
#include "radanon/error.hpp"
#include "radanon/evaluation.hpp"
#include "radanon/training.hpp"
#include "test_util.hpp"

namespace radanon {
namespace {

// O(n^2) pair counting with half credit for ties.
double BruteForceAuc(const std::vector<double>& s, const std::vector<int>& y) {
  double credit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      credit += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return credit / pairs;
}

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Random instance with both classes present; coarse score grids force ties.
Instance RandomInstance(std::mt19937_64& rng, std::size_t max_n) {
  Instance in;
  const std::size_t n = testing::UniformIndex(rng, 2, max_n);
  const std::size_t levels = testing::UniformIndex(rng, 1, 3) == 1 ? 5 : 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(testing::UniformIndex(rng, 0, levels)) /
                        static_cast<double>(levels));
    in.labels.push_back(static_cast<int>(rng() & 1));
  }
  in.labels[0] = 0;
  in.labels[1] = 1;
  return in;
}

TEST(RocAuc, Oracles) {
  EXPECT_EQ(RocAuc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(RocAuc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{0, 1, 1}), 0.5);
  EXPECT_EQ(RocAuc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
}

TEST(RocAuc, Errors) {
  EXPECT_THROW(RocAuc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), InvalidArgument);
  EXPECT_THROW(RocAuc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 2}), InvalidArgument);
  EXPECT_THROW(RocAuc(std::vector<double>{0.1}, std::vector<int>{0, 1}), InvalidArgument);
}

TEST(RocAuc, EqualsBruteForceExactly) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const Instance in = RandomInstance(rng, 500);
    ASSERT_EQ(RocAuc(in.scores, in.labels), BruteForceAuc(in.scores, in.labels)) << "instance " << k;
  }
}

TEST(RocAuc, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const Instance in = RandomInstance(rng, 300);
    std::vector<double> a, b, c;
    for (double s : in.scores) {
      a.push_back(std::exp(3.0 * s));
      b.push_back(s * s * s - 7.0);
      c.push_back(std::atan(10.0 * s - 2.0));
    }
    const double base = RocAuc(in.scores, in.labels);
    EXPECT_EQ(RocAuc(a, in.labels), base);
    EXPECT_EQ(RocAuc(b, in.labels), base);
    EXPECT_EQ(RocAuc(c, in.labels), base);
  }
}

TEST(Bootstrap, PerfectSeparationGivesDegenerateInterval) {
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    s.push_back(i < 20 ? 0.2 : 0.9);
    y.push_back(i < 20 ? 0 : 1);
  }
  const ConfidenceInterval ci = BootstrapCi(s, y, {});
  EXPECT_EQ(ci.low, 1.0);
  EXPECT_EQ(ci.high, 1.0);
}

TEST(Bootstrap, ContainsPointEstimate) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const Instance in = RandomInstance(rng, 60);
    BootstrapConfig c;
    c.n_boot = 200;
    c.seed = static_cast<std::uint64_t>(k);
    const ConfidenceInterval ci = BootstrapCi(in.scores, in.labels, c);
    const double auc = RocAuc(in.scores, in.labels);
    EXPECT_LE(ci.low, auc);
    EXPECT_GE(ci.high, auc);
  }
}

TEST(Bootstrap, WidthShrinksWithSampleSize) {
  auto width = [](std::size_t n) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = static_cast<int>(i % 2);
      y.push_back(label);
      s.push_back(noise(rng) + label);
    }
    const ConfidenceInterval ci = BootstrapCi(s, y, {});
    return ci.high - ci.low;
  };
  EXPECT_LT(width(1000), width(100));
}

TEST(Bootstrap, SeededAndValidated) {
  std::mt19937_64 rng(5);
  const Instance in = RandomInstance(rng, 80);
  BootstrapConfig c;
  c.seed = 9;
  const auto a = BootstrapCi(in.scores, in.labels, c);
  const auto b = BootstrapCi(in.scores, in.labels, c);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  c.level = 1.5;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = BootstrapConfig{};
  c.n_boot = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
}

TEST(Bootstrap, RedrawCapIsEnforced) {
  // One positive among many negatives: most resamples are single-class.
  std::vector<double> s(200, 0.1);
  std::vector<int> y(200, 0);
  s[0] = 0.9;
  y[0] = 1;
  BootstrapConfig c;
  c.max_redraws = 5;
  EXPECT_THROW(BootstrapCi(s, y, c), StateError);
}

TEST(SummarizeRuns, MeanAndSampleStd) {
  const AttackReport r = SummarizeRuns({0.6, 0.8, 0.7});
  EXPECT_EQ(r.runs, 3u);
  EXPECT_NEAR(r.mean, 0.7, 1e-15);
  EXPECT_NEAR(r.std, 0.1, 1e-15);
  EXPECT_EQ(SummarizeRuns({0.9}).std, 0.0);
}

TEST(MeanClassAuc, ArithmeticMeanOfDefinedClasses) {
  std::mt19937_64 rng(6);
  const std::size_t n = 30;
  std::vector<double> probs(n * kNumClasses);
  for (double& p : probs) p = testing::Uniform(rng, 0, 1);
  std::vector<LabelVector> labels(n);
  for (auto& l : labels)
    for (std::size_t c = 0; c < kNumClasses; ++c) l[c] = rng() & 1;
  for (auto& l : labels) l[5] = 0;  // class 5 undefined
  labels[0][0] = 0;
  labels[1][0] = 1;
  std::vector<double> per;
  const double mean = MeanClassAuc(probs, labels, &per);
  ASSERT_EQ(per.size(), kNumClasses);
  EXPECT_TRUE(std::isnan(per[5]));
  double acc = 0.0;
  int k = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (std::isnan(per[c])) continue;
    acc += per[c];
    ++k;
  }
  EXPECT_EQ(k, 13);
  EXPECT_NEAR(mean, acc / k, 1e-15);
}

// --- Model-backed evaluation on a tiny corpus ---------------------------------------

const Corpus& TinyCorpus() {
  static const Corpus corpus = [] {
    SynthConfig c;
    c.n_patients = 30;
    c.side = 16;
    c.seed = 7;
    return SynthCorpus(c);
  }();
  return corpus;
}

ClassifierConfig TinyClassifier() {
  ClassifierConfig c;
  c.side = 16;
  c.widths = {3, 4};
  return c;
}

TEST(UtilityEval, IdenticalImagesGiveIdenticalReports) {
  const AuxClassifier clf(TinyClassifier(), 8);
  const std::vector<Image> imgs = CorpusImages(TinyCorpus());
  std::vector<LabelVector> labels;
  for (const auto& r : TinyCorpus()) labels.push_back(r.labels);
  BootstrapConfig b;
  b.n_boot = 100;
  const UtilityReport a = UtilityEval(clf, imgs, labels, b);
  const UtilityReport c = UtilityEval(clf, imgs, labels, b);
  ASSERT_EQ(a.per_class_auc.size(), kNumClasses);
  EXPECT_EQ(a.mean_auc, c.mean_auc);
  EXPECT_LE(a.ci_low, a.mean_auc);
  EXPECT_GE(a.ci_high, a.mean_auc);
  double acc = 0.0;
  for (double v : a.per_class_auc) acc += v;
  EXPECT_NEAR(a.mean_auc, acc / kNumClasses, 1e-12);
  EXPECT_TRUE(a.excluded.empty());
}

TEST(UtilityEval, AbsentClassIsExcludedAndReported) {
  const AuxClassifier clf(TinyClassifier(), 9);
  const std::vector<Image> imgs = CorpusImages(TinyCorpus());
  std::vector<LabelVector> labels;
  for (const auto& r : TinyCorpus()) {
    labels.push_back(r.labels);
    labels.back()[3] = 1;
  }
  BootstrapConfig b;
  b.n_boot = 50;
  const UtilityReport rep = UtilityEval(clf, imgs, labels, b);
  ASSERT_EQ(rep.excluded.size(), 1u);
  EXPECT_EQ(rep.excluded[0], 3u);
  EXPECT_TRUE(std::isnan(rep.per_class_auc[3]));
}

TEST(LinkageAttack, ReportShapeAndDeterminism) {
  const Corpus& corpus = TinyCorpus();
  const ExperimentData data = PrepareExperiment(corpus, 1, 2, {60, 20, 40});
  const std::vector<Image> imgs = CorpusImages(corpus);
  AttackConfig c;
  c.runs = 2;
  c.verifier.side = 16;
  c.verifier.widths = {3, 4};
  c.verifier.embedding = 8;
  c.train.epochs = 2;
  c.train.batch = 16;
  c.train.lr = 1e-3;
  c.seed = 4;
  const AttackReport a = LinkageAttack(imgs, imgs, data, c);
  const AttackReport b = LinkageAttack(imgs, imgs, data, c);
  ASSERT_EQ(a.per_run_auc.size(), 2u);
  EXPECT_EQ(a.runs, 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_GE(a.per_run_auc[r], 0.0);
    EXPECT_LE(a.per_run_auc[r], 1.0);
    EXPECT_EQ(a.per_run_auc[r], b.per_run_auc[r]);
  }
  const AttackReport s = SummarizeRuns(a.per_run_auc);
  EXPECT_EQ(a.mean, s.mean);
  EXPECT_EQ(a.std, s.std);
  c.pairing = RetrainPairing::kDeformedDeformed;
  EXPECT_EQ(LinkageAttack(imgs, imgs, data, c).per_run_auc, a.per_run_auc);
  EXPECT_THROW(LinkageAttack(std::span(imgs).subspan(1), imgs, data, c), InvalidArgument);
}

TEST(Report, TableAndCsvLayout) {
  ReportRow clean{"Real data", SummarizeRuns({0.95, 0.97}), {}};
  clean.utility.per_class_auc.assign(kNumClasses, 0.8);
  clean.utility.mean_auc = 0.8;
  clean.utility.ci_low = 0.75;
  clean.utility.ci_high = 0.85;
  ReportRow none{"DP-Pix (b = 8, eps = 0.1)", {}, clean.utility};
  const std::vector<ReportRow> rows{clean, none};
  const std::string table = RenderTable(rows);
  EXPECT_NE(table.find("Verification AUC (%)"), std::string::npos);
  EXPECT_NE(table.find("Classification AUC (%) [95% CI]"), std::string::npos);
  EXPECT_NE(table.find("96.0"), std::string::npos);
  EXPECT_NE(table.find("80.0 [75.0, 85.0]"), std::string::npos);
  const std::string csv = RenderCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("method"), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\n\"DP-Pix (b = 8, eps = 0.1)\",0,"), std::string::npos);
}

}  // namespace
}  // namespace radanon
