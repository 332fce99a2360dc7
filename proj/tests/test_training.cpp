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
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "radanon/data.hpp"
#include "radanon/error.hpp"
#include "radanon/training.hpp"
#include "test_util.hpp"

namespace radanon {
namespace {

using testing::GradCheck;
using testing::RandomImage;
using testing::RandomTensor;

constexpr std::size_t kSide = 16;

GeneratorConfig TinyGenerator() {
  GeneratorConfig c;
  c.side = kSide;
  c.base_width = 2;
  c.levels = 2;
  return c;
}

ClassifierConfig TinyClassifier() {
  ClassifierConfig c;
  c.side = kSide;
  c.widths = {3, 4};
  return c;
}

VerifierConfig TinyVerifier() {
  VerifierConfig c;
  c.side = kSide;
  c.widths = {3, 4};
  c.embedding = 8;
  return c;
}

const GaussianKernel& FlowKernel() {
  static const GaussianKernel k = GaussianKernel::Make(kFlowKernelSize, kFlowKernelSigma);
  return k;
}

const Corpus& SmallCorpus() {
  static const Corpus corpus = [] {
    SynthConfig c;
    c.n_patients = 20;
    c.side = kSide;
    c.seed = 3;
    return SynthCorpus(c);
  }();
  return corpus;
}

void RandomizeScore(Verifier& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (double& w : v.params().Get("score.w").data()) w = testing::Uniform(rng, -0.5, 0.5);
}

// Zero biases behind dead relus leave pre-activations exactly on the kink; small
// random biases move the check to a generic point.
void RandomizeBiases(ParamSet& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params) {
    if (name.size() < 2 || name.compare(name.size() - 2, 2, ".b") != 0) continue;
    for (double& v : t.data()) v = testing::Uniform(rng, -0.1, 0.1);
  }
}

// --- Scalar loss oracles ----------------------------------------------------------------

TEST(AuxLoss, HalfEverywhereIsFourteenLnTwo) {
  const std::vector<double> p(kNumClasses, 0.5);
  for (int bits = 0; bits < 3; ++bits) {
    std::vector<double> y(kNumClasses, 0.0);
    for (std::size_t c = 0; c < kNumClasses; c += bits + 1) y[c] = 1.0;
    EXPECT_NEAR(AuxLoss(p, y), 14.0 * std::log(2.0), 1e-9);
  }
}

TEST(AuxLoss, PerfectPredictionNearZero) {
  std::vector<double> y(kNumClasses, 0.0);
  y[2] = y[9] = 1.0;
  EXPECT_LE(AuxLoss(y, y), 14.0 * -std::log(1.0 - 1e-7) + 1e-15);
}

TEST(AuxLoss, MixedOracle) {
  std::vector<double> y(kNumClasses, 0.0), p(kNumClasses, 0.5);
  y[0] = 1.0;
  p[0] = 0.25;
  EXPECT_NEAR(AuxLoss(p, y), -std::log(0.25) - 13.0 * std::log(0.5), 1e-9);
  EXPECT_NEAR(AuxLoss(p, y), 10.3972077, 1e-6);
}

TEST(AuxLoss, WrongLengthIsAnError) {
  const std::vector<double> p(13, 0.5), y(13, 0.0);
  EXPECT_THROW(AuxLoss(p, y), InvalidArgument);
}

TEST(VerLoss, Oracles) {
  EXPECT_EQ(VerLoss(0.0), -std::log(1.0 - 1e-7));
  EXPECT_NEAR(VerLoss(0.0), 0.0, 1e-6);
  EXPECT_NEAR(VerLoss(0.5), std::log(2.0), 1e-9);
  EXPECT_NEAR(VerLoss(0.9), -std::log(0.1), 1e-9);
  EXPECT_TRUE(std::isfinite(VerLoss(1.0)));
}

TEST(TotalGenLoss, AdditiveAndMonotone) {
  EXPECT_EQ(TotalGenLoss(0.0, 0.0), 0.0);
  EXPECT_NEAR(TotalGenLoss(9.7041, 0.6931), 10.3972, 1e-9);
  std::vector<double> p(kNumClasses, 0.5), y(kNumClasses, 0.0);
  const double aux = AuxLoss(p, y), ver = VerLoss(0.5);
  EXPECT_NEAR(TotalGenLoss(aux, ver), 14.0 * std::log(2.0) + std::log(2.0), 1e-9);
  EXPECT_LT(TotalGenLoss(aux - 0.1, ver), TotalGenLoss(aux, ver));
  EXPECT_LT(TotalGenLoss(aux, ver - 0.1), TotalGenLoss(aux, ver));
}

TEST(SnnBceLoss, Oracles) {
  EXPECT_NEAR(SnnBceLoss(0.5, 1.0), std::log(2.0), 1e-9);
  EXPECT_NEAR(SnnBceLoss(1.0, 1.0), 0.0, 1e-6);
  EXPECT_NEAR(SnnBceLoss(1.0, 0.0), -std::log(1e-7), 1e-6);
  EXPECT_NEAR(SnnBceLoss(1.0, 0.0), 16.118, 1e-3);
  EXPECT_THROW(SnnBceLoss(0.5, 0.5), InvalidArgument);
  EXPECT_THROW(SnnBceLoss(0.5, 2.0), InvalidArgument);
}

// --- Batched losses agree with the scalar definitions ------------------------------------

TEST(LossOps, BatchMeansMatchScalarRecomputation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = testing::UniformIndex(rng, 1, 6);
    const Tensor p = RandomTensor({n, kNumClasses}, rng, 0, 1);
    Tensor y({n, kNumClasses});
    for (double& v : y.data()) v = (rng() & 1) ? 1.0 : 0.0;
    const Tensor pv = RandomTensor({n, 1}, rng, 0, 1);
    Tensor same({n});
    for (double& v : same.data()) v = (rng() & 1) ? 1.0 : 0.0;
    double aux = 0.0, ver = 0.0, bce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      aux += AuxLoss(p.data().subspan(i * kNumClasses, kNumClasses),
                     y.data().subspan(i * kNumClasses, kNumClasses));
      ver += VerLoss(pv.data()[i]);
      bce += SnnBceLoss(pv.data()[i], same.data()[i]);
    }
    Graph g(Graph::Mode::kInference);
    EXPECT_NEAR(loss_ops::Aux(g, p, y).item(), aux / n, 1e-9);
    EXPECT_NEAR(loss_ops::Ver(g, pv).item(), ver / n, 1e-9);
    EXPECT_NEAR(loss_ops::SnnBce(g, pv, same).item(), bce / n, 1e-9);
  }
}

TEST(LossOps, ShapeErrors) {
  Graph g;
  EXPECT_THROW(loss_ops::Aux(g, Tensor({2, 13}), Tensor({2, 13})), InvalidArgument);
  EXPECT_THROW(loss_ops::Aux(g, Tensor({2, 14}), Tensor({1, 14})), InvalidArgument);
  EXPECT_THROW(loss_ops::Ver(g, Tensor({2, 2})), InvalidArgument);
  EXPECT_THROW(loss_ops::SnnBce(g, Tensor({2, 1}), Tensor({3})), InvalidArgument);
}

TEST(LossOps, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(30);
  Tensor p = RandomTensor({3, kNumClasses}, rng, 0.05, 0.95, true);
  Tensor y({3, kNumClasses});
  for (double& v : y.data()) v = (rng() & 1) ? 1.0 : 0.0;
  Tensor pv = RandomTensor({4, 1}, rng, 0.05, 0.95, true);
  const Tensor same({4}, std::vector<double>{1, 0, 0, 1});
  for (const auto& r :
       {GradCheck([&](Graph& g) { return loss_ops::Aux(g, p, y); }, {p}, 24, 1),
        GradCheck([&](Graph& g) { return loss_ops::Ver(g, pv); }, {pv}, 24, 2),
        GradCheck([&](Graph& g) { return loss_ops::SnnBce(g, pv, same); }, {pv}, 24, 3)}) {
    EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
  }
}

// --- Composite generator -> warp -> loss path ------------------------------------------

TEST(Composite, GeneratorWarpLossGradient) {
  Generator gen(TinyGenerator(), 40);
  AuxClassifier clf(TinyClassifier(), 41);
  Verifier ver(TinyVerifier(), 42);
  RandomizeScore(ver, 43);
  RandomizeBiases(gen.params(), 46);
  RandomizeBiases(clf.params(), 47);
  std::mt19937_64 rng(44);
  const Tensor x1 = RandomTensor({2, 1, kSide, kSide}, rng, 0, 1);
  const Tensor x2 = RandomTensor({2, 1, kSide, kSide}, rng, 0, 1);
  Tensor y({2, kNumClasses});
  for (double& v : y.data()) v = (rng() & 1) ? 1.0 : 0.0;
  auto loss = [&](Graph& g) {
    const Tensor grid = warp_ops::SamplingGrid(g, gen.Forward(g, x1), 0.3, FlowKernel());
    const Tensor fx = warp_ops::GridSample(g, x1, grid);
    const Tensor la = loss_ops::Aux(g, clf.Forward(g, fx), y);
    const Tensor lv = loss_ops::Ver(g, ver.Forward(g, fx, x2));
    return ops::add(g, la, lv);
  };
  // Two coordinates from every generator tensor; the adversaries are fixed.
  std::vector<Tensor> wrt;
  for (auto& [name, t] : gen.params()) wrt.push_back(t);
  clf.params().SetRequiresGrad(false);
  ver.params().SetRequiresGrad(false);
  // The bilinear sampler and relu are piecewise smooth; a short central step keeps
  // the stencil inside one smooth piece.
  const auto r = GradCheck(loss, wrt, 2, 45, 1e-6);
  EXPECT_GE(r.checked, 20u);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST(Composite, TotalGradientIsSumOfPartialGradients) {
  Generator gen(TinyGenerator(), 50);
  AuxClassifier clf(TinyClassifier(), 51);
  Verifier ver(TinyVerifier(), 52);
  RandomizeScore(ver, 53);
  clf.params().SetRequiresGrad(false);
  ver.params().SetRequiresGrad(false);
  std::mt19937_64 rng(54);
  const Tensor x1 = RandomTensor({2, 1, kSide, kSide}, rng, 0, 1);
  const Tensor x2 = RandomTensor({2, 1, kSide, kSide}, rng, 0, 1);
  Tensor y({2, kNumClasses});
  for (double& v : y.data()) v = (rng() & 1) ? 1.0 : 0.0;
  auto grads = [&](int which) {
    gen.params().ClearGrad();
    Graph g;
    const Tensor grid = warp_ops::SamplingGrid(g, gen.Forward(g, x1), 0.1, FlowKernel());
    const Tensor fx = warp_ops::GridSample(g, x1, grid);
    const Tensor a = loss_ops::Aux(g, clf.Forward(g, fx), y);
    const Tensor v = loss_ops::Ver(g, ver.Forward(g, fx, x2));
    g.Backward(which == 0 ? a : which == 1 ? v : ops::add(g, a, v));
    std::vector<double> out;
    for (const auto& [name, t] : gen.params()) {
      out.insert(out.end(), t.grad().begin(), t.grad().end());
    }
    return out;
  };
  const auto ga = grads(0), gv = grads(1), gt = grads(2);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_NEAR(gt[i], ga[i] + gv[i], 1e-12 * (1.0 + std::abs(gt[i])));
  }
}

// --- Inference ----------------------------------------------------------------------------

TEST(Anonymize, ZeroMuReturnsInputExactly) {
  const Generator gen(TinyGenerator(), 60);
  std::mt19937_64 rng(61);
  for (int k = 0; k < 5; ++k) {
    const Image x = RandomImage(kSide, kSide, rng);
    const Image y = Anonymize(gen, x, 0.0);
    for (std::size_t i = 0; i < x.pixels.size(); ++i) ASSERT_NEAR(y.pixels[i], x.pixels[i], 1e-12);
  }
}

TEST(Anonymize, StaysWithinInputRangeAndDisplacementBound) {
  const Generator gen(TinyGenerator(), 62);
  std::mt19937_64 rng(63);
  for (double mu : {0.01, 0.1, 0.4}) {
    const Image x = RandomImage(kSide, kSide, rng);
    const Image y = Anonymize(gen, x, mu);
    const auto [lo, hi] = std::minmax_element(x.pixels.begin(), x.pixels.end());
    for (double v : y.pixels) {
      EXPECT_GE(v, *lo - 1e-15);
      EXPECT_LE(v, *hi + 1e-15);
    }
    const FlowField f = PredictFlow(gen, x, mu);
    // mu in normalised units is mu * S / 2 pixels.
    EXPECT_LE(MaxDeviationFromIdentity(f) * kSide / 2.0, mu * kSide / 2.0 + 1e-12);
  }
}

TEST(Anonymize, BatchedMatchesSingle) {
  const Generator gen(TinyGenerator(), 64);
  std::mt19937_64 rng(65);
  std::vector<Image> xs;
  for (int k = 0; k < 19; ++k) xs.push_back(RandomImage(kSide, kSide, rng));
  const auto ys = AnonymizeAll(gen, xs, 0.05);
  ASSERT_EQ(ys.size(), xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    EXPECT_EQ(ys[k].pixels, Anonymize(gen, xs[k], 0.05).pixels);
  }
}

// --- Pre-training -------------------------------------------------------------------------

TEST(PretrainGenerator, ZeroMuHasNothingToLearn) {
  Generator gen(TinyGenerator(), 70);
  std::vector<Image> imgs = CorpusImages(SmallCorpus());
  PretrainConfig c;
  c.epochs = 1;
  c.batch = 8;
  const auto r = PretrainGenerator(gen, std::span(imgs).subspan(0, 16),
                                   std::span(imgs).subspan(16, 8), 0.0, c);
  ASSERT_EQ(r.train_curve.size(), 1u);
  EXPECT_LT(r.train_curve[0], 1e-20);
  EXPECT_LT(r.best_val, 1e-20);
}

TEST(PretrainGenerator, ReconstructionLossFallsAndStaysSmall) {
  Generator gen(TinyGenerator(), 71);
  std::vector<Image> imgs = CorpusImages(SmallCorpus());
  PretrainConfig c;
  c.epochs = 20;
  c.batch = 8;
  c.lr = 1e-3;
  c.patience = 100;
  const auto train = std::span(imgs).subspan(0, 40);
  const auto val = std::span(imgs).subspan(40, 16);
  const auto r = PretrainGenerator(gen, train, val, 0.01, c);
  ASSERT_EQ(r.train_curve.size(), 20u);
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  const std::vector<double> first(r.train_curve.begin(), r.train_curve.begin() + 10);
  const std::vector<double> last(r.train_curve.end() - 10, r.train_curve.end());
  EXPECT_LT(median(last), median(first));
  EXPECT_LT(r.best_val, 1e-3);
}

TEST(PretrainGenerator, EmptyDataIsAnError) {
  Generator gen(TinyGenerator(), 72);
  std::vector<Image> imgs = CorpusImages(SmallCorpus());
  EXPECT_THROW(PretrainGenerator(gen, {}, imgs, 0.01, {}), InvalidArgument);
  EXPECT_THROW(PretrainGenerator(gen, imgs, imgs, -0.1, {}), InvalidArgument);
}

// --- Adversarial training -------------------------------------------------------------------

struct Nets {
  Generator gen{TinyGenerator(), 80};
  AuxClassifier clf{TinyClassifier(), 81};
  Verifier ver{TinyVerifier(), 82};
  Nets() { RandomizeScore(ver, 83); }
};

std::vector<ImagePair> SomePairs(std::size_t n, std::uint64_t seed) {
  const Corpus& corpus = SmallCorpus();
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  return BuildPairs(corpus, all, n, seed);
}

TrainConfig SmallTrain() {
  TrainConfig c;
  c.epochs = 2;
  c.iterations = 10;
  c.batch = 4;
  c.lr = 1e-3;
  c.mu = 0.05;
  c.seed = 5;
  return c;
}

TEST(AdversarialStep, EachOptimizerAdvancesOnce) {
  Nets n;
  const TrainConfig c = SmallTrain();
  AdversarialState state(n.gen, n.clf, n.ver, c);
  const auto pairs = SomePairs(4, 1);
  const BatchLosses l = AdversarialStep(state, SmallCorpus(), pairs, c);
  EXPECT_EQ(state.gen_opt.steps(), 1u);
  EXPECT_EQ(state.aux_opt.steps(), 1u);
  EXPECT_EQ(state.ver_opt.steps(), 1u);
  EXPECT_TRUE(std::isfinite(l.aux) && std::isfinite(l.ver));
  EXPECT_NEAR(l.total, l.aux + l.ver, 1e-12);
}

TEST(AdversarialStep, MatchesSequentialReference) {
  // The step must equal: a generator update with the adversaries held fixed,
  // then a classifier update and a verifier update on images deformed by the
  // updated generator. Any cross-talk between the three parameter sets shows
  // up as a mismatch.
  Nets a, b;
  const TrainConfig c = SmallTrain();
  const auto pairs = SomePairs(4, 2);
  const Corpus& corpus = SmallCorpus();
  AdversarialState state(a.gen, a.clf, a.ver, c);
  AdversarialStep(state, corpus, pairs, c);

  std::vector<const Image*> p1, p2;
  Tensor labels({pairs.size(), kNumClasses}), same({pairs.size()});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    p1.push_back(&corpus[pairs[i].first].image);
    p2.push_back(&corpus[pairs[i].second].image);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      labels.data()[i * kNumClasses + k] = corpus[pairs[i].first].labels[k];
    }
    same.data()[i] = pairs[i].same;
  }
  const Tensor x1 = StackImages(p1), x2 = StackImages(p2);
  auto deform = [&](Graph& g) {
    const Tensor grid = warp_ops::SamplingGrid(g, b.gen.Forward(g, x1), c.mu, FlowKernel());
    return warp_ops::GridSample(g, x1, grid);
  };
  Adam go(b.gen.params(), {c.lr}), ao(b.clf.params(), {c.aux_lr}), vo(b.ver.params(), {c.ver_lr});
  {
    b.clf.params().SetRequiresGrad(false);
    b.ver.params().SetRequiresGrad(false);
    Graph g;
    const Tensor fx = deform(g);
    // Named statements fix the tape order: aux branch first, then ver.
    const Tensor la = loss_ops::Aux(g, b.clf.Forward(g, fx), labels);
    const Tensor lv = loss_ops::Ver(g, b.ver.Forward(g, fx, x2));
    const Tensor total = ops::add(g, la, ops::scale(g, lv, c.ver_weight));
    b.gen.params().ClearGrad();
    g.Backward(total);
    go.Step();
    b.clf.params().SetRequiresGrad(true);
    b.ver.params().SetRequiresGrad(true);
  }
  Tensor fx;
  {
    Graph g(Graph::Mode::kInference);
    fx = deform(g);
  }
  {
    Graph g;
    b.clf.params().ClearGrad();
    g.Backward(loss_ops::Aux(g, b.clf.Forward(g, fx), labels));
    ao.Step();
  }
  {
    Graph g;
    b.ver.params().ClearGrad();
    g.Backward(loss_ops::SnnBce(g, b.ver.Forward(g, fx, x2), same));
    vo.Step();
  }
  auto equal = [](const ParamSet& x, const ParamSet& y) {
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.at(i).size(); ++j) {
        if (x.at(i).data()[j] != y.at(i).data()[j]) return false;
      }
    return true;
  };
  EXPECT_TRUE(equal(a.gen.params(), b.gen.params()));
  EXPECT_TRUE(equal(a.clf.params(), b.clf.params()));
  EXPECT_TRUE(equal(a.ver.params(), b.ver.params()));
  // Adversaries end unfrozen.
  for (const auto& [name, t] : a.clf.params()) EXPECT_TRUE(t.requires_grad());
  for (const auto& [name, t] : a.ver.params()) EXPECT_TRUE(t.requires_grad());
}

TEST(TrainAdversarial, SmokeRunIsFiniteAndLogged) {
  Nets n;
  TrainConfig c = SmallTrain();
  const auto log = std::filesystem::temp_directory_path() / "radanon_train_log.csv";
  c.log_path = log.string();
  const TrainResult r =
      TrainAdversarial(n.gen, n.clf, n.ver, SmallCorpus(), SomePairs(40, 3), SomePairs(12, 4), c);
  ASSERT_EQ(r.epochs.size(), 2u);
  for (const EpochStats& s : r.epochs) {
    EXPECT_TRUE(std::isfinite(s.aux) && std::isfinite(s.ver) && std::isfinite(s.total));
    EXPECT_TRUE(std::isfinite(s.val_total));
  }
  EXPECT_GE(r.best_epoch, 1u);
  std::ifstream in(log);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "epoch,l_aux,l_ver,l_total,val_aux,val_ver,val_total");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 2u);
  std::filesystem::remove(log);
}

TEST(TrainAdversarial, DeterministicUnderFixedSeeds) {
  Nets a, b;
  const TrainConfig c = SmallTrain();
  const auto tp = SomePairs(40, 5), vp = SomePairs(12, 6);
  const TrainResult ra = TrainAdversarial(a.gen, a.clf, a.ver, SmallCorpus(), tp, vp, c);
  const TrainResult rb = TrainAdversarial(b.gen, b.clf, b.ver, SmallCorpus(), tp, vp, c);
  for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
    EXPECT_EQ(ra.epochs[e].total, rb.epochs[e].total);
    EXPECT_EQ(ra.epochs[e].val_total, rb.epochs[e].val_total);
  }
}

TEST(TrainAdversarial, ReturnsBestGeneratorByValidationTotal) {
  Nets n;
  const TrainConfig c = SmallTrain();
  const auto vp = SomePairs(12, 8);
  const TrainResult r = TrainAdversarial(n.gen, n.clf, n.ver, SmallCorpus(), SomePairs(40, 7), vp, c);
  double best = r.epochs[0].val_total;
  for (const auto& s : r.epochs) best = std::min(best, s.val_total);
  EXPECT_EQ(r.best_val_total, best);
  EXPECT_EQ(r.epochs[r.best_epoch - 1].val_total, best);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.mu = -0.1;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = TrainConfig{};
  c.batch = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = TrainConfig{};
  c.lr = 0.0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  PretrainConfig p;
  p.epochs = 0;
  EXPECT_THROW(p.Validate(), InvalidArgument);
}

}  // namespace
}  // namespace radanon
