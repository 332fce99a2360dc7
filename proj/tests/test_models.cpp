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

#include <cmath>
#include <filesystem>
#include <random>

#include "radanon/error.hpp"
#include "radanon/models.hpp"
#include "radanon/training.hpp"
#include "test_util.hpp"

namespace radanon {
namespace {

using testing::GradCheck;
using testing::RandomImage;
using testing::RandomTensor;

GeneratorConfig TinyGenerator() {
  GeneratorConfig c;
  c.side = 16;
  c.base_width = 2;
  c.levels = 2;
  return c;
}

ClassifierConfig TinyClassifier() {
  ClassifierConfig c;
  c.side = 16;
  c.widths = {3, 4};
  return c;
}

VerifierConfig TinyVerifier() {
  VerifierConfig c;
  c.side = 16;
  c.widths = {3, 4};
  c.embedding = 8;
  return c;
}

void ZeroParams(ParamSet& p, const std::string& prefix) {
  for (auto& [name, t] : p) {
    if (name.rfind(prefix, 0) == 0) {
      for (double& v : t.data()) v = 0.0;
    }
  }
}

// --- Generator ----------------------------------------------------------------------

TEST(Generator, OutputShapeAndRange) {
  const Generator gen(TinyGenerator(), 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    // Arbitrary finite inputs, not only [0,1].
    const Tensor x = RandomTensor({2, 1, 16, 16}, rng, -50, 50);
    Graph g(Graph::Mode::kInference);
    const Tensor raw = gen.Forward(g, x);
    EXPECT_EQ(raw.shape(), (Shape{2, 2, 16, 16}));
    for (double v : raw.data()) {
      ASSERT_GE(v, -1.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Generator, ZeroHeadGivesIdentityAnonymization) {
  Generator gen(TinyGenerator(), 2);
  ZeroParams(gen.params(), "head.");
  std::mt19937_64 rng(3);
  const Image x = RandomImage(16, 16, rng);
  for (double mu : {0.0, 0.01, 0.5}) {
    const Image y = Anonymize(gen, x, mu);
    for (std::size_t i = 0; i < x.pixels.size(); ++i) ASSERT_NEAR(y.pixels[i], x.pixels[i], 1e-12);
  }
}

TEST(Generator, SeedReproducible) {
  const Generator a(TinyGenerator(), 7), b(TinyGenerator(), 7), c(TinyGenerator(), 8);
  std::mt19937_64 rng(4);
  const Tensor x = RandomTensor({1, 1, 16, 16}, rng, 0, 1);
  Graph g(Graph::Mode::kInference);
  const Tensor fa = a.Forward(g, x), fb = b.Forward(g, x), fc = c.Forward(g, x);
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(fa.data()[i], fb.data()[i]);
  EXPECT_NE(std::vector<double>(fa.data().begin(), fa.data().end()),
            std::vector<double>(fc.data().begin(), fc.data().end()));
}

TEST(Generator, WrongExtentIsAnError) {
  const Generator gen(TinyGenerator(), 1);
  Graph g;
  EXPECT_THROW(gen.Forward(g, Tensor({1, 1, 8, 8})), InvalidArgument);
  EXPECT_THROW(gen.Forward(g, Tensor({1, 2, 16, 16})), InvalidArgument);
  EXPECT_THROW(Anonymize(gen, Image(8, 8), 0.01), InvalidArgument);
  GeneratorConfig bad = TinyGenerator();
  bad.side = 18;
  EXPECT_THROW(Generator(bad, 0), InvalidArgument);
}

// --- Classifier ---------------------------------------------------------------------

TEST(Classifier, ZeroFinalLayerGivesHalf) {
  AuxClassifier clf(TinyClassifier(), 5);
  ZeroParams(clf.params(), "fc.");
  std::mt19937_64 rng(6);
  Graph g(Graph::Mode::kInference);
  const Tensor p = clf.Forward(g, RandomTensor({3, 1, 16, 16}, rng, 0, 1));
  EXPECT_EQ(p.shape(), (Shape{3, kNumClasses}));
  for (double v : p.data()) EXPECT_EQ(v, 0.5);
}

TEST(Classifier, MultiLabelOutputsNeedNotSumToOne) {
  AuxClassifier clf(TinyClassifier(), 5);
  ZeroParams(clf.params(), "fc.");
  Graph g(Graph::Mode::kInference);
  const Tensor p = clf.Forward(g, Tensor({1, 1, 16, 16}, 0.5));
  double total = 0.0;
  for (double v : p.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
    total += v;
  }
  EXPECT_GT(total, 1.0);
}

TEST(Classifier, BceGradientWrtLogitsIsPredictionMinusLabel) {
  const AuxClassifier clf(TinyClassifier(), 9);
  std::mt19937_64 rng(10);
  const Tensor x = RandomTensor({1, 1, 16, 16}, rng, 0, 1);
  Tensor labels({1, kNumClasses});
  for (std::size_t c = 0; c < kNumClasses; c += 3) labels.data()[c] = 1.0;
  Graph g;
  Tensor logits = clf.Logits(g, x);
  const Tensor probs = ops::sigmoid(g, logits);
  g.Backward(loss_ops::Aux(g, probs, labels));
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    EXPECT_NEAR(logits.grad()[c], probs.data()[c] - labels.data()[c], 1e-12);
  }
}

TEST(Classifier, ParameterGradientsMatchFiniteDifferences) {
  AuxClassifier clf(TinyClassifier(), 11);
  std::mt19937_64 rng(12);
  const Tensor x = RandomTensor({2, 1, 16, 16}, rng, 0, 1);
  Tensor labels({2, kNumClasses});
  for (double& v : labels.data()) v = (rng() & 1) ? 1.0 : 0.0;
  std::vector<Tensor> wrt;
  for (auto& [name, t] : clf.params()) wrt.push_back(t);
  const auto r = GradCheck(
      [&](Graph& g) { return loss_ops::Aux(g, clf.Forward(g, x), labels); }, wrt, 6, 13);
  EXPECT_GE(r.checked, 20u);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

// --- Verifier -----------------------------------------------------------------------

TEST(Verifier, UntrainedScoresExactlyHalf) {
  const Verifier ver(TinyVerifier(), 14);
  std::mt19937_64 rng(15);
  Graph g(Graph::Mode::kInference);
  const Tensor p = ver.Forward(g, RandomTensor({5, 1, 16, 16}, rng, 0, 1),
                               RandomTensor({5, 1, 16, 16}, rng, 0, 1));
  EXPECT_EQ(p.shape(), (Shape{5, 1}));
  for (double v : p.data()) EXPECT_EQ(v, 0.5);
}

TEST(Verifier, SymmetricProperty) {
  Verifier ver(TinyVerifier(), 16);
  std::mt19937_64 rng(17);
  for (double& v : ver.params().Get("score.w").data()) v = testing::Uniform(rng, -1, 1);
  ver.params().Get("score.b").data()[0] = 0.3;
  for (int k = 0; k < 100; ++k) {
    const Tensor a = RandomTensor({1, 1, 16, 16}, rng, 0, 1);
    const Tensor b = RandomTensor({1, 1, 16, 16}, rng, 0, 1);
    Graph g(Graph::Mode::kInference);
    ASSERT_EQ(ver.Forward(g, a, b).item(), ver.Forward(g, b, a).item());
  }
}

TEST(Verifier, IdenticalInputsScoreSigmoidOfBias) {
  Verifier ver(TinyVerifier(), 18);
  std::mt19937_64 rng(19);
  for (double& v : ver.params().Get("score.w").data()) v = testing::Uniform(rng, -1, 1);
  ver.params().Get("score.b").data()[0] = -0.8;
  const Tensor a = RandomTensor({1, 1, 16, 16}, rng, 0, 1);
  Graph g(Graph::Mode::kInference);
  EXPECT_DOUBLE_EQ(ver.Forward(g, a, a).item(), 1.0 / (1.0 + std::exp(0.8)));
}

TEST(Verifier, TwinsShareOneParameterSet) {
  const Verifier ver(TinyVerifier(), 20);
  for (const auto& [name, t] : ver.params()) {
    EXPECT_EQ(name.find("twin"), std::string::npos);
    EXPECT_EQ(name.find("branch"), std::string::npos);
  }
  Graph g;
  EXPECT_THROW(ver.Forward(g, Tensor({1, 1, 16, 16}), Tensor({2, 1, 16, 16})), InvalidArgument);
  EXPECT_THROW(ver.Embed(g, Tensor({1, 1, 8, 8})), InvalidArgument);
}

// --- Bundles ------------------------------------------------------------------------

TEST(Bundle, SaveLoadRoundTrip) {
  ModelBundle b = MakeBundle(TinyGenerator(), TinyClassifier(), TinyVerifier(), 21);
  b.mu = 0.04;
  const auto path = std::filesystem::temp_directory_path() / "radanon_bundle_test.danv";
  SaveBundle(path.string(), b);
  const ModelBundle back = LoadBundle(path.string());
  EXPECT_EQ(back.mu, 0.04);
  EXPECT_EQ(back.generator.config().levels, 2u);
  EXPECT_EQ(back.classifier.config().widths, TinyClassifier().widths);
  EXPECT_EQ(back.verifier.config().embedding, 8u);
  auto same = [](const ParamSet& x, const ParamSet& y) {
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(x.name(i), y.name(i));
      for (std::size_t j = 0; j < x.at(i).size(); ++j) {
        ASSERT_EQ(x.at(i).data()[j], y.at(i).data()[j]);
      }
    }
  };
  same(b.generator.params(), back.generator.params());
  same(b.classifier.params(), back.classifier.params());
  same(b.verifier.params(), back.verifier.params());
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace radanon
