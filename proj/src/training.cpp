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
#include "radanon/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "radanon/error.hpp"
#include "radanon/evaluation.hpp"

namespace radanon {

namespace {

double Clip(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

// d/dp of -log(clip(p)), zero where the clip is active.
double NegLogGrad(double p) {
  return (p < kProbClip || p > 1.0 - kProbClip) ? 0.0 : -1.0 / p;
}

void RequireLabel(double y) {
  if (y != 0.0 && y != 1.0) {
    throw InvalidArgument("loss: similarity label must be 0 or 1, got " +
                          std::to_string(y));
  }
}

}  // namespace

double AuxLoss(std::span<const double> probs, std::span<const double> labels) {
  if (probs.size() != kNumClasses || labels.size() != kNumClasses) {
    throw InvalidArgument("aux loss: expected " + std::to_string(kNumClasses) +
                          " probabilities and labels, got " +
                          std::to_string(probs.size()) + " and " +
                          std::to_string(labels.size()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const double p = Clip(probs[i]);
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return loss;
}

double VerLoss(double prob) { return -std::log(1.0 - Clip(prob)); }

double TotalGenLoss(double aux, double ver) { return aux + ver; }

double SnnBceLoss(double prob, double label) {
  RequireLabel(label);
  const double p = Clip(prob);
  return -label * std::log(p) - (1.0 - label) * std::log(1.0 - p);
}

namespace loss_ops {

Tensor Aux(Graph& g, const Tensor& probs, const Tensor& labels) {
  if (probs.rank() != 2 || probs.shape() != labels.shape()) {
    throw InvalidArgument("aux loss: probs and labels must be matching [N,C], got " +
                          ShapeString(probs.shape()) + " and " +
                          ShapeString(labels.shape()));
  }
  if (probs.dim(1) != kNumClasses) {
    throw InvalidArgument("aux loss: expected " + std::to_string(kNumClasses) +
                          " classes, got " + std::to_string(probs.dim(1)));
  }
  const std::size_t n = probs.dim(0);
  auto p = probs.data();
  auto y = labels.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = Clip(p[i]);
    acc -= y[i] * std::log(c) + (1.0 - y[i]) * std::log(1.0 - c);
  }
  Tensor out({1}, acc / static_cast<double>(n));
  if (g.Tracks({&probs})) {
    out.set_requires_grad(true);
    g.Push([probs, labels, out, n]() {
      if (!out.has_grad()) return;
      const double go = out.grad()[0] / static_cast<double>(n);
      auto pv = probs.data();
      auto yv = labels.data();
      auto gp = probs.ensure_grad();
      for (std::size_t i = 0; i < gp.size(); ++i) {
        gp[i] += go * (yv[i] * NegLogGrad(pv[i]) -
                       (1.0 - yv[i]) * NegLogGrad(1.0 - pv[i]));
      }
    });
  }
  return out;
}

Tensor Ver(Graph& g, const Tensor& probs) {
  if (probs.rank() != 2 || probs.dim(1) != 1) {
    throw InvalidArgument("ver loss: expected [N,1] probabilities, got " +
                          ShapeString(probs.shape()));
  }
  const std::size_t n = probs.dim(0);
  double acc = 0.0;
  for (double p : probs.data()) acc += VerLoss(p);
  Tensor out({1}, acc / static_cast<double>(n));
  if (g.Tracks({&probs})) {
    out.set_requires_grad(true);
    g.Push([probs, out, n]() {
      if (!out.has_grad()) return;
      const double go = out.grad()[0] / static_cast<double>(n);
      auto pv = probs.data();
      auto gp = probs.ensure_grad();
      for (std::size_t i = 0; i < gp.size(); ++i) {
        gp[i] -= go * NegLogGrad(1.0 - pv[i]);
      }
    });
  }
  return out;
}

Tensor SnnBce(Graph& g, const Tensor& probs, const Tensor& labels) {
  if (probs.rank() != 2 || probs.dim(1) != 1 || labels.size() != probs.dim(0)) {
    throw InvalidArgument("snn loss: expected [N,1] probabilities and N labels, got " +
                          ShapeString(probs.shape()) + " and " +
                          ShapeString(labels.shape()));
  }
  const std::size_t n = probs.dim(0);
  auto p = probs.data();
  auto y = labels.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += SnnBceLoss(p[i], y[i]);
  Tensor out({1}, acc / static_cast<double>(n));
  if (g.Tracks({&probs})) {
    out.set_requires_grad(true);
    g.Push([probs, labels, out, n]() {
      if (!out.has_grad()) return;
      const double go = out.grad()[0] / static_cast<double>(n);
      auto pv = probs.data();
      auto yv = labels.data();
      auto gp = probs.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        gp[i] += go * (yv[i] * NegLogGrad(pv[i]) -
                       (1.0 - yv[i]) * NegLogGrad(1.0 - pv[i]));
      }
    });
  }
  return out;
}

}  // namespace loss_ops

// --- Inference ----------------------------------------------------------------

namespace {

const GaussianKernel& FlowKernel() {
  static const GaussianKernel k =
      GaussianKernel::Make(kFlowKernelSize, kFlowKernelSigma);
  return k;
}

void RequireSide(const Generator& generator, const Image& image) {
  const std::size_t s = generator.config().side;
  if (image.height != s || image.width != s) {
    throw InvalidArgument("anonymize: image is " + std::to_string(image.height) +
                          "x" + std::to_string(image.width) +
                          " but the generator expects " + std::to_string(s) +
                          "x" + std::to_string(s));
  }
}

// Deformed batch for a stacked input; records onto `g` when it records.
Tensor DeformBatch(Graph& g, const Generator& generator, const Tensor& x,
                   double mu) {
  const Tensor raw = generator.Forward(g, x);
  const Tensor grid = warp_ops::SamplingGrid(g, raw, mu, FlowKernel());
  return warp_ops::GridSample(g, x, grid);
}

std::vector<const Image*> Gather(std::span<const Image> pool,
                                 std::span<const std::size_t> idx) {
  std::vector<const Image*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= pool.size()) throw InvalidArgument("batch: record index out of range");
    out.push_back(&pool[i]);
  }
  return out;
}

}  // namespace

FlowField PredictFlow(const Generator& generator, const Image& image, double mu) {
  RequireSide(generator, image);
  Graph g(Graph::Mode::kInference);
  const Tensor x = StackImages(std::span<const Image>(&image, 1));
  const Tensor grid =
      warp_ops::SamplingGrid(g, generator.Forward(g, x), mu, FlowKernel());
  FlowField f = FlowFromTensor(grid, 0);
  f.mu = mu;
  return f;
}

Image Anonymize(const Generator& generator, const Image& image, double mu) {
  RequireSide(generator, image);
  Graph g(Graph::Mode::kInference);
  const Tensor x = StackImages(std::span<const Image>(&image, 1));
  return ImageFromTensor(DeformBatch(g, generator, x, mu), 0);
}

std::vector<Image> AnonymizeAll(const Generator& generator,
                                std::span<const Image> images, double mu,
                                std::size_t batch) {
  if (batch == 0) throw InvalidArgument("anonymize: batch must be positive");
  for (const Image& im : images) RequireSide(generator, im);
  std::vector<Image> out;
  out.reserve(images.size());
  for (std::size_t s = 0; s < images.size(); s += batch) {
    const auto part = images.subspan(s, std::min(batch, images.size() - s));
    Graph g(Graph::Mode::kInference);
    const Tensor y = DeformBatch(g, generator, StackImages(part), mu);
    for (std::size_t i = 0; i < part.size(); ++i) out.push_back(ImageFromTensor(y, i));
  }
  return out;
}

std::vector<Image> CorpusImages(const Corpus& corpus) {
  std::vector<Image> out;
  out.reserve(corpus.size());
  for (const Record& r : corpus) out.push_back(r.image);
  return out;
}

// --- Pre-training ---------------------------------------------------------------

void PretrainConfig::Validate() const {
  if (epochs == 0 || batch == 0) {
    throw InvalidArgument("pretrain: epochs and batch must be positive");
  }
  if (!(lr > 0.0)) throw InvalidArgument("pretrain: lr must be > 0");
}

namespace {

// Shared epoch loop: `step` trains on one batch of item indices and returns
// its loss, `validate` returns the selection metric. Parameters with the
// best metric are restored at the end.
template <typename Step, typename Validate>
PretrainResult RunEpochs(ParamSet& params, std::size_t n_items,
                         const PretrainConfig& config, bool higher_is_better,
                         Step step, Validate validate) {
  config.Validate();
  if (n_items == 0) throw InvalidArgument("pretrain: empty training set");
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);

  PretrainResult result;
  ParamSet best = params.Clone();
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double acc = 0.0;
    std::size_t batches = 0;
    for (std::size_t s = 0; s < n_items; s += config.batch) {
      const std::span<const std::size_t> idx(
          order.data() + s, std::min(config.batch, n_items - s));
      acc += step(idx);
      ++batches;
    }
    result.train_curve.push_back(acc / static_cast<double>(batches));
    const double metric = validate();
    result.val_curve.push_back(metric);
    const bool better = result.best_epoch == 0 ||
                        (higher_is_better ? metric > result.best_val
                                          : metric < result.best_val);
    if (better) {
      result.best_epoch = epoch;
      result.best_val = metric;
      best.CopyValuesFrom(params);
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  params.CopyValuesFrom(best);
  return result;
}

Tensor LabelTensor(const Corpus& corpus, std::span<const std::size_t> records) {
  Tensor t({records.size(), kNumClasses});
  auto d = t.data();
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t c = 0; c < kNumClasses; ++c)
      d[i * kNumClasses + c] = corpus[records[i]].labels[c];
  return t;
}

}  // namespace

PretrainResult PretrainGenerator(Generator& generator,
                                 std::span<const Image> train,
                                 std::span<const Image> val, double mu,
                                 const PretrainConfig& config) {
  if (train.empty() || val.empty()) {
    throw InvalidArgument("pretrain generator: empty training or validation set");
  }
  if (mu < 0.0) throw InvalidArgument("pretrain generator: mu must be >= 0");
  for (const Image& im : train) RequireSide(generator, im);
  for (const Image& im : val) RequireSide(generator, im);
  Adam opt(generator.params(), {config.lr});
  auto step = [&](std::span<const std::size_t> idx) {
    const Tensor x = StackImages(Gather(train, idx));
    Graph g;
    const Tensor loss = ops::mse(g, DeformBatch(g, generator, x, mu), x);
    generator.params().ClearGrad();
    g.Backward(loss);
    opt.Step();
    return loss.item();
  };
  auto validate = [&] {
    double acc = 0.0;
    for (std::size_t s = 0; s < val.size(); s += config.batch) {
      const auto part = val.subspan(s, std::min(config.batch, val.size() - s));
      Graph g(Graph::Mode::kInference);
      const Tensor x = StackImages(part);
      acc += ops::mse(g, DeformBatch(g, generator, x, mu), x).item() *
             static_cast<double>(part.size());
    }
    return acc / static_cast<double>(val.size());
  };
  return RunEpochs(generator.params(), train.size(), config, false, step, validate);
}

PretrainResult PretrainClassifier(AuxClassifier& classifier,
                                  const Corpus& corpus,
                                  std::span<const std::size_t> train,
                                  std::span<const std::size_t> val,
                                  const PretrainConfig& config) {
  if (train.empty() || val.empty()) {
    throw InvalidArgument("pretrain classifier: empty training or validation set");
  }
  const std::vector<Image> images = CorpusImages(corpus);
  Adam opt(classifier.params(), {config.lr});
  auto step = [&](std::span<const std::size_t> idx) {
    std::vector<std::size_t> rec;
    for (std::size_t i : idx) rec.push_back(train[i]);
    Graph g;
    const Tensor loss =
        loss_ops::Aux(g, classifier.Forward(g, StackImages(Gather(images, rec))),
                      LabelTensor(corpus, rec));
    classifier.params().ClearGrad();
    g.Backward(loss);
    opt.Step();
    return loss.item();
  };
  auto validate = [&] {
    double acc = 0.0;
    for (std::size_t s = 0; s < val.size(); s += config.batch) {
      const auto part = val.subspan(s, std::min(config.batch, val.size() - s));
      Graph g(Graph::Mode::kInference);
      acc += loss_ops::Aux(g, classifier.Forward(g, StackImages(Gather(images, part))),
                           LabelTensor(corpus, part))
                 .item() *
             static_cast<double>(part.size());
    }
    return acc / static_cast<double>(val.size());
  };
  return RunEpochs(classifier.params(), train.size(), config, false, step, validate);
}

std::vector<double> ScorePairs(const Verifier& verifier,
                               std::span<const Image> first,
                               std::span<const Image> second,
                               std::span<const ImagePair> pairs,
                               std::size_t batch) {
  if (batch == 0) throw InvalidArgument("score pairs: batch must be positive");
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (std::size_t s = 0; s < pairs.size(); s += batch) {
    const auto part = pairs.subspan(s, std::min(batch, pairs.size() - s));
    std::vector<std::size_t> a, b;
    for (const ImagePair& p : part) {
      a.push_back(p.first);
      b.push_back(p.second);
    }
    Graph g(Graph::Mode::kInference);
    const Tensor prob = verifier.Forward(g, StackImages(Gather(first, a)),
                                         StackImages(Gather(second, b)));
    for (double v : prob.data()) scores.push_back(v);
  }
  return scores;
}

PretrainResult TrainVerifier(Verifier& verifier, std::span<const Image> first,
                             std::span<const Image> second,
                             std::span<const ImagePair> train_pairs,
                             std::span<const ImagePair> val_pairs,
                             const PretrainConfig& config) {
  if (train_pairs.empty() || val_pairs.empty()) {
    throw InvalidArgument("train verifier: empty training or validation pairs");
  }
  std::vector<int> val_labels;
  for (const ImagePair& p : val_pairs) val_labels.push_back(p.same);
  Adam opt(verifier.params(), {config.lr});
  auto step = [&](std::span<const std::size_t> idx) {
    std::vector<std::size_t> a, b;
    Tensor y({idx.size()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const ImagePair& p = train_pairs[idx[i]];
      a.push_back(p.first);
      b.push_back(p.second);
      y.data()[i] = p.same;
    }
    Graph g;
    const Tensor loss = loss_ops::SnnBce(
        g,
        verifier.Forward(g, StackImages(Gather(first, a)),
                         StackImages(Gather(second, b))),
        y);
    verifier.params().ClearGrad();
    g.Backward(loss);
    opt.Step();
    return loss.item();
  };
  auto validate = [&] {
    return RocAuc(ScorePairs(verifier, first, second, val_pairs), val_labels);
  };
  return RunEpochs(verifier.params(), train_pairs.size(), config, true, step,
                   validate);
}

// --- Adversarial training ---------------------------------------------------------

void TrainConfig::Validate() const {
  if (epochs == 0 || iterations == 0 || batch == 0) {
    throw InvalidArgument("train: epochs, iterations and batch must be positive");
  }
  if (!(lr > 0.0) || !(aux_lr > 0.0) || !(ver_lr > 0.0)) {
    throw InvalidArgument("train: learning rates must be > 0");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw InvalidArgument("train: mu must be finite and >= 0");
  }
  if (!(ver_weight >= 0.0)) throw InvalidArgument("train: ver_weight must be >= 0");
}

AdversarialState::AdversarialState(Generator& g, AuxClassifier& a, Verifier& v,
                                   const TrainConfig& config)
    : generator(&g),
      classifier(&a),
      verifier(&v),
      gen_opt(g.params(), {config.lr}),
      aux_opt(a.params(), {config.aux_lr}),
      ver_opt(v.params(), {config.ver_lr}) {}

namespace {

struct PairBatch {
  Tensor x1;
  Tensor x2;
  Tensor labels;  // [N,14] classes of x1
  Tensor same;    // [N]
};

// Excludes a parameter set from differentiation for one scope.
class Frozen {
 public:
  explicit Frozen(ParamSet& params) : params_(params) {
    params_.SetRequiresGrad(false);
  }
  ~Frozen() { params_.SetRequiresGrad(true); }
  Frozen(const Frozen&) = delete;
  Frozen& operator=(const Frozen&) = delete;

 private:
  ParamSet& params_;
};

PairBatch MakeBatch(const Corpus& corpus, std::span<const ImagePair> pairs) {
  std::vector<const Image*> a, b;
  std::vector<std::size_t> rec;
  PairBatch out;
  out.same = Tensor({pairs.size()});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ImagePair& p = pairs[i];
    if (p.first >= corpus.size() || p.second >= corpus.size()) {
      throw InvalidArgument("batch: pair references a missing record");
    }
    a.push_back(&corpus[p.first].image);
    b.push_back(&corpus[p.second].image);
    rec.push_back(p.first);
    out.same.data()[i] = p.same;
  }
  out.x1 = StackImages(a);
  out.x2 = StackImages(b);
  out.labels = LabelTensor(corpus, rec);
  return out;
}

}  // namespace

BatchLosses AdversarialStep(AdversarialState& state, const Corpus& corpus,
                            std::span<const ImagePair> batch,
                            const TrainConfig& config) {
  if (batch.empty()) throw InvalidArgument("train: empty batch");
  Generator& gen = *state.generator;
  AuxClassifier& aux = *state.classifier;
  Verifier& ver = *state.verifier;
  const PairBatch b = MakeBatch(corpus, batch);
  BatchLosses out;

  // Generator step; the adversaries only pass gradients through.
  {
    const Frozen frozen_aux(aux.params());
    const Frozen frozen_ver(ver.params());
    Graph g;
    const Tensor fx1 = DeformBatch(g, gen, b.x1, config.mu);
    const Tensor la = loss_ops::Aux(g, aux.Forward(g, fx1), b.labels);
    const Tensor lv = loss_ops::Ver(g, ver.Forward(g, fx1, b.x2));
    const Tensor total = ops::add(g, la, ops::scale(g, lv, config.ver_weight));
    gen.params().ClearGrad();
    g.Backward(total);
    state.gen_opt.Step();
    out = {la.item(), lv.item(), total.item()};
  }

  // Fresh deformation from the updated generator, used as a constant input.
  Tensor fx1;
  {
    Graph g(Graph::Mode::kInference);
    fx1 = DeformBatch(g, gen, b.x1, config.mu);
  }
  {
    Graph g;
    const Tensor loss = loss_ops::Aux(g, aux.Forward(g, fx1), b.labels);
    aux.params().ClearGrad();
    g.Backward(loss);
    state.aux_opt.Step();
  }
  {
    Graph g;
    const Tensor loss = loss_ops::SnnBce(g, ver.Forward(g, fx1, b.x2), b.same);
    ver.params().ClearGrad();
    g.Backward(loss);
    state.ver_opt.Step();
  }
  return out;
}

BatchLosses EvaluateGenerator(const Generator& generator,
                              const AuxClassifier& classifier,
                              const Verifier& verifier, const Corpus& corpus,
                              std::span<const ImagePair> pairs,
                              const TrainConfig& config) {
  if (pairs.empty()) throw InvalidArgument("evaluate: no validation pairs");
  BatchLosses acc;
  for (std::size_t s = 0; s < pairs.size(); s += config.batch) {
    const auto part = pairs.subspan(s, std::min(config.batch, pairs.size() - s));
    const PairBatch b = MakeBatch(corpus, part);
    Graph g(Graph::Mode::kInference);
    const Tensor fx1 = DeformBatch(g, generator, b.x1, config.mu);
    const double n = static_cast<double>(part.size());
    acc.aux += loss_ops::Aux(g, classifier.Forward(g, fx1), b.labels).item() * n;
    acc.ver += loss_ops::Ver(g, verifier.Forward(g, fx1, b.x2)).item() * n;
  }
  const double n = static_cast<double>(pairs.size());
  acc.aux /= n;
  acc.ver /= n;
  acc.total = acc.aux + config.ver_weight * acc.ver;
  return acc;
}

TrainResult TrainAdversarial(Generator& generator, AuxClassifier& classifier,
                             Verifier& verifier, const Corpus& corpus,
                             std::span<const ImagePair> train_pairs,
                             std::span<const ImagePair> val_pairs,
                             const TrainConfig& config) {
  config.Validate();
  if (train_pairs.empty() || val_pairs.empty()) {
    throw InvalidArgument("train: empty training or validation pairs");
  }
  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path, std::ios::trunc);
    if (!log) throw IoError("train: cannot open log " + config.log_path);
    log << "epoch,l_aux,l_ver,l_total,val_aux,val_ver,val_total\n";
    log.precision(10);
  }

  AdversarialState state(generator, classifier, verifier, config);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainResult result;
  ParamSet best = generator.params().Clone();
  std::vector<ImagePair> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochStats st;
    st.epoch = epoch;
    for (std::size_t it = 0; it < config.iterations; ++it) {
      batch.clear();
      while (batch.size() < std::min(config.batch, train_pairs.size())) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), rng);
          cursor = 0;
        }
        batch.push_back(train_pairs[order[cursor++]]);
      }
      const BatchLosses l = AdversarialStep(state, corpus, batch, config);
      st.aux += l.aux;
      st.ver += l.ver;
      st.total += l.total;
    }
    const double iters = static_cast<double>(config.iterations);
    st.aux /= iters;
    st.ver /= iters;
    st.total /= iters;
    const BatchLosses v =
        EvaluateGenerator(generator, classifier, verifier, corpus, val_pairs, config);
    st.val_aux = v.aux;
    st.val_ver = v.ver;
    st.val_total = v.total;
    if (!std::isfinite(st.total) || !std::isfinite(v.total)) {
      throw StateError("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    if (result.best_epoch == 0 || v.total < result.best_val_total) {
      result.best_epoch = epoch;
      result.best_val_total = v.total;
      best.CopyValuesFrom(generator.params());
    }
    result.epochs.push_back(st);
    if (log) {
      log << st.epoch << ',' << st.aux << ',' << st.ver << ',' << st.total << ','
          << st.val_aux << ',' << st.val_ver << ',' << st.val_total << '\n';
    }
  }
  generator.params().CopyValuesFrom(best);
  return result;
}

}  // namespace radanon
