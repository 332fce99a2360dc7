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
#include "radanon/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "radanon/error.hpp"

namespace radanon {

PretrainConfig PipelineConfig::Pretrain(std::size_t epochs, std::size_t batch,
                                        double lr, std::size_t patience) {
  PretrainConfig c;
  c.epochs = epochs;
  c.batch = batch;
  c.lr = lr;
  c.patience = patience;
  return c;
}

TrainConfig PipelineConfig::Adversarial() {
  TrainConfig c;
  c.epochs = 4;
  c.iterations = 25;
  c.batch = 8;
  c.lr = 1e-3;
  c.aux_lr = 1e-4;
  c.ver_lr = 1e-4;
  return c;
}

AttackConfig PipelineConfig::Attack() {
  AttackConfig c;
  c.runs = 3;
  c.train = Pretrain(12, 32, 1e-3, 5);
  c.seed = 100;
  return c;
}

void PipelineConfig::Validate() const {
  generator.Validate();
  classifier.Validate();
  verifier.Validate();
  gen_pretrain.Validate();
  clf_pretrain.Validate();
  ver_pretrain.Validate();
  attack.Validate();
  dp_pix.Validate();
  bootstrap.Validate();
  if (mus.empty()) throw InvalidArgument("pipeline: at least one mu is required");
  for (double mu : mus) {
    TrainConfig t = train;
    t.mu = mu;
    t.Validate();
  }
  if (classifier.side != generator.side || verifier.side != generator.side) {
    throw InvalidArgument("pipeline: all networks must share one image side");
  }
}

std::vector<ReportRow> PipelineResult::Rows() const {
  std::vector<ReportRow> rows{clean};
  rows.insert(rows.end(), deformed.begin(), deformed.end());
  rows.push_back(dp_pix);
  return rows;
}

std::vector<Image> DpPixelizeAll(std::span<const Image> images,
                                 const DpPixConfig& config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::vector<Image> out;
  out.reserve(images.size());
  for (const Image& im : images) out.push_back(DpPixelize(im, config, rng));
  return out;
}

namespace {

std::string MuTag(double mu) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", mu);
  return buf;
}

}  // namespace

PipelineResult RunPipeline(const Corpus& corpus, const PipelineConfig& config) {
  config.Validate();
  auto note = [&](const std::string& msg) {
    if (config.progress) config.progress(msg);
  };
  namespace fs = std::filesystem;
  if (!config.out_dir.empty()) fs::create_directories(config.out_dir);
  auto out_path = [&](const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
  };

  const ExperimentData data =
      PrepareExperiment(corpus, config.split_seed, config.pair_seed, config.pairs);
  const std::vector<Image> real = CorpusImages(corpus);
  std::vector<Image> train_images, val_images, test_real;
  std::vector<LabelVector> test_labels;
  for (std::size_t i : data.split.train) train_images.push_back(real[i]);
  for (std::size_t i : data.split.val) val_images.push_back(real[i]);
  for (std::size_t i : data.split.test) {
    test_real.push_back(real[i]);
    test_labels.push_back(corpus[i].labels);
  }
  auto test_subset = [&](const std::vector<Image>& all) {
    std::vector<Image> out;
    for (std::size_t i : data.split.test) out.push_back(all[i]);
    return out;
  };

  ModelBundle base = MakeBundle(config.generator, config.classifier,
                                config.verifier, config.model_seed);
  note("pretraining classifier");
  PretrainConfig pc = config.clf_pretrain;
  pc.seed = config.model_seed + 11;
  PretrainClassifier(base.classifier, corpus, data.split.train, data.split.val, pc);
  note("pretraining verifier");
  PretrainConfig pv = config.ver_pretrain;
  pv.seed = config.model_seed + 12;
  TrainVerifier(base.verifier, real, real, data.train_pairs, data.val_pairs, pv);

  PipelineResult result;
  note("evaluating clean data");
  result.clean.method = "Real data";
  result.clean.attack = LinkageAttack(real, real, data, config.attack);
  result.clean.utility =
      UtilityEval(base.classifier, test_real, test_labels, config.bootstrap);

  for (std::size_t k = 0; k < config.mus.size(); ++k) {
    const double mu = config.mus[k];
    note("mu " + MuTag(mu) + ": pretraining generator");
    ModelBundle run{Generator(config.generator, config.model_seed + 20 + k),
                    base.classifier, base.verifier, mu};
    PretrainConfig pg = config.gen_pretrain;
    pg.seed = config.model_seed + 30 + k;
    PretrainGenerator(run.generator, train_images, val_images, mu, pg);

    note("mu " + MuTag(mu) + ": adversarial training");
    AuxClassifier aux(config.classifier, 0);
    aux.params().CopyValuesFrom(base.classifier.params());
    Verifier ver(config.verifier, 0);
    ver.params().CopyValuesFrom(base.verifier.params());
    TrainConfig tc = config.train;
    tc.mu = mu;
    tc.seed = config.model_seed + 40 + k;
    if (!config.out_dir.empty()) tc.log_path = out_path("train_mu" + MuTag(mu) + ".csv");
    TrainAdversarial(run.generator, aux, ver, corpus, data.train_pairs,
                     data.val_pairs, tc);
    if (!config.out_dir.empty()) {
      SaveBundle(out_path("model_mu" + MuTag(mu) + ".danv"), run);
    }

    note("mu " + MuTag(mu) + ": attack and utility");
    const std::vector<Image> anon = AnonymizeAll(run.generator, real, mu);
    ReportRow row;
    row.method = "Deformation (mu = " + MuTag(mu) + ")";
    row.attack = LinkageAttack(anon, real, data, config.attack);
    row.utility = UtilityEval(base.classifier, test_subset(anon), test_labels,
                              config.bootstrap);
    result.mus.push_back(mu);
    result.deformed.push_back(std::move(row));
  }

  note("evaluating DP-Pix");
  const std::vector<Image> dp = DpPixelizeAll(real, config.dp_pix);
  char label[96];
  std::snprintf(label, sizeof(label), "DP-Pix (b = %zu, eps = %g, m = %g)",
                config.dp_pix.b, config.dp_pix.epsilon, config.dp_pix.m);
  result.dp_pix.method = label;
  result.dp_pix.attack = LinkageAttack(dp, real, data, config.attack);
  result.dp_pix.utility =
      UtilityEval(base.classifier, test_subset(dp), test_labels, config.bootstrap);

  if (!config.out_dir.empty()) {
    SaveBundle(out_path("model_pretrained.danv"), base);
    const auto rows = result.Rows();
    std::ofstream(out_path("report.csv")) << RenderCsv(rows);
    std::ofstream(out_path("report.txt")) << RenderTable(rows);
  }
  return result;
}

}  // namespace radanon
