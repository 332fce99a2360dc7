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
// radanon: command-line front end. Every subcommand writes its outputs plus
// a JSON manifest (full configuration, its SHA-256, seeds, and checksums of
// all inputs and outputs).
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "radanon/radanon.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Failure carrying the exit code for main().
struct CliError : std::runtime_error {
  int code;
  CliError(const std::string& msg, int c = 1) : std::runtime_error(msg), code(c) {}
};

void Check(radanon_status s, const std::string& context) {
  if (s != RADANON_OK) {
    throw CliError(context + ": " + radanon_last_error(), 2 + static_cast<int>(s));
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using ImageH = Handle<radanon_image, radanon_image_free>;
using CorpusH = Handle<radanon_corpus, radanon_corpus_free>;
using ExperimentH = Handle<radanon_experiment, radanon_experiment_free>;
using ModelsH = Handle<radanon_models, radanon_models_free>;
using AttackH = Handle<radanon_attack_report, radanon_attack_report_free>;
using UtilityH = Handle<radanon_utility_report, radanon_utility_report_free>;
using PipelineH = Handle<radanon_pipeline, radanon_pipeline_free>;

std::string Sha256Hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw CliError("sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CliError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Checksums of a file or of every regular file below a directory.
json Checksums(const std::string& path) {
  json out = json::array();
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      out.push_back({{"path", f.string()}, {"sha256", Sha256Hex(ReadFile(f))}});
    }
  } else if (fs::exists(path)) {
    out.push_back({{"path", path}, {"sha256", Sha256Hex(ReadFile(path))}});
  }
  return out;
}

void RequireFile(const std::string& path, const std::string& what) {
  if (path.empty()) throw CliError("missing " + what + " (see --help)");
  if (!fs::exists(path)) {
    throw CliError(what + " '" + path + "' does not exist; create it first (see --help)");
  }
}

std::vector<fs::path> PngFiles(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct Manifest {
  std::string command;
  json seeds = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json extra = json::object();
};

void WriteManifest(const CLI::App& app, const CLI::App& sub, const Manifest& m,
                   const std::string& path) {
  const std::string config = sub.config_to_str(true, false);
  json j;
  j["tool"] = "radanon";
  j["version"] = radanon_version();
  j["command"] = m.command;
  j["config"] = config;
  j["config_sha256"] = Sha256Hex(config);
  j["seeds"] = m.seeds;
  json in = json::array(), out = json::array();
  for (const auto& p : m.inputs)
    for (auto& c : Checksums(p)) in.push_back(c);
  for (const auto& p : m.outputs)
    for (auto& c : Checksums(p)) out.push_back(c);
  j["inputs"] = in;
  j["outputs"] = out;
  if (!m.extra.empty()) j["results"] = m.extra;
  (void)app;
  std::ofstream(path) << j.dump(2) << '\n';
}

// Manifest next to a file output or inside a directory output.
std::string ManifestPath(const std::string& output) {
  if (fs::is_directory(output)) return (fs::path(output) / "manifest.json").string();
  return output + ".manifest.json";
}

// ---- Shared option groups ------------------------------------------------------

struct ExperimentOpts {
  radanon_experiment_config cfg = radanon_experiment_config_default();
  void Add(CLI::App* s) {
    s->add_option("--split-seed", cfg.split_seed, "Patient split seed")->capture_default_str();
    s->add_option("--pair-seed", cfg.pair_seed, "Pair sampling seed")->capture_default_str();
    s->add_option("--train-pairs", cfg.train_pairs, "Training pairs (even)")->capture_default_str();
    s->add_option("--val-pairs", cfg.val_pairs, "Validation pairs (even)")->capture_default_str();
    s->add_option("--test-pairs", cfg.test_pairs, "Test pairs (even)")->capture_default_str();
  }
  ExperimentH Prepare(const radanon_corpus* corpus) const {
    ExperimentH e;
    Check(radanon_experiment_prepare(corpus, &cfg, e.out()), "split/pairs");
    return e;
  }
};

struct DpOpts {
  radanon_dp_pix_config cfg = radanon_dp_pix_config_default();
  void Add(CLI::App* s) {
    s->add_option("--b", cfg.b, "Cell size in pixels")->capture_default_str();
    s->add_option("--epsilon", cfg.epsilon, "Privacy budget")->capture_default_str();
    s->add_option("--m", cfg.m, "Neighbourhood sensitivity")->capture_default_str();
    s->add_option("--dp-seed", cfg.seed, "Noise seed")->capture_default_str();
  }
};

CorpusH LoadCorpus(const std::string& path) {
  RequireFile(path, "corpus");
  CorpusH c;
  Check(radanon_corpus_load(path.c_str(), c.out()), "loading corpus");
  return c;
}

// Image side of a corpus, taken from its first record.
std::size_t CorpusSide(const radanon_corpus* c) {
  if (radanon_corpus_size(c) == 0) throw CliError("corpus is empty", 2);
  ImageH first;
  Check(radanon_corpus_image(c, 0, first.out()), "reading corpus");
  return radanon_image_height(first.get());
}

ModelsH LoadModels(const std::string& path) {
  RequireFile(path, "models");
  ModelsH m;
  Check(radanon_models_load(path.c_str(), m.out()), "loading models");
  return m;
}

json AttackJson(const radanon_attack_report* r) {
  json runs = json::array();
  for (size_t i = 0; i < radanon_attack_report_runs(r); ++i) {
    runs.push_back(radanon_attack_report_auc(r, i));
  }
  return {{"per_run_auc", runs},
          {"mean", radanon_attack_report_mean(r)},
          {"std", radanon_attack_report_std(r)},
          {"runs", radanon_attack_report_runs(r)}};
}

json UtilityJson(const radanon_utility_report* r) {
  json per = json::array();
  for (size_t c = 0; c < RADANON_NUM_CLASSES; ++c) {
    const double v = radanon_utility_report_class_auc(r, c);
    per.push_back(std::isnan(v) ? json(nullptr) : json(v));
  }
  return {{"per_class_auc", per},
          {"mean_auc", radanon_utility_report_mean(r)},
          {"ci_low", radanon_utility_report_ci_low(r)},
          {"ci_high", radanon_utility_report_ci_high(r)}};
}

void WriteJson(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw CliError("cannot write " + path);
  out << j.dump(2) << '\n';
}

json ReadJson(const std::string& path) {
  RequireFile(path, "report");
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw CliError("malformed report " + path + ": " + e.what());
  }
}

std::string Render(const std::vector<radanon_report_row>& rows, int format) {
  size_t len = 0;
  Check(radanon_render_report(rows.data(), rows.size(), format, nullptr, 0, &len),
        "rendering report");
  std::string text(len + 1, '\0');
  Check(radanon_render_report(rows.data(), rows.size(), format, text.data(),
                              text.size(), &len),
        "rendering report");
  text.resize(len);
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radanon: deformation-based radiograph anonymization toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  app.set_version_flag("--version", std::string(radanon_version()));

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic phantom corpus");
  radanon_synth_config sc = radanon_synth_config_default();
  std::string synth_out, synth_png;
  synth->add_option("--out", synth_out, "Corpus file to write")->required();
  synth->add_option("--patients", sc.n_patients, "Number of patients")->capture_default_str();
  synth->add_option("--images-per-patient", sc.images_per_patient, "Mean images per patient")
      ->capture_default_str();
  synth->add_option("--side", sc.side, "Image side in pixels")->capture_default_str();
  synth->add_option("--watermark", sc.watermark_strength, "Patient texture amplitude")
      ->capture_default_str();
  synth->add_option("--noise", sc.noise_std, "Per-image noise std")->capture_default_str();
  synth->add_option("--blob", sc.blob_strength, "Finding pattern amplitude")
      ->capture_default_str();
  double prevalence = sc.prevalence[0];
  synth->add_option("--prevalence", prevalence, "Prevalence of every finding")
      ->capture_default_str();
  synth->add_option("--seed", sc.seed, "Corpus seed")->capture_default_str();
  synth->add_option("--png-dir", synth_png, "Also export PNGs and index.csv here");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Read PNGs and a CSV index into a corpus");
  std::string ingest_dir, ingest_index, ingest_out;
  std::size_t ingest_side = 64;
  ingest->add_option("--dir", ingest_dir, "Directory holding the PNGs")->required();
  ingest->add_option("--index", ingest_index, "CSV index file")->required();
  ingest->add_option("--side", ingest_side, "Resize to side x side")->capture_default_str();
  ingest->add_option("--out", ingest_out, "Corpus file to write")->required();

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "Pre-train generator, classifier and verifier");
  std::string pre_corpus, pre_out;
  double pre_mu = 0.1;
  radanon_model_config mc = radanon_model_config_default();
  radanon_pretrain_config pg = radanon_pretrain_config_default(0);
  radanon_pretrain_config pcl = radanon_pretrain_config_default(1);
  radanon_pretrain_config pv = radanon_pretrain_config_default(2);
  ExperimentOpts pre_exp;
  pretrain->add_option("--corpus", pre_corpus, "Corpus file")->required();
  pretrain->add_option("--out", pre_out, "Model checkpoint to write")->required();
  pretrain->add_option("--mu", pre_mu, "Deformation degree for reconstruction")->capture_default_str();
  pretrain->add_option("--width", mc.generator_width, "Generator base width")->capture_default_str();
  pretrain->add_option("--levels", mc.generator_levels, "Generator levels")->capture_default_str();
  pretrain->add_option("--seed", mc.seed, "Initialisation seed")->capture_default_str();
  pretrain->add_option("--gen-epochs", pg.epochs, "Generator epochs")->capture_default_str();
  pretrain->add_option("--gen-lr", pg.lr, "Generator learning rate")->capture_default_str();
  pretrain->add_option("--clf-epochs", pcl.epochs, "Classifier epochs")->capture_default_str();
  pretrain->add_option("--clf-lr", pcl.lr, "Classifier learning rate")->capture_default_str();
  pretrain->add_option("--ver-epochs", pv.epochs, "Verifier epochs")->capture_default_str();
  pretrain->add_option("--ver-lr", pv.lr, "Verifier learning rate")->capture_default_str();
  pretrain->add_option("--batch", pg.batch, "Generator/classifier batch")->capture_default_str();
  pretrain->add_option("--patience", pcl.patience, "Early-stopping patience")->capture_default_str();
  pre_exp.Add(pretrain);

  // train
  auto* train = app.add_subcommand("train", "Adversarial training of the generator");
  std::string tr_corpus, tr_models, tr_out, tr_log;
  radanon_train_config tc = radanon_train_config_default();
  tc.mu = 0.1;
  ExperimentOpts tr_exp;
  train->add_option("--corpus", tr_corpus, "Corpus file")->required();
  train->add_option("--models", tr_models, "Pre-trained checkpoint")->required();
  train->add_option("--out", tr_out, "Trained checkpoint to write")->required();
  train->add_option("--mu", tc.mu, "Deformation degree")->capture_default_str();
  train->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
  train->add_option("--iterations", tc.iterations, "Batches per epoch")->capture_default_str();
  train->add_option("--batch", tc.batch, "Batch size")->capture_default_str();
  train->add_option("--lr", tc.lr, "Generator learning rate")->capture_default_str();
  train->add_option("--aux-lr", tc.aux_lr, "Classifier learning rate")->capture_default_str();
  train->add_option("--ver-lr", tc.ver_lr, "Verifier learning rate")->capture_default_str();
  train->add_option("--ver-weight", tc.ver_weight, "Weight of the verification term")
      ->capture_default_str();
  train->add_option("--seed", tc.seed, "Batch order seed")->capture_default_str();
  train->add_option("--log", tr_log, "Per-epoch CSV log");
  tr_exp.Add(train);

  // anonymize
  auto* anon = app.add_subcommand("anonymize", "Deform PNG images with a trained generator");
  std::string an_models, an_in, an_out, an_diff;
  double an_mu = -1.0;
  anon->add_option("--models", an_models, "Trained checkpoint")->required();
  anon->add_option("--in", an_in, "Input PNG file or directory")->required();
  anon->add_option("--out", an_out, "Output PNG file or directory")->required();
  anon->add_option("--mu", an_mu, "Deformation degree (default: the trained one)");
  anon->add_option("--diff-dir", an_diff, "Also write |x - F(x)| maps here");

  // dp-pix
  auto* dpp = app.add_subcommand("dp-pix", "Differentially private pixelization of PNGs");
  std::string dp_in, dp_out;
  DpOpts dp_opts;
  dpp->add_option("--in", dp_in, "Input PNG file or directory")->required();
  dpp->add_option("--out", dp_out, "Output PNG file or directory")->required();
  dpp->add_option("--b", dp_opts.cfg.b, "Cell size in pixels")->capture_default_str();
  dpp->add_option("--epsilon", dp_opts.cfg.epsilon, "Privacy budget")->capture_default_str();
  dpp->add_option("--m", dp_opts.cfg.m, "Neighbourhood sensitivity")->capture_default_str();
  dpp->add_option("--seed", dp_opts.cfg.seed, "Noise seed")->capture_default_str();

  // attack / utility
  const std::map<std::string, std::string> methods = {
      {"none", "none"}, {"deform", "deform"}, {"dp-pix", "dp-pix"}};
  auto* attack = app.add_subcommand("attack", "Linkage attack with re-trained verifiers");
  std::string at_corpus, at_models, at_out, at_method = "deform", at_pairing = "deformed-real";
  double at_mu = -1.0;
  radanon_attack_config ac = radanon_attack_config_default();
  ExperimentOpts at_exp;
  DpOpts at_dp;
  attack->add_option("--corpus", at_corpus, "Corpus file")->required();
  attack->add_option("--method", at_method, "none | deform | dp-pix")
      ->transform(CLI::IsMember(methods))->capture_default_str();
  attack->add_option("--models", at_models, "Trained checkpoint (method deform)");
  attack->add_option("--mu", at_mu, "Deformation degree (default: the trained one)");
  attack->add_option("--out", at_out, "Report JSON to write")->required();
  attack->add_option("--runs", ac.runs, "Independent runs")->capture_default_str();
  attack->add_option("--epochs", ac.epochs, "Maximum epochs per run")->capture_default_str();
  attack->add_option("--batch", ac.batch, "Batch size")->capture_default_str();
  attack->add_option("--lr", ac.lr, "Learning rate")->capture_default_str();
  attack->add_option("--patience", ac.patience, "Early-stopping patience")->capture_default_str();
  attack->add_option("--pairing", at_pairing, "deformed-real | deformed-deformed")
      ->check(CLI::IsMember({"deformed-real", "deformed-deformed"}))->capture_default_str();
  attack->add_option("--seed", ac.seed, "Base seed; run r uses seed + r")->capture_default_str();
  at_exp.Add(attack);
  at_dp.Add(attack);

  auto* utility = app.add_subcommand("utility", "Frozen-classifier AUC on processed test images");
  std::string ut_corpus, ut_models, ut_out, ut_method = "deform";
  double ut_mu = -1.0;
  radanon_bootstrap_config bc = radanon_bootstrap_config_default();
  ExperimentOpts ut_exp;
  DpOpts ut_dp;
  utility->add_option("--corpus", ut_corpus, "Corpus file")->required();
  utility->add_option("--models", ut_models, "Checkpoint holding the classifier")->required();
  utility->add_option("--method", ut_method, "none | deform | dp-pix")
      ->transform(CLI::IsMember(methods))->capture_default_str();
  utility->add_option("--mu", ut_mu, "Deformation degree (default: the trained one)");
  utility->add_option("--out", ut_out, "Report JSON to write")->required();
  utility->add_option("--n-boot", bc.n_boot, "Bootstrap resamples")->capture_default_str();
  utility->add_option("--level", bc.level, "Interval level")->capture_default_str();
  utility->add_option("--seed", bc.seed, "Bootstrap seed")->capture_default_str();
  ut_exp.Add(utility);
  ut_dp.Add(utility);

  // report
  auto* report = app.add_subcommand("report", "Render the privacy-utility table");
  std::vector<std::string> rep_rows;
  std::string rep_out, rep_csv;
  report->add_option("--row", rep_rows,
                     "NAME=ATTACK.json,UTILITY.json (ATTACK may be '-'); repeatable")
      ->required();
  report->add_option("--out", rep_out, "Text table to write (default: stdout)");
  report->add_option("--csv", rep_csv, "CSV table to write");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run the whole protocol end to end");
  std::string pl_corpus, pl_out;
  radanon_pipeline_config plc = radanon_pipeline_config_default();
  std::vector<double> pl_mus(plc.mus, plc.mus + plc.n_mus);
  radanon_synth_config pl_synth = radanon_synth_config_default();
  pipeline->add_option("--corpus", pl_corpus, "Corpus file (default: synthesize one)");
  pipeline->add_option("--synth-seed", pl_synth.seed, "Seed of the synthesized corpus")
      ->capture_default_str();
  pipeline->add_option("--out-dir", pl_out, "Directory for all artifacts")->required();
  pipeline->add_option("--mus", pl_mus, "Deformation degrees")->capture_default_str();
  pipeline->add_option("--runs", plc.attack.runs, "Attack runs per method")->capture_default_str();
  pipeline->add_option("--attack-epochs", plc.attack.epochs, "Maximum attack epochs")
      ->capture_default_str();
  pipeline->add_option("--train-epochs", plc.train.epochs, "Adversarial epochs")
      ->capture_default_str();
  pipeline->add_option("--iterations", plc.train.iterations, "Batches per adversarial epoch")
      ->capture_default_str();
  pipeline->add_option("--width", plc.models.generator_width, "Generator base width")
      ->capture_default_str();
  pipeline->add_option("--model-seed", plc.models.seed, "Initialisation seed")
      ->capture_default_str();
  pipeline->add_option("--n-boot", plc.bootstrap.n_boot, "Bootstrap resamples")
      ->capture_default_str();
  pipeline->add_option("--b", plc.dp_pix.b, "DP-Pix cell size")->capture_default_str();
  pipeline->add_option("--epsilon", plc.dp_pix.epsilon, "DP-Pix privacy budget")
      ->capture_default_str();
  pipeline->add_option("--m", plc.dp_pix.m, "DP-Pix sensitivity")->capture_default_str();
  pipeline->add_option("--split-seed", plc.experiment.split_seed, "Patient split seed")
      ->capture_default_str();
  pipeline->add_option("--pair-seed", plc.experiment.pair_seed, "Pair sampling seed")
      ->capture_default_str();
  pipeline->add_option("--train-pairs", plc.experiment.train_pairs, "Training pairs")
      ->capture_default_str();
  pipeline->add_option("--val-pairs", plc.experiment.val_pairs, "Validation pairs")
      ->capture_default_str();
  pipeline->add_option("--test-pairs", plc.experiment.test_pairs, "Test pairs")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    Manifest m;
    const CLI::App* used = app.get_subcommands().front();
    std::string manifest_path;

    if (synth->parsed()) {
      sc.prevalence[0] = prevalence;
      std::fill(std::begin(sc.prevalence), std::end(sc.prevalence), prevalence);
      CorpusH c;
      Check(radanon_corpus_synth(&sc, c.out()), "synthesizing corpus");
      Check(radanon_corpus_save(c.get(), synth_out.c_str()), "saving corpus");
      m.outputs.push_back(synth_out);
      if (!synth_png.empty()) {
        Check(radanon_corpus_export_png(c.get(), synth_png.c_str()), "exporting PNGs");
        m.outputs.push_back(synth_png);
      }
      m.seeds["corpus"] = sc.seed;
      std::cout << "wrote " << radanon_corpus_size(c.get()) << " images of "
                << radanon_corpus_num_patients(c.get()) << " patients to " << synth_out
                << '\n';
      manifest_path = ManifestPath(synth_out);
    } else if (ingest->parsed()) {
      RequireFile(ingest_dir, "PNG directory");
      RequireFile(ingest_index, "index");
      CorpusH c;
      size_t skipped = 0;
      Check(radanon_corpus_ingest(ingest_dir.c_str(), ingest_index.c_str(), ingest_side,
                                  &skipped, c.out()),
            "ingesting");
      Check(radanon_corpus_save(c.get(), ingest_out.c_str()), "saving corpus");
      m.inputs = {ingest_index, ingest_dir};
      m.outputs.push_back(ingest_out);
      m.extra["skipped"] = skipped;
      std::cout << "ingested " << radanon_corpus_size(c.get()) << " images (" << skipped
                << " unreadable, skipped)\n";
      manifest_path = ManifestPath(ingest_out);
    } else if (pretrain->parsed()) {
      CorpusH c = LoadCorpus(pre_corpus);
      ExperimentH e = pre_exp.Prepare(c.get());
      ModelsH models;
      mc.side = CorpusSide(c.get());
      Check(radanon_models_create(&mc, models.out()), "creating models");
      pcl.batch = pg.batch;
      pv.patience = pcl.patience;
      Check(radanon_models_pretrain(models.get(), c.get(), e.get(), pre_mu, &pg, &pcl, &pv),
            "pre-training");
      Check(radanon_models_save(models.get(), pre_out.c_str()), "saving models");
      m.inputs.push_back(pre_corpus);
      m.outputs.push_back(pre_out);
      m.seeds = {{"model", mc.seed},
                 {"split", pre_exp.cfg.split_seed},
                 {"pairs", pre_exp.cfg.pair_seed}};
      manifest_path = ManifestPath(pre_out);
    } else if (train->parsed()) {
      CorpusH c = LoadCorpus(tr_corpus);
      ModelsH models = LoadModels(tr_models);
      ExperimentH e = tr_exp.Prepare(c.get());
      if (!tr_log.empty()) tc.log_path = tr_log.c_str();
      Check(radanon_models_train(models.get(), c.get(), e.get(), &tc), "training");
      Check(radanon_models_save(models.get(), tr_out.c_str()), "saving models");
      m.inputs = {tr_corpus, tr_models};
      m.outputs.push_back(tr_out);
      if (!tr_log.empty()) m.outputs.push_back(tr_log);
      m.seeds = {{"train", tc.seed},
                 {"split", tr_exp.cfg.split_seed},
                 {"pairs", tr_exp.cfg.pair_seed}};
      manifest_path = ManifestPath(tr_out);
    } else if (anon->parsed()) {
      ModelsH models = LoadModels(an_models);
      RequireFile(an_in, "input");
      const double mu = an_mu >= 0.0 ? an_mu : radanon_models_mu(models.get());
      const bool dir = fs::is_directory(an_in);
      std::vector<fs::path> inputs = dir ? PngFiles(an_in) : std::vector<fs::path>{an_in};
      if (dir) fs::create_directories(an_out);
      if (!an_diff.empty()) fs::create_directories(an_diff);
      for (const auto& in : inputs) {
        ImageH x, fx;
        Check(radanon_image_load_png(in.string().c_str(), x.out()), "reading " + in.string());
        Check(radanon_models_anonymize(models.get(), x.get(), mu, fx.out()),
              "anonymizing " + in.string());
        const fs::path out = dir ? fs::path(an_out) / in.filename() : fs::path(an_out);
        Check(radanon_image_save_png(fx.get(), out.string().c_str()), "writing " + out.string());
        if (!an_diff.empty()) {
          ImageH d;
          Check(radanon_difference_map(x.get(), fx.get(), d.out()), "difference map");
          const fs::path dp = fs::path(an_diff) / in.filename();
          Check(radanon_image_save_png(d.get(), dp.string().c_str()), "writing " + dp.string());
        }
      }
      m.inputs = {an_models, an_in};
      m.outputs.push_back(an_out);
      if (!an_diff.empty()) m.outputs.push_back(an_diff);
      m.extra["mu"] = mu;
      manifest_path = ManifestPath(an_out);
    } else if (dpp->parsed()) {
      RequireFile(dp_in, "input");
      const bool dir = fs::is_directory(dp_in);
      std::vector<fs::path> inputs = dir ? PngFiles(dp_in) : std::vector<fs::path>{dp_in};
      if (dir) fs::create_directories(dp_out);
      // One noise stream per file: file k uses seed + k.
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        ImageH x, y;
        Check(radanon_image_load_png(inputs[k].string().c_str(), x.out()),
              "reading " + inputs[k].string());
        radanon_dp_pix_config cfg = dp_opts.cfg;
        cfg.seed += k;
        Check(radanon_dp_pixelize(x.get(), &cfg, y.out()), "dp-pix");
        const fs::path out = dir ? fs::path(dp_out) / inputs[k].filename() : fs::path(dp_out);
        Check(radanon_image_save_png(y.get(), out.string().c_str()), "writing " + out.string());
      }
      m.inputs.push_back(dp_in);
      m.outputs.push_back(dp_out);
      m.seeds["noise"] = dp_opts.cfg.seed;
      manifest_path = ManifestPath(dp_out);
    } else if (attack->parsed() || utility->parsed()) {
      const bool is_attack = attack->parsed();
      const std::string& corpus_path = is_attack ? at_corpus : ut_corpus;
      const std::string& models_path = is_attack ? at_models : ut_models;
      const std::string& method = is_attack ? at_method : ut_method;
      const double mu_opt = is_attack ? at_mu : ut_mu;
      const ExperimentOpts& exp = is_attack ? at_exp : ut_exp;
      const DpOpts& dp = is_attack ? at_dp : ut_dp;
      CorpusH real = LoadCorpus(corpus_path);
      ExperimentH e = exp.Prepare(real.get());
      ModelsH models;
      if (method == "deform" || !is_attack) {
        if (models_path.empty()) {
          throw CliError("--models is required for method '" + method + "'");
        }
        models = LoadModels(models_path);
      }
      CorpusH processed;
      double mu = 0.0;
      if (method == "deform") {
        mu = mu_opt >= 0.0 ? mu_opt : radanon_models_mu(models.get());
        Check(radanon_corpus_anonymize(models.get(), real.get(), mu, processed.out()),
              "anonymizing corpus");
      } else if (method == "dp-pix") {
        Check(radanon_corpus_dp_pixelize(real.get(), &dp.cfg, processed.out()), "dp-pix");
      }
      const radanon_corpus* images = processed.get() ? processed.get() : real.get();
      json j{{"method", method}};
      if (method == "deform") j["mu"] = mu;
      if (method == "dp-pix") {
        j["dp_pix"] = {{"b", dp.cfg.b}, {"epsilon", dp.cfg.epsilon}, {"m", dp.cfg.m}};
      }
      m.inputs.push_back(corpus_path);
      if (!models_path.empty()) m.inputs.push_back(models_path);
      m.seeds = {{"split", exp.cfg.split_seed}, {"pairs", exp.cfg.pair_seed}};
      if (is_attack) {
        ac.pairing = at_pairing == "deformed-deformed" ? RADANON_PAIRING_DEFORMED_DEFORMED
                                                       : RADANON_PAIRING_DEFORMED_REAL;
        AttackH r;
        Check(radanon_attack_run(real.get(), images, e.get(), &ac, r.out()), "attack");
        j["attack"] = AttackJson(r.get());
        m.seeds["attack"] = ac.seed;
        std::printf("attack AUC %.4f +- %.4f over %zu runs\n", radanon_attack_report_mean(r.get()),
                    radanon_attack_report_std(r.get()), radanon_attack_report_runs(r.get()));
        WriteJson(at_out, j);
        m.outputs.push_back(at_out);
        manifest_path = ManifestPath(at_out);
      } else {
        UtilityH r;
        Check(radanon_utility_run(models.get(), images, e.get(), &bc, r.out()), "utility");
        j["utility"] = UtilityJson(r.get());
        m.seeds["bootstrap"] = bc.seed;
        std::printf("classification AUC %.4f [%.4f, %.4f]\n", radanon_utility_report_mean(r.get()),
                    radanon_utility_report_ci_low(r.get()), radanon_utility_report_ci_high(r.get()));
        WriteJson(ut_out, j);
        m.outputs.push_back(ut_out);
        manifest_path = ManifestPath(ut_out);
      }
      m.extra = j;
    } else if (report->parsed()) {
      std::vector<std::string> names;
      std::vector<AttackH> attacks;
      std::vector<UtilityH> utils;
      for (const std::string& spec : rep_rows) {
        const auto eq = spec.find('=');
        const auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || comma == std::string::npos) {
          throw CliError("--row expects NAME=ATTACK.json,UTILITY.json, got '" + spec + "'");
        }
        names.push_back(spec.substr(0, eq));
        const std::string a = spec.substr(eq + 1, comma - eq - 1);
        const std::string u = spec.substr(comma + 1);
        AttackH ah;
        if (a != "-") {
          const json j = ReadJson(a);
          if (!j.contains("attack")) throw CliError(a + " is not an attack report");
          const auto aucs = j["attack"]["per_run_auc"].get<std::vector<double>>();
          Check(radanon_attack_report_from_values(aucs.data(), aucs.size(), ah.out()), a);
          m.inputs.push_back(a);
        }
        const json ju = ReadJson(u);
        if (!ju.contains("utility")) throw CliError(u + " is not a utility report");
        std::vector<double> per;
        for (const auto& v : ju["utility"]["per_class_auc"]) {
          per.push_back(v.is_null() ? std::nan("") : v.get<double>());
        }
        if (per.size() != RADANON_NUM_CLASSES) throw CliError(u + ": expected 14 class AUCs");
        UtilityH uh;
        Check(radanon_utility_report_from_values(per.data(), ju["utility"]["mean_auc"],
                                                 ju["utility"]["ci_low"],
                                                 ju["utility"]["ci_high"], uh.out()),
              u);
        m.inputs.push_back(u);
        attacks.push_back(std::move(ah));
        utils.push_back(std::move(uh));
      }
      std::vector<radanon_report_row> rows;
      for (std::size_t i = 0; i < names.size(); ++i) {
        rows.push_back({names[i].c_str(), attacks[i].get(), utils[i].get()});
      }
      const std::string table = Render(rows, 0);
      if (rep_out.empty()) {
        std::cout << table;
      } else {
        std::ofstream(rep_out) << table;
        m.outputs.push_back(rep_out);
        manifest_path = ManifestPath(rep_out);
      }
      if (!rep_csv.empty()) {
        std::ofstream(rep_csv) << Render(rows, 1);
        m.outputs.push_back(rep_csv);
        if (manifest_path.empty()) manifest_path = ManifestPath(rep_csv);
      }
    } else if (pipeline->parsed()) {
      CorpusH c;
      fs::create_directories(pl_out);
      if (pl_corpus.empty()) {
        Check(radanon_corpus_synth(&pl_synth, c.out()), "synthesizing corpus");
        const std::string path = (fs::path(pl_out) / "corpus.danc").string();
        Check(radanon_corpus_save(c.get(), path.c_str()), "saving corpus");
        m.seeds["corpus"] = pl_synth.seed;
      } else {
        c = LoadCorpus(pl_corpus);
        m.inputs.push_back(pl_corpus);
      }
      plc.models.side = CorpusSide(c.get());
      plc.mus = pl_mus.data();
      plc.n_mus = pl_mus.size();
      plc.out_dir = pl_out.c_str();
      plc.progress = [](const char* msg, void*) { std::cerr << "[pipeline] " << msg << '\n'; };
      PipelineH p;
      Check(radanon_pipeline_run(c.get(), &plc, p.out()), "pipeline");
      json rows = json::array();
      std::vector<radanon_report_row> table_rows;
      for (size_t i = 0; i < radanon_pipeline_rows(p.get()); ++i) {
        rows.push_back({{"method", radanon_pipeline_method(p.get(), i)},
                        {"attack", AttackJson(radanon_pipeline_attack(p.get(), i))},
                        {"utility", UtilityJson(radanon_pipeline_utility(p.get(), i))}});
        table_rows.push_back({radanon_pipeline_method(p.get(), i),
                              radanon_pipeline_attack(p.get(), i),
                              radanon_pipeline_utility(p.get(), i)});
      }
      WriteJson((fs::path(pl_out) / "results.json").string(), rows);
      std::cout << Render(table_rows, 0);
      m.seeds["model"] = plc.models.seed;
      m.seeds["split"] = plc.experiment.split_seed;
      m.seeds["pairs"] = plc.experiment.pair_seed;
      m.seeds["attack"] = plc.attack.seed;
      m.outputs.push_back(pl_out);
      m.extra = rows;
      manifest_path = ManifestPath(pl_out);
    }

    m.command = used->get_name();
    if (!manifest_path.empty()) WriteManifest(app, *used, m, manifest_path);
    return 0;
  } catch (const CliError& e) {
    std::cerr << "radanon: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "radanon: " << e.what() << '\n';
    return 1;
  }
}
