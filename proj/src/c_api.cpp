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
#include "radanon/radanon.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <set>
#include <string>

#include "radanon/data.hpp"
#include "radanon/dp_pix.hpp"
#include "radanon/error.hpp"
#include "radanon/evaluation.hpp"
#include "radanon/pipeline.hpp"
#include "radanon/training.hpp"
#include "radanon/warp.hpp"

struct radanon_image {
  radanon::Image image;
};
struct radanon_corpus {
  radanon::Corpus corpus;
};
struct radanon_experiment {
  radanon::ExperimentData data;
  std::size_t corpus_size = 0;
};
struct radanon_models {
  radanon::ModelBundle bundle;
};
struct radanon_attack_report {
  radanon::AttackReport report;
};
struct radanon_utility_report {
  radanon::UtilityReport report;
};
struct radanon_pipeline {
  std::vector<std::string> methods;
  std::vector<radanon_attack_report> attacks;
  std::vector<radanon_utility_report> utilities;
};

namespace {

thread_local std::string g_last_error;

radanon_status Fail(radanon_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
radanon_status Guard(Fn&& fn) {
  try {
    fn();
    return RADANON_OK;
  } catch (const radanon::InvalidArgument& e) {
    return Fail(RADANON_INVALID_ARGUMENT, e.what());
  } catch (const radanon::IoError& e) {
    return Fail(RADANON_IO_ERROR, e.what());
  } catch (const radanon::StateError& e) {
    return Fail(RADANON_STATE_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(RADANON_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return Fail(RADANON_INTERNAL_ERROR, e.what());
  } catch (...) {
    return Fail(RADANON_INTERNAL_ERROR, "unknown error");
  }
}

template <typename T>
const T& Need(const T* p, const char* what) {
  if (!p) throw radanon::InvalidArgument(std::string(what) + " must not be NULL");
  return *p;
}

template <typename T>
T& Need(T* p, const char* what) {
  if (!p) throw radanon::InvalidArgument(std::string(what) + " must not be NULL");
  return *p;
}

template <typename T>
void Publish(T** out, std::unique_ptr<T> value) {
  *out = value.release();
}

void CheckOut(const void* out) {
  if (!out) throw radanon::InvalidArgument("output pointer must not be NULL");
}

radanon::DpPixConfig ToCpp(const radanon_dp_pix_config& c) {
  return {c.b, c.epsilon, c.m, c.seed};
}

radanon::PretrainConfig ToCpp(const radanon_pretrain_config& c) {
  radanon::PretrainConfig p;
  p.epochs = c.epochs;
  p.batch = c.batch;
  p.lr = c.lr;
  p.patience = c.patience;
  p.seed = c.seed;
  return p;
}

radanon_pretrain_config ToC(const radanon::PretrainConfig& p) {
  return {p.epochs, p.batch, p.lr, p.patience, p.seed};
}

radanon::TrainConfig ToCpp(const radanon_train_config& c) {
  radanon::TrainConfig t;
  t.epochs = c.epochs;
  t.iterations = c.iterations;
  t.batch = c.batch;
  t.lr = c.lr;
  t.aux_lr = c.aux_lr;
  t.ver_lr = c.ver_lr;
  t.mu = c.mu;
  t.ver_weight = c.ver_weight;
  t.seed = c.seed;
  if (c.log_path) t.log_path = c.log_path;
  return t;
}

radanon::AttackConfig ToCpp(const radanon_attack_config& c, std::size_t side) {
  radanon::AttackConfig a;
  a.runs = c.runs;
  a.verifier.side = side;
  a.train.epochs = c.epochs;
  a.train.batch = c.batch;
  a.train.lr = c.lr;
  a.train.patience = c.patience;
  switch (c.pairing) {
    case RADANON_PAIRING_DEFORMED_REAL:
      a.pairing = radanon::RetrainPairing::kDeformedReal;
      break;
    case RADANON_PAIRING_DEFORMED_DEFORMED:
      a.pairing = radanon::RetrainPairing::kDeformedDeformed;
      break;
    default:
      throw radanon::InvalidArgument("attack: unknown pairing mode");
  }
  a.seed = c.seed;
  return a;
}

radanon::BootstrapConfig ToCpp(const radanon_bootstrap_config& c) {
  radanon::BootstrapConfig b;
  b.n_boot = c.n_boot;
  b.level = c.level;
  b.seed = c.seed;
  return b;
}

void CheckPairing(const radanon_corpus& corpus, const radanon_experiment& e) {
  if (corpus.corpus.size() != e.corpus_size) {
    throw radanon::InvalidArgument(
        "experiment was prepared for a corpus of " + std::to_string(e.corpus_size) +
        " records, got " + std::to_string(corpus.corpus.size()));
  }
}

std::size_t SideOf(const radanon::Corpus& corpus) {
  if (corpus.empty()) throw radanon::InvalidArgument("corpus is empty");
  const std::size_t s = corpus.front().image.height;
  for (const auto& r : corpus) {
    if (r.image.height != s || r.image.width != s) {
      throw radanon::InvalidArgument("corpus images must all be square and equal-sized");
    }
  }
  return s;
}

}  // namespace

extern "C" {

const char* radanon_last_error(void) { return g_last_error.c_str(); }

const char* radanon_status_string(radanon_status status) {
  switch (status) {
    case RADANON_OK: return "ok";
    case RADANON_INVALID_ARGUMENT: return "invalid argument";
    case RADANON_IO_ERROR: return "i/o error";
    case RADANON_STATE_ERROR: return "state error";
    case RADANON_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* radanon_version(void) { return "0.1.0"; }

// ---- Images ------------------------------------------------------------------

radanon_status radanon_image_create(size_t height, size_t width,
                                    const double* pixels, radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    if (height == 0 || width == 0) {
      throw radanon::InvalidArgument("image: extent must be positive");
    }
    auto img = std::make_unique<radanon_image>();
    img->image = radanon::Image(height, width);
    if (pixels) std::copy(pixels, pixels + height * width, img->image.pixels.begin());
    Publish(out, std::move(img));
  });
}

radanon_status radanon_image_load_png(const char* path, radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    auto img = std::make_unique<radanon_image>();
    img->image = radanon::LoadPng(&Need(path, "path"));
    Publish(out, std::move(img));
  });
}

radanon_status radanon_image_save_png(const radanon_image* image, const char* path) {
  return Guard([&] {
    radanon::SavePng(Need(image, "image").image, &Need(path, "path"));
  });
}

radanon_status radanon_image_resize(const radanon_image* image, size_t side,
                                    radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    auto img = std::make_unique<radanon_image>();
    img->image = radanon::ResizeArea(Need(image, "image").image, side);
    Publish(out, std::move(img));
  });
}

size_t radanon_image_height(const radanon_image* image) {
  return image ? image->image.height : 0;
}
size_t radanon_image_width(const radanon_image* image) {
  return image ? image->image.width : 0;
}
const double* radanon_image_pixels(const radanon_image* image) {
  return image ? image->image.pixels.data() : nullptr;
}
void radanon_image_free(radanon_image* image) { delete image; }

radanon_status radanon_difference_map(const radanon_image* x,
                                      const radanon_image* fx,
                                      radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    auto img = std::make_unique<radanon_image>();
    img->image = radanon::DifferenceMap(Need(x, "x").image, Need(fx, "fx").image);
    Publish(out, std::move(img));
  });
}

// ---- DP-Pix ---------------------------------------------------------------------

radanon_dp_pix_config radanon_dp_pix_config_default(void) {
  const radanon::DpPixConfig c;
  return {c.b, c.epsilon, c.m, c.seed};
}

radanon_status radanon_pixelize(const radanon_image* image, size_t b,
                                radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    auto img = std::make_unique<radanon_image>();
    img->image = radanon::Pixelize(Need(image, "image").image, b);
    Publish(out, std::move(img));
  });
}

radanon_status radanon_dp_pixelize(const radanon_image* image,
                                   const radanon_dp_pix_config* config,
                                   radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    auto img = std::make_unique<radanon_image>();
    img->image =
        radanon::DpPixelize(Need(image, "image").image, ToCpp(Need(config, "config")));
    Publish(out, std::move(img));
  });
}

// ---- Corpora --------------------------------------------------------------------

radanon_synth_config radanon_synth_config_default(void) {
  const radanon::SynthConfig s;
  radanon_synth_config c{};
  c.n_patients = s.n_patients;
  c.images_per_patient = s.images_per_patient;
  c.side = s.side;
  c.watermark_strength = s.watermark_strength;
  c.noise_std = s.noise_std;
  c.blob_strength = s.blob_strength;
  std::copy(s.prevalence.begin(), s.prevalence.end(), c.prevalence);
  c.seed = s.seed;
  return c;
}

radanon_status radanon_corpus_synth(const radanon_synth_config* config,
                                    radanon_corpus** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& c = Need(config, "config");
    radanon::SynthConfig s;
    s.n_patients = c.n_patients;
    s.images_per_patient = c.images_per_patient;
    s.side = c.side;
    s.watermark_strength = c.watermark_strength;
    s.noise_std = c.noise_std;
    s.blob_strength = c.blob_strength;
    std::copy(c.prevalence, c.prevalence + RADANON_NUM_CLASSES, s.prevalence.begin());
    s.seed = c.seed;
    auto corpus = std::make_unique<radanon_corpus>();
    corpus->corpus = radanon::SynthCorpus(s);
    Publish(out, std::move(corpus));
  });
}

radanon_status radanon_corpus_ingest(const char* dir, const char* index_csv,
                                     size_t side, size_t* skipped,
                                     radanon_corpus** out) {
  return Guard([&] {
    CheckOut(out);
    radanon::IngestResult r =
        radanon::IngestPng(&Need(dir, "dir"), &Need(index_csv, "index_csv"), side);
    if (skipped) *skipped = r.skipped;
    auto corpus = std::make_unique<radanon_corpus>();
    corpus->corpus = std::move(r.records);
    Publish(out, std::move(corpus));
  });
}

radanon_status radanon_corpus_save(const radanon_corpus* corpus, const char* path) {
  return Guard([&] {
    radanon::SaveCorpus(Need(corpus, "corpus").corpus, &Need(path, "path"));
  });
}

radanon_status radanon_corpus_load(const char* path, radanon_corpus** out) {
  return Guard([&] {
    CheckOut(out);
    auto corpus = std::make_unique<radanon_corpus>();
    corpus->corpus = radanon::LoadCorpus(&Need(path, "path"));
    Publish(out, std::move(corpus));
  });
}

radanon_status radanon_corpus_export_png(const radanon_corpus* corpus,
                                         const char* dir) {
  return Guard([&] {
    const auto& c = Need(corpus, "corpus").corpus;
    const std::filesystem::path root(&Need(dir, "dir"));
    std::filesystem::create_directories(root);
    std::ofstream index(root / "index.csv", std::ios::trunc);
    if (!index) throw radanon::IoError("export: cannot write index in " + root.string());
    index << "Image Index,Finding Labels,Follow-up #,Patient ID\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%08zu.png", i);
      radanon::SavePng(c[i].image, (root / name).string());
      std::string labels;
      for (std::size_t k = 0; k < radanon::kNumClasses; ++k) {
        if (!c[i].labels[k]) continue;
        if (!labels.empty()) labels += '|';
        labels += radanon::ClassNames()[k];
      }
      if (labels.empty()) labels = "No Finding";
      index << name << ',' << labels << ',' << c[i].follow_up << ',' << c[i].patient_id
            << '\n';
    }
    if (!index) throw radanon::IoError("export: write failed in " + root.string());
  });
}

size_t radanon_corpus_size(const radanon_corpus* corpus) {
  return corpus ? corpus->corpus.size() : 0;
}

size_t radanon_corpus_num_patients(const radanon_corpus* corpus) {
  if (!corpus) return 0;
  std::set<std::string> ids;
  for (const auto& r : corpus->corpus) ids.insert(r.patient_id);
  return ids.size();
}

radanon_status radanon_corpus_image(const radanon_corpus* corpus, size_t index,
                                    radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& c = Need(corpus, "corpus").corpus;
    if (index >= c.size()) throw radanon::InvalidArgument("corpus: index out of range");
    auto img = std::make_unique<radanon_image>();
    img->image = c[index].image;
    Publish(out, std::move(img));
  });
}

const char* radanon_corpus_patient(const radanon_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->corpus.size()) return nullptr;
  return corpus->corpus[index].patient_id.c_str();
}

radanon_status radanon_corpus_labels(const radanon_corpus* corpus, size_t index,
                                     uint8_t* labels) {
  return Guard([&] {
    const auto& c = Need(corpus, "corpus").corpus;
    Need(labels, "labels");
    if (index >= c.size()) throw radanon::InvalidArgument("corpus: index out of range");
    std::copy(c[index].labels.begin(), c[index].labels.end(), labels);
  });
}

radanon_status radanon_corpus_dp_pixelize(const radanon_corpus* corpus,
                                          const radanon_dp_pix_config* config,
                                          radanon_corpus** out) {
  return Guard([&] {
    CheckOut(out);
    auto result = std::make_unique<radanon_corpus>();
    result->corpus = Need(corpus, "corpus").corpus;
    const auto images = radanon::CorpusImages(result->corpus);
    auto dp = radanon::DpPixelizeAll(images, ToCpp(Need(config, "config")));
    for (std::size_t i = 0; i < dp.size(); ++i) result->corpus[i].image = std::move(dp[i]);
    Publish(out, std::move(result));
  });
}

void radanon_corpus_free(radanon_corpus* corpus) { delete corpus; }

// ---- Experiment -----------------------------------------------------------------

radanon_experiment_config radanon_experiment_config_default(void) {
  const radanon::PipelineConfig p;
  return {p.split_seed, p.pair_seed, p.pairs.train, p.pairs.val, p.pairs.test};
}

radanon_status radanon_experiment_prepare(const radanon_corpus* corpus,
                                          const radanon_experiment_config* config,
                                          radanon_experiment** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& c = Need(config, "config");
    auto e = std::make_unique<radanon_experiment>();
    e->data = radanon::PrepareExperiment(Need(corpus, "corpus").corpus, c.split_seed,
                                         c.pair_seed,
                                         {c.train_pairs, c.val_pairs, c.test_pairs});
    e->corpus_size = corpus->corpus.size();
    Publish(out, std::move(e));
  });
}

size_t radanon_experiment_split_size(const radanon_experiment* e, int which) {
  if (!e) return 0;
  switch (which) {
    case 0: return e->data.split.train.size();
    case 1: return e->data.split.val.size();
    case 2: return e->data.split.test.size();
    default: return 0;
  }
}

void radanon_experiment_free(radanon_experiment* e) { delete e; }

// ---- Models ---------------------------------------------------------------------

radanon_model_config radanon_model_config_default(void) {
  const radanon::PipelineConfig p;
  return {p.generator.side, p.generator.base_width, p.generator.levels, p.model_seed};
}

radanon_pretrain_config radanon_pretrain_config_default(int which) {
  const radanon::PipelineConfig p;
  switch (which) {
    case 1: return ToC(p.clf_pretrain);
    case 2: return ToC(p.ver_pretrain);
    default: return ToC(p.gen_pretrain);
  }
}

radanon_train_config radanon_train_config_default(void) {
  const radanon::TrainConfig t = radanon::PipelineConfig::Adversarial();
  return {t.epochs, t.iterations, t.batch, t.lr,   t.aux_lr,
          t.ver_lr, t.mu,         t.ver_weight,  t.seed, nullptr};
}

radanon_status radanon_models_create(const radanon_model_config* config,
                                     radanon_models** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& c = Need(config, "config");
    radanon::ClassifierConfig cc;
    cc.side = c.side;
    radanon::VerifierConfig vc;
    vc.side = c.side;
    auto m = std::make_unique<radanon_models>(radanon_models{radanon::MakeBundle(
        {c.side, c.generator_width, c.generator_levels}, cc, vc, c.seed)});
    Publish(out, std::move(m));
  });
}

radanon_status radanon_models_load(const char* path, radanon_models** out) {
  return Guard([&] {
    CheckOut(out);
    auto m = std::make_unique<radanon_models>(
        radanon_models{radanon::LoadBundle(&Need(path, "path"))});
    Publish(out, std::move(m));
  });
}

radanon_status radanon_models_save(const radanon_models* models, const char* path) {
  return Guard([&] {
    radanon::SaveBundle(&Need(path, "path"), Need(models, "models").bundle);
  });
}

double radanon_models_mu(const radanon_models* models) {
  return models ? models->bundle.mu : std::numeric_limits<double>::quiet_NaN();
}

size_t radanon_models_side(const radanon_models* models) {
  return models ? models->bundle.generator.config().side : 0;
}

radanon_status radanon_models_pretrain(radanon_models* models,
                                       const radanon_corpus* corpus,
                                       const radanon_experiment* experiment,
                                       double mu,
                                       const radanon_pretrain_config* generator,
                                       const radanon_pretrain_config* classifier,
                                       const radanon_pretrain_config* verifier) {
  return Guard([&] {
    auto& b = Need(models, "models").bundle;
    const auto& c = Need(corpus, "corpus");
    const auto& e = Need(experiment, "experiment");
    CheckPairing(c, e);
    const auto images = radanon::CorpusImages(c.corpus);
    if (classifier) {
      radanon::PretrainClassifier(b.classifier, c.corpus, e.data.split.train,
                                  e.data.split.val, ToCpp(*classifier));
    }
    if (verifier) {
      radanon::TrainVerifier(b.verifier, images, images, e.data.train_pairs,
                             e.data.val_pairs, ToCpp(*verifier));
    }
    if (generator) {
      std::vector<radanon::Image> train, val;
      for (std::size_t i : e.data.split.train) train.push_back(images[i]);
      for (std::size_t i : e.data.split.val) val.push_back(images[i]);
      radanon::PretrainGenerator(b.generator, train, val, mu, ToCpp(*generator));
      b.mu = mu;
    }
  });
}

radanon_status radanon_models_train(radanon_models* models,
                                    const radanon_corpus* corpus,
                                    const radanon_experiment* experiment,
                                    const radanon_train_config* config) {
  return Guard([&] {
    auto& b = Need(models, "models").bundle;
    const auto& c = Need(corpus, "corpus");
    const auto& e = Need(experiment, "experiment");
    CheckPairing(c, e);
    const radanon::TrainConfig tc = ToCpp(Need(config, "config"));
    radanon::AuxClassifier aux(b.classifier.config(), 0);
    aux.params().CopyValuesFrom(b.classifier.params());
    radanon::Verifier ver(b.verifier.config(), 0);
    ver.params().CopyValuesFrom(b.verifier.params());
    radanon::TrainAdversarial(b.generator, aux, ver, c.corpus, e.data.train_pairs,
                              e.data.val_pairs, tc);
    b.mu = tc.mu;
  });
}

radanon_status radanon_models_anonymize(const radanon_models* models,
                                        const radanon_image* image, double mu,
                                        radanon_image** out) {
  return Guard([&] {
    CheckOut(out);
    if (!(mu >= 0.0)) throw radanon::InvalidArgument("anonymize: mu must be >= 0");
    auto img = std::make_unique<radanon_image>();
    img->image = radanon::Anonymize(Need(models, "models").bundle.generator,
                                    Need(image, "image").image, mu);
    Publish(out, std::move(img));
  });
}

radanon_status radanon_corpus_anonymize(const radanon_models* models,
                                        const radanon_corpus* corpus, double mu,
                                        radanon_corpus** out) {
  return Guard([&] {
    CheckOut(out);
    if (!(mu >= 0.0)) throw radanon::InvalidArgument("anonymize: mu must be >= 0");
    auto result = std::make_unique<radanon_corpus>();
    result->corpus = Need(corpus, "corpus").corpus;
    auto anon = radanon::AnonymizeAll(Need(models, "models").bundle.generator,
                                      radanon::CorpusImages(result->corpus), mu);
    for (std::size_t i = 0; i < anon.size(); ++i) result->corpus[i].image = std::move(anon[i]);
    Publish(out, std::move(result));
  });
}

void radanon_models_free(radanon_models* models) { delete models; }

// ---- Evaluation -----------------------------------------------------------------

radanon_attack_config radanon_attack_config_default(void) {
  const radanon::AttackConfig a = radanon::PipelineConfig::Attack();
  return {a.runs,           a.train.epochs,
          a.train.batch,    a.train.lr,
          a.train.patience, RADANON_PAIRING_DEFORMED_REAL,
          a.seed};
}

radanon_bootstrap_config radanon_bootstrap_config_default(void) {
  const radanon::BootstrapConfig b;
  return {b.n_boot, b.level, b.seed};
}

radanon_status radanon_roc_auc(const double* scores, const int* labels, size_t n,
                               double* auc) {
  return Guard([&] {
    CheckOut(auc);
    if (n > 0) {
      Need(scores, "scores");
      Need(labels, "labels");
    }
    *auc = radanon::RocAuc({scores, n}, {labels, n});
  });
}

radanon_status radanon_attack_run(const radanon_corpus* real,
                                  const radanon_corpus* anonymized,
                                  const radanon_experiment* experiment,
                                  const radanon_attack_config* config,
                                  radanon_attack_report** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& r = Need(real, "real");
    const auto& a = Need(anonymized, "anonymized");
    const auto& e = Need(experiment, "experiment");
    CheckPairing(r, e);
    CheckPairing(a, e);
    const auto ac = ToCpp(Need(config, "config"), SideOf(r.corpus));
    auto report = std::make_unique<radanon_attack_report>();
    report->report = radanon::LinkageAttack(radanon::CorpusImages(a.corpus),
                                            radanon::CorpusImages(r.corpus), e.data, ac);
    Publish(out, std::move(report));
  });
}

radanon_status radanon_attack_report_from_values(const double* aucs, size_t runs,
                                                 radanon_attack_report** out) {
  return Guard([&] {
    CheckOut(out);
    if (runs > 0) Need(aucs, "aucs");
    auto report = std::make_unique<radanon_attack_report>();
    report->report = radanon::SummarizeRuns(std::vector<double>(aucs, aucs + runs));
    Publish(out, std::move(report));
  });
}

size_t radanon_attack_report_runs(const radanon_attack_report* r) {
  return r ? r->report.runs : 0;
}
double radanon_attack_report_auc(const radanon_attack_report* r, size_t run) {
  if (!r || run >= r->report.per_run_auc.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return r->report.per_run_auc[run];
}
double radanon_attack_report_mean(const radanon_attack_report* r) {
  return r ? r->report.mean : std::numeric_limits<double>::quiet_NaN();
}
double radanon_attack_report_std(const radanon_attack_report* r) {
  return r ? r->report.std : std::numeric_limits<double>::quiet_NaN();
}
void radanon_attack_report_free(radanon_attack_report* r) { delete r; }

radanon_status radanon_utility_run(const radanon_models* models,
                                   const radanon_corpus* images,
                                   const radanon_experiment* experiment,
                                   const radanon_bootstrap_config* config,
                                   radanon_utility_report** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& m = Need(models, "models");
    const auto& c = Need(images, "images");
    const auto& e = Need(experiment, "experiment");
    CheckPairing(c, e);
    std::vector<radanon::Image> test;
    std::vector<radanon::LabelVector> labels;
    for (std::size_t i : e.data.split.test) {
      test.push_back(c.corpus[i].image);
      labels.push_back(c.corpus[i].labels);
    }
    auto report = std::make_unique<radanon_utility_report>();
    report->report = radanon::UtilityEval(m.bundle.classifier, test, labels,
                                          ToCpp(Need(config, "config")));
    Publish(out, std::move(report));
  });
}

radanon_status radanon_utility_report_from_values(const double* per_class,
                                                  double mean, double ci_low,
                                                  double ci_high,
                                                  radanon_utility_report** out) {
  return Guard([&] {
    CheckOut(out);
    Need(per_class, "per_class");
    if (!(ci_low <= mean && mean <= ci_high)) {
      throw radanon::InvalidArgument("utility: interval must contain the mean");
    }
    auto report = std::make_unique<radanon_utility_report>();
    auto& u = report->report;
    u.per_class_auc.assign(per_class, per_class + RADANON_NUM_CLASSES);
    for (std::size_t c = 0; c < RADANON_NUM_CLASSES; ++c) {
      if (std::isnan(per_class[c])) u.excluded.push_back(c);
    }
    u.mean_auc = mean;
    u.ci_low = ci_low;
    u.ci_high = ci_high;
    Publish(out, std::move(report));
  });
}

double radanon_utility_report_class_auc(const radanon_utility_report* r, size_t cls) {
  if (!r || cls >= r->report.per_class_auc.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return r->report.per_class_auc[cls];
}
double radanon_utility_report_mean(const radanon_utility_report* r) {
  return r ? r->report.mean_auc : std::numeric_limits<double>::quiet_NaN();
}
double radanon_utility_report_ci_low(const radanon_utility_report* r) {
  return r ? r->report.ci_low : std::numeric_limits<double>::quiet_NaN();
}
double radanon_utility_report_ci_high(const radanon_utility_report* r) {
  return r ? r->report.ci_high : std::numeric_limits<double>::quiet_NaN();
}
void radanon_utility_report_free(radanon_utility_report* r) { delete r; }

radanon_status radanon_render_report(const radanon_report_row* rows, size_t n_rows,
                                     int format, char* buffer, size_t capacity,
                                     size_t* length) {
  return Guard([&] {
    if (n_rows > 0) Need(rows, "rows");
    std::vector<radanon::ReportRow> cpp;
    for (std::size_t i = 0; i < n_rows; ++i) {
      radanon::ReportRow r;
      r.method = &Need(rows[i].method, "method");
      if (rows[i].attack) r.attack = rows[i].attack->report;
      r.utility = Need(rows[i].utility, "utility").report;
      cpp.push_back(std::move(r));
    }
    std::string text;
    if (format == 0) {
      text = radanon::RenderTable(cpp);
    } else if (format == 1) {
      text = radanon::RenderCsv(cpp);
    } else {
      throw radanon::InvalidArgument("report: format must be 0 (text) or 1 (csv)");
    }
    if (length) *length = text.size();
    if (buffer && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
  });
}

// ---- Full protocol ----------------------------------------------------------------

radanon_pipeline_config radanon_pipeline_config_default(void) {
  static const radanon::PipelineConfig p;
  radanon_pipeline_config c{};
  c.experiment = radanon_experiment_config_default();
  c.models = radanon_model_config_default();
  c.generator_pretrain = ToC(p.gen_pretrain);
  c.classifier_pretrain = ToC(p.clf_pretrain);
  c.verifier_pretrain = ToC(p.ver_pretrain);
  c.train = radanon_train_config_default();
  c.mus = p.mus.data();
  c.n_mus = p.mus.size();
  c.attack = radanon_attack_config_default();
  c.dp_pix = radanon_dp_pix_config_default();
  c.bootstrap = radanon_bootstrap_config_default();
  return c;
}

radanon_status radanon_pipeline_run(const radanon_corpus* corpus,
                                    const radanon_pipeline_config* config,
                                    radanon_pipeline** out) {
  return Guard([&] {
    CheckOut(out);
    const auto& corp = Need(corpus, "corpus").corpus;
    const auto& c = Need(config, "config");
    if (c.n_mus > 0) Need(c.mus, "mus");
    radanon::PipelineConfig p;
    p.split_seed = c.experiment.split_seed;
    p.pair_seed = c.experiment.pair_seed;
    p.pairs = {c.experiment.train_pairs, c.experiment.val_pairs, c.experiment.test_pairs};
    p.generator = {c.models.side, c.models.generator_width, c.models.generator_levels};
    p.classifier.side = c.models.side;
    p.verifier.side = c.models.side;
    p.model_seed = c.models.seed;
    p.gen_pretrain = ToCpp(c.generator_pretrain);
    p.clf_pretrain = ToCpp(c.classifier_pretrain);
    p.ver_pretrain = ToCpp(c.verifier_pretrain);
    p.train = ToCpp(c.train);
    p.train.log_path.clear();
    p.mus.assign(c.mus, c.mus + c.n_mus);
    p.attack = ToCpp(c.attack, c.models.side);
    p.dp_pix = ToCpp(c.dp_pix);
    p.bootstrap = ToCpp(c.bootstrap);
    if (c.out_dir) p.out_dir = c.out_dir;
    if (c.progress) {
      p.progress = [&c](const std::string& m) { c.progress(m.c_str(), c.progress_user); };
    }
    const radanon::PipelineResult r = radanon::RunPipeline(corp, p);
    auto result = std::make_unique<radanon_pipeline>();
    for (const auto& row : r.Rows()) {
      result->methods.push_back(row.method);
      result->attacks.push_back({row.attack});
      result->utilities.push_back({row.utility});
    }
    Publish(out, std::move(result));
  });
}

size_t radanon_pipeline_rows(const radanon_pipeline* p) {
  return p ? p->methods.size() : 0;
}
const char* radanon_pipeline_method(const radanon_pipeline* p, size_t row) {
  return p && row < p->methods.size() ? p->methods[row].c_str() : nullptr;
}
const radanon_attack_report* radanon_pipeline_attack(const radanon_pipeline* p,
                                                     size_t row) {
  return p && row < p->attacks.size() ? &p->attacks[row] : nullptr;
}
const radanon_utility_report* radanon_pipeline_utility(const radanon_pipeline* p,
                                                       size_t row) {
  return p && row < p->utilities.size() ? &p->utilities[row] : nullptr;
}
void radanon_pipeline_free(radanon_pipeline* p) { delete p; }

}  // extern "C"
