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
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "radanon/radanon.h"

namespace {

namespace fs = std::filesystem;

radanon_corpus* SmallCorpus(uint64_t seed) {
  radanon_synth_config c = radanon_synth_config_default();
  c.n_patients = 30;
  c.side = 16;
  c.seed = seed;
  radanon_corpus* out = nullptr;
  EXPECT_EQ(radanon_corpus_synth(&c, &out), RADANON_OK) << radanon_last_error();
  return out;
}

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_GT(std::strlen(radanon_version()), 0u);
  EXPECT_STRNE(radanon_status_string(RADANON_OK), radanon_status_string(RADANON_IO_ERROR));
}

TEST(CApi, ImageRoundTripAndErrors) {
  const double px[6] = {0, 0.2, 0.4, 0.6, 0.8, 1.0};
  radanon_image* img = nullptr;
  ASSERT_EQ(radanon_image_create(2, 3, px, &img), RADANON_OK);
  EXPECT_EQ(radanon_image_height(img), 2u);
  EXPECT_EQ(radanon_image_width(img), 3u);
  EXPECT_EQ(radanon_image_pixels(img)[4], 0.8);

  radanon_image* untouched = reinterpret_cast<radanon_image*>(0x1);
  EXPECT_EQ(radanon_image_create(2, 3, px, nullptr), RADANON_INVALID_ARGUMENT);
  EXPECT_EQ(radanon_image_load_png("/nonexistent/radanon.png", &untouched), RADANON_IO_ERROR);
  EXPECT_EQ(untouched, reinterpret_cast<radanon_image*>(0x1));
  EXPECT_NE(std::string(radanon_last_error()).find("radanon.png"), std::string::npos);

  const fs::path path = fs::temp_directory_path() / "radanon_capi.png";
  ASSERT_EQ(radanon_image_save_png(img, path.string().c_str()), RADANON_OK);
  radanon_image* back = nullptr;
  ASSERT_EQ(radanon_image_load_png(path.string().c_str(), &back), RADANON_OK);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(radanon_image_pixels(back)[i], px[i], 0.5 / 255.0 + 1e-12);
  }
  radanon_image* diff = nullptr;
  ASSERT_EQ(radanon_difference_map(img, img, &diff), RADANON_OK);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(radanon_image_pixels(diff)[i], 0.0);
  radanon_image_free(diff);
  radanon_image_free(back);
  radanon_image_free(img);
  radanon_image_free(nullptr);
  fs::remove(path);
}

TEST(CApi, DpPixDeterministicAndValidated) {
  std::vector<double> px(64);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = (i % 7) / 7.0;
  radanon_image* img = nullptr;
  ASSERT_EQ(radanon_image_create(8, 8, px.data(), &img), RADANON_OK);
  radanon_dp_pix_config c = radanon_dp_pix_config_default();
  c.b = 4;
  c.seed = 7;
  radanon_image *a = nullptr, *b = nullptr;
  ASSERT_EQ(radanon_dp_pixelize(img, &c, &a), RADANON_OK);
  ASSERT_EQ(radanon_dp_pixelize(img, &c, &b), RADANON_OK);
  EXPECT_EQ(std::memcmp(radanon_image_pixels(a), radanon_image_pixels(b), 64 * sizeof(double)), 0);
  c.epsilon = 0.0;
  radanon_image* bad = nullptr;
  EXPECT_EQ(radanon_dp_pixelize(img, &c, &bad), RADANON_INVALID_ARGUMENT);
  EXPECT_EQ(bad, nullptr);
  radanon_image* p = nullptr;
  ASSERT_EQ(radanon_pixelize(img, 1, &p), RADANON_OK);
  EXPECT_EQ(std::memcmp(radanon_image_pixels(p), px.data(), 64 * sizeof(double)), 0);
  radanon_image_free(p);
  radanon_image_free(a);
  radanon_image_free(b);
  radanon_image_free(img);
}

TEST(CApi, RocAuc) {
  const double s[4] = {0.1, 0.4, 0.35, 0.8};
  const int y[4] = {0, 0, 1, 1};
  double auc = 0;
  ASSERT_EQ(radanon_roc_auc(s, y, 4, &auc), RADANON_OK);
  EXPECT_DOUBLE_EQ(auc, 0.75);
  const int one_class[4] = {1, 1, 1, 1};
  EXPECT_EQ(radanon_roc_auc(s, one_class, 4, &auc), RADANON_INVALID_ARGUMENT);
}

TEST(CApi, CorpusAccessAndCache) {
  radanon_corpus* c = SmallCorpus(3);
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(radanon_corpus_num_patients(c), 30u);
  ASSERT_GE(radanon_corpus_size(c), 12u);
  uint8_t labels[RADANON_NUM_CLASSES];
  EXPECT_EQ(radanon_corpus_labels(c, 0, labels), RADANON_OK);
  EXPECT_EQ(radanon_corpus_labels(c, 100000, labels), RADANON_INVALID_ARGUMENT);
  EXPECT_STREQ(radanon_corpus_patient(c, 0), "P00001");

  const fs::path path = fs::temp_directory_path() / "radanon_capi.danc";
  ASSERT_EQ(radanon_corpus_save(c, path.string().c_str()), RADANON_OK);
  radanon_corpus* back = nullptr;
  ASSERT_EQ(radanon_corpus_load(path.string().c_str(), &back), RADANON_OK);
  EXPECT_EQ(radanon_corpus_size(back), radanon_corpus_size(c));
  radanon_image *i1 = nullptr, *i2 = nullptr;
  ASSERT_EQ(radanon_corpus_image(c, 1, &i1), RADANON_OK);
  ASSERT_EQ(radanon_corpus_image(back, 1, &i2), RADANON_OK);
  EXPECT_EQ(std::memcmp(radanon_image_pixels(i1), radanon_image_pixels(i2),
                        16 * 16 * sizeof(double)),
            0);
  radanon_image_free(i1);
  radanon_image_free(i2);

  const fs::path dir = fs::temp_directory_path() / "radanon_capi_export";
  fs::remove_all(dir);
  ASSERT_EQ(radanon_corpus_export_png(c, dir.string().c_str()), RADANON_OK);
  radanon_corpus* ingested = nullptr;
  size_t skipped = 99;
  ASSERT_EQ(radanon_corpus_ingest(dir.string().c_str(), (dir / "index.csv").string().c_str(),
                                  16, &skipped, &ingested),
            RADANON_OK)
      << radanon_last_error();
  EXPECT_EQ(skipped, 0u);
  EXPECT_EQ(radanon_corpus_size(ingested), radanon_corpus_size(c));
  EXPECT_EQ(radanon_corpus_num_patients(ingested), 30u);

  radanon_corpus_free(ingested);
  radanon_corpus_free(back);
  radanon_corpus_free(c);
  fs::remove(path);
  fs::remove_all(dir);
}

TEST(CApi, ExperimentSplitSizes) {
  radanon_corpus* c = SmallCorpus(4);
  radanon_experiment_config ec = radanon_experiment_config_default();
  ec.train_pairs = 20;
  ec.val_pairs = 4;
  ec.test_pairs = 10;
  radanon_experiment* e = nullptr;
  ASSERT_EQ(radanon_experiment_prepare(c, &ec, &e), RADANON_OK) << radanon_last_error();
  EXPECT_EQ(radanon_experiment_split_size(e, 0) + radanon_experiment_split_size(e, 1) +
                radanon_experiment_split_size(e, 2),
            radanon_corpus_size(c));
  ec.train_pairs = 3;
  radanon_experiment* odd = nullptr;
  EXPECT_EQ(radanon_experiment_prepare(c, &ec, &odd), RADANON_INVALID_ARGUMENT);
  radanon_experiment_free(e);
  radanon_corpus_free(c);
}

TEST(CApi, ModelsAnonymizeAtZeroIsIdentity) {
  radanon_model_config mc = radanon_model_config_default();
  mc.side = 16;
  mc.generator_width = 2;
  mc.generator_levels = 2;
  radanon_models* m = nullptr;
  ASSERT_EQ(radanon_models_create(&mc, &m), RADANON_OK) << radanon_last_error();
  EXPECT_EQ(radanon_models_side(m), 16u);
  radanon_corpus* c = SmallCorpus(5);
  radanon_image* x = nullptr;
  ASSERT_EQ(radanon_corpus_image(c, 0, &x), RADANON_OK);
  radanon_image* y = nullptr;
  ASSERT_EQ(radanon_models_anonymize(m, x, 0.0, &y), RADANON_OK);
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_NEAR(radanon_image_pixels(y)[i], radanon_image_pixels(x)[i], 1e-12);
  }
  radanon_image* wrong = nullptr;
  ASSERT_EQ(radanon_image_create(8, 8, nullptr, &wrong), RADANON_OK);
  radanon_image* z = nullptr;
  EXPECT_EQ(radanon_models_anonymize(m, wrong, 0.01, &z), RADANON_INVALID_ARGUMENT);

  const fs::path path = fs::temp_directory_path() / "radanon_capi.danv";
  ASSERT_EQ(radanon_models_save(m, path.string().c_str()), RADANON_OK);
  radanon_models* back = nullptr;
  ASSERT_EQ(radanon_models_load(path.string().c_str(), &back), RADANON_OK);
  radanon_image* y2 = nullptr;
  ASSERT_EQ(radanon_models_anonymize(back, x, 0.05, &y2), RADANON_OK);
  radanon_image* y3 = nullptr;
  ASSERT_EQ(radanon_models_anonymize(m, x, 0.05, &y3), RADANON_OK);
  EXPECT_EQ(std::memcmp(radanon_image_pixels(y2), radanon_image_pixels(y3), 256 * sizeof(double)),
            0);
  for (auto* p : {x, y, wrong, y2, y3}) radanon_image_free(p);
  radanon_models_free(back);
  radanon_models_free(m);
  radanon_corpus_free(c);
  fs::remove(path);
}

TEST(CApi, ReportsAndRendering) {
  const double aucs[3] = {0.9, 0.92, 0.94};
  radanon_attack_report* a = nullptr;
  ASSERT_EQ(radanon_attack_report_from_values(aucs, 3, &a), RADANON_OK);
  EXPECT_EQ(radanon_attack_report_runs(a), 3u);
  EXPECT_NEAR(radanon_attack_report_mean(a), 0.92, 1e-12);
  double per_class[RADANON_NUM_CLASSES];
  for (double& v : per_class) v = 0.8;
  per_class[7] = std::nan("");
  radanon_utility_report* u = nullptr;
  ASSERT_EQ(radanon_utility_report_from_values(per_class, 0.8, 0.75, 0.85, &u), RADANON_OK);
  EXPECT_TRUE(std::isnan(radanon_utility_report_class_auc(u, 7)));
  const radanon_report_row rows[2] = {{"Real", a, u}, {"DP", nullptr, u}};
  size_t length = 0;
  ASSERT_EQ(radanon_render_report(rows, 2, 1, nullptr, 0, &length), RADANON_OK);
  std::string csv(length + 1, '\0');
  ASSERT_EQ(radanon_render_report(rows, 2, 1, csv.data(), csv.size(), &length), RADANON_OK);
  csv.resize(length);
  EXPECT_EQ(csv.rfind("method,", 0), 0u);
  EXPECT_NE(csv.find("Real,3,"), std::string::npos);
  ASSERT_EQ(radanon_render_report(rows, 2, 0, nullptr, 0, &length), RADANON_OK);
  EXPECT_GT(length, 0u);
  radanon_utility_report_free(u);
  radanon_attack_report_free(a);
}

TEST(CApi, NullHandlesAreInvalidArguments) {
  radanon_image* out = nullptr;
  EXPECT_EQ(radanon_pixelize(nullptr, 2, &out), RADANON_INVALID_ARGUMENT);
  radanon_corpus* c = nullptr;
  EXPECT_EQ(radanon_corpus_synth(nullptr, &c), RADANON_INVALID_ARGUMENT);
  EXPECT_EQ(radanon_corpus_size(nullptr), 0u);
  radanon_pipeline* p = nullptr;
  EXPECT_EQ(radanon_pipeline_run(nullptr, nullptr, &p), RADANON_INVALID_ARGUMENT);
}

}  // namespace
