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
// Radiograph records, patient-wise splitting, verification pair
// construction, PNG ingestion and the synthetic phantom corpus.
#ifndef RADANON_DATA_HPP_
#define RADANON_DATA_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radanon/image.hpp"
#include "radanon/models.hpp"

namespace radanon {

using LabelVector = std::array<std::uint8_t, kNumClasses>;

// Finding names in label-bit order.
const std::array<std::string_view, kNumClasses>& ClassNames();

// Maps a pipe-separated finding string ("Effusion|Mass") to label bits.
// "No Finding" and the empty string map to all zeros; unknown names throw.
LabelVector ParseFindingLabels(std::string_view findings);

struct Record {
  Image image;
  std::string patient_id;
  LabelVector labels{};
  int follow_up = 0;
};

using Corpus = std::vector<Record>;

// --- Synthetic phantom corpus ----------------------------------------------

struct SynthConfig {
  std::size_t n_patients = 200;
  // Mean images per patient; counts are 1 + Poisson(mean - 1).
  double images_per_patient = 3.6;
  std::size_t side = 64;
  // Amplitude of the per-patient band-pass texture (the biometric).
  double watermark_strength = 0.05;
  // Std of per-image white noise.
  double noise_std = 0.02;
  // Amplitude of the localized abnormality patterns.
  double blob_strength = 0.15;
  std::array<double, kNumClasses> prevalence = [] {
    std::array<double, kNumClasses> p{};
    p.fill(0.25);
    return p;
  }();
  std::uint64_t seed = 0;

  void Validate() const;
};

// Every image is a shared anatomical template (body outline, lung fields,
// rib bands, heart, spine) plus the patient's fixed band-pass texture, fresh
// per-image noise and one localized blob per positive label.
Corpus SynthCorpus(const SynthConfig& config);

// Band-pass (difference of Gaussians) filter used both to shape the
// synthetic texture and by oracle matchers.
Image BandPass(const Image& image);

// Centre (row, col) in pixels and radius of the blob drawn for `cls`.
struct BlobSite {
  double row;
  double col;
  double radius;
  double sign;
};
BlobSite ClassBlobSite(std::size_t cls, std::size_t side);

// --- Ingestion ---------------------------------------------------------------

struct IngestResult {
  Corpus records;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Reads the CSV index (columns "Image Index", "Finding Labels",
// "Follow-up #", "Patient ID"; the lower-case aliases filename, labels,
// follow_up, patient_id are accepted too) and the PNGs it names under
// `dir`, resizing each to side x side by area averaging. Unreadable images
// are skipped and counted; a PNG in `dir` without an index row is an error.
IngestResult IngestPng(const std::string& dir, const std::string& index_csv,
                       std::size_t side);

// --- Splits and pairs ----------------------------------------------------------

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

// Record indices per split.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Patient-wise split: patients are shuffled and cut so that
// n_val = max(1, floor(val * P)), n_test = max(1, floor(test * P)) and the
// remainder goes to training.
Split PatientSplit(const Corpus& corpus, std::uint64_t seed,
                   SplitRatios ratios = {});

struct ImagePair {
  std::size_t first = 0;   // record index of x1
  std::size_t second = 0;  // record index of x2
  int same = 0;            // similarity label y_v
};

// Balanced positive/negative pairs drawn from the records in `indices`.
// Positives: a patient with >= 2 images is drawn uniformly, then two of its
// images. Negatives: two images drawn uniformly until their patients differ.
// n_pairs must be even.
std::vector<ImagePair> BuildPairs(const Corpus& corpus,
                                  std::span<const std::size_t> indices,
                                  std::size_t n_pairs, std::uint64_t seed);

struct PairCounts {
  std::size_t train = 10000;
  std::size_t val = 2000;
  std::size_t test = 5000;
};

// Split plus the three pair sets every protocol step works from.
struct ExperimentData {
  Split split;
  std::vector<ImagePair> train_pairs;
  std::vector<ImagePair> val_pairs;
  std::vector<ImagePair> test_pairs;
};

ExperimentData PrepareExperiment(const Corpus& corpus, std::uint64_t split_seed,
                                 std::uint64_t pair_seed, PairCounts counts);

// --- Corpus cache --------------------------------------------------------------

// Binary corpus container, magic "DANC1", little-endian.
void SaveCorpus(const Corpus& corpus, const std::string& path);
Corpus LoadCorpus(const std::string& path);

}  // namespace radanon

#endif  // RADANON_DATA_HPP_
