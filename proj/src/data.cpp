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
#include "radanon/data.hpp"

#include <algorithm>
#include <bit>
#include <boost/tokenizer.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "radanon/error.hpp"
#include "radanon/warp.hpp"

namespace radanon {

namespace fs = std::filesystem;

const std::array<std::string_view, kNumClasses>& ClassNames() {
  static constexpr std::array<std::string_view, kNumClasses> kNames = {
      "Atelectasis", "Cardiomegaly", "Consolidation", "Edema",
      "Effusion",    "Emphysema",    "Fibrosis",      "Hernia",
      "Infiltration", "Mass",        "Nodule",        "Pleural_Thickening",
      "Pneumonia",   "Pneumothorax"};
  return kNames;
}

namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(b, e - b + 1));
}

std::string NormalizeName(std::string_view s) {
  std::string out;
  for (char c : Trim(s)) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

LabelVector ParseFindingLabels(std::string_view findings) {
  LabelVector labels{};
  std::size_t start = 0;
  while (start <= findings.size()) {
    auto end = findings.find('|', start);
    if (end == std::string_view::npos) end = findings.size();
    const std::string name = NormalizeName(findings.substr(start, end - start));
    if (!name.empty() && name != "nofinding") {
      bool found = false;
      for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (NormalizeName(ClassNames()[i]) == name) {
          labels[i] = 1;
          found = true;
        }
      }
      if (!found) {
        throw InvalidArgument("labels: unknown finding '" +
                              std::string(findings.substr(start, end - start)) +
                              "'");
      }
    }
    start = end + 1;
  }
  return labels;
}

// --- Synthetic corpus ------------------------------------------------------

void SynthConfig::Validate() const {
  if (n_patients == 0) throw InvalidArgument("synth: n_patients must be > 0");
  if (!(images_per_patient >= 1.0)) {
    throw InvalidArgument("synth: images_per_patient must be >= 1");
  }
  if (side < 8) throw InvalidArgument("synth: side must be >= 8");
  if (watermark_strength < 0 || noise_std < 0 || blob_strength < 0) {
    throw InvalidArgument("synth: strengths must be non-negative");
  }
  for (double p : prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("synth: prevalences must lie in [0,1]");
    }
  }
}

BlobSite ClassBlobSite(std::size_t cls, std::size_t side) {
  // (col, row, radius) as fractions of the side; sign +1 denser, -1 lucent.
  static constexpr double kSites[kNumClasses][4] = {
      {0.30, 0.62, 0.050, 1},  {0.55, 0.68, 0.070, 1},
      {0.70, 0.60, 0.050, 1},  {0.38, 0.40, 0.050, 1},
      {0.28, 0.80, 0.050, 1},  {0.66, 0.38, 0.050, -1},
      {0.32, 0.28, 0.045, 1},  {0.50, 0.86, 0.050, 1},
      {0.72, 0.48, 0.045, 1},  {0.22, 0.50, 0.045, 1},
      {0.77, 0.72, 0.040, 1},  {0.18, 0.38, 0.040, 1},
      {0.60, 0.26, 0.045, 1},  {0.82, 0.40, 0.045, -1}};
  if (cls >= kNumClasses) throw InvalidArgument("blob: class out of range");
  const double s = static_cast<double>(side);
  return {kSites[cls][1] * s, kSites[cls][0] * s, kSites[cls][2] * s,
          kSites[cls][3]};
}

namespace {

double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Soft indicator of the ellipse ((u-cu)/ru)^2 + ((v-cv)/rv)^2 <= 1.
double Ellipse(double u, double v, double cu, double cv, double ru, double rv,
               double softness) {
  const double d = std::sqrt(std::pow((u - cu) / ru, 2) + std::pow((v - cv) / rv, 2));
  return Sigmoid((1.0 - d) / softness);
}

Image Template(std::size_t side, Image* body_mask) {
  Image img(side, side);
  Image mask(side, side);
  const double s = static_cast<double>(side);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double u = (x + 0.5) / s, v = (y + 0.5) / s;
      const double body = Ellipse(u, v, 0.5, 0.56, 0.44, 0.48, 0.04);
      const double lungs = Ellipse(u, v, 0.31, 0.50, 0.14, 0.30, 0.05) +
                           Ellipse(u, v, 0.69, 0.50, 0.14, 0.30, 0.05);
      const double ribs =
          0.5 + 0.5 * std::cos(2.0 * std::numbers::pi *
                               (7.0 * v + 2.5 * (u - 0.5) * (u - 0.5)));
      const double heart = Ellipse(u, v, 0.55, 0.66, 0.12, 0.10, 0.08);
      const double spine = Sigmoid((0.035 - std::fabs(u - 0.5)) / 0.01);
      double val = 0.06 + 0.42 * body;
      val -= 0.22 * lungs;
      val += 0.05 * ribs * lungs;
      val += 0.14 * heart + 0.08 * spine * body;
      img.at(y, x) = val;
      mask.at(y, x) = body;
    }
  if (body_mask) *body_mask = std::move(mask);
  return img;
}

Image Blur(const Image& image, double sigma) {
  const auto size = 2 * static_cast<std::size_t>(std::ceil(3.0 * sigma)) + 1;
  const GaussianKernel k = GaussianKernel::Make(size, sigma);
  Graph g(Graph::Mode::kInference);
  const Tensor t({1, 1, image.height, image.width}, image.pixels);
  return ImageFromTensor(warp_ops::GaussianSmooth(g, t, k), 0);
}

}  // namespace

Image BandPass(const Image& image) {
  const Image fine = Blur(image, 0.7);
  const Image coarse = Blur(image, 2.0);
  Image out(image.height, image.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = fine.pixels[i] - coarse.pixels[i];
  }
  return out;
}

Corpus SynthCorpus(const SynthConfig& config) {
  config.Validate();
  const std::size_t side = config.side;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::poisson_distribution<int> extra(config.images_per_patient - 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Image body;
  const Image base = Template(side, &body);

  // Blob profiles are shared across patients.
  std::vector<Image> blobs;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const BlobSite site = ClassBlobSite(c, side);
    Image b(side, side);
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        const double d2 = std::pow(y + 0.5 - site.row, 2) + std::pow(x + 0.5 - site.col, 2);
        b.at(y, x) = site.sign * std::exp(-d2 / (2.0 * site.radius * site.radius));
      }
    blobs.push_back(std::move(b));
  }

  Corpus corpus;
  for (std::size_t p = 0; p < config.n_patients; ++p) {
    // Patient texture: band-passed white noise, unit variance.
    Image tex(side, side);
    for (double& v : tex.pixels) v = normal(rng);
    tex = BandPass(tex);
    double var = 0.0;
    for (double v : tex.pixels) var += v * v;
    const double norm = 1.0 / std::sqrt(var / static_cast<double>(tex.pixels.size()));

    char id[32];
    std::snprintf(id, sizeof(id), "P%05zu", p + 1);
    const int count = 1 + extra(rng);
    for (int f = 0; f < count; ++f) {
      Record r;
      r.patient_id = id;
      r.follow_up = f;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        r.labels[c] = unit(rng) < config.prevalence[c] ? 1 : 0;
      }
      Image img = base;
      for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] += config.watermark_strength * norm * tex.pixels[i] * body.pixels[i];
        img.pixels[i] += config.noise_std * normal(rng);
      }
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (!r.labels[c]) continue;
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
          img.pixels[i] += config.blob_strength * blobs[c].pixels[i];
        }
      }
      for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
      r.image = std::move(img);
      corpus.push_back(std::move(r));
    }
  }
  return corpus;
}

// --- Ingestion ---------------------------------------------------------------

namespace {

using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  Tokenizer tok(line);
  for (const auto& t : tok) out.push_back(Trim(t));
  return out;
}

long FindColumn(const std::vector<std::string>& header,
                std::initializer_list<std::string_view> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = NormalizeName(header[i]);
    for (auto n : names) {
      if (h == NormalizeName(n)) return static_cast<long>(i);
    }
  }
  return -1;
}

}  // namespace

IngestResult IngestPng(const std::string& dir, const std::string& index_csv,
                       std::size_t side) {
  if (side == 0) throw InvalidArgument("ingest: side must be positive");
  std::ifstream in(index_csv);
  if (!in) throw IoError("ingest: cannot open index " + index_csv);
  std::string line;
  if (!std::getline(in, line)) throw IoError("ingest: empty index " + index_csv);
  const auto header = SplitCsvLine(line);
  const long c_file = FindColumn(header, {"Image Index", "filename"});
  const long c_labels = FindColumn(header, {"Finding Labels", "labels"});
  const long c_follow = FindColumn(header, {"Follow-up #", "follow_up"});
  const long c_patient = FindColumn(header, {"Patient ID", "patient_id"});
  if (c_file < 0 || c_labels < 0 || c_patient < 0) {
    throw IoError("ingest: index " + index_csv +
                  " lacks filename, labels or patient id columns");
  }

  IngestResult result;
  std::set<std::string> indexed;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (Trim(line).empty()) continue;
    const auto cols = SplitCsvLine(line);
    const auto need = static_cast<std::size_t>(
        std::max({c_file, c_labels, c_follow, c_patient}));
    if (cols.size() <= need) {
      throw IoError("ingest: row " + std::to_string(row) + " of " + index_csv +
                    " has too few columns");
    }
    Record r;
    const std::string file = cols[static_cast<std::size_t>(c_file)];
    indexed.insert(file);
    r.patient_id = cols[static_cast<std::size_t>(c_patient)];
    if (r.patient_id.empty()) {
      throw IoError("ingest: row " + std::to_string(row) + " has no patient id");
    }
    r.labels = ParseFindingLabels(cols[static_cast<std::size_t>(c_labels)]);
    if (c_follow >= 0) {
      r.follow_up = std::atoi(cols[static_cast<std::size_t>(c_follow)].c_str());
    }
    try {
      r.image = ResizeArea(LoadPng((fs::path(dir) / file).string()), side);
    } catch (const IoError& e) {
      ++result.skipped;
      result.warnings.emplace_back(e.what());
      continue;
    }
    result.records.push_back(std::move(r));
  }

  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext != ".png") continue;
    const std::string name = entry.path().filename().string();
    if (!indexed.count(name)) {
      throw IoError("ingest: " + name + " in " + dir + " has no index row");
    }
  }
  if (ec) throw IoError("ingest: cannot list " + dir + ": " + ec.message());
  return result;
}

// --- Splits and pairs ----------------------------------------------------------

Split PatientSplit(const Corpus& corpus, std::uint64_t seed, SplitRatios ratios) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw InvalidArgument("split: ratios must be non-negative");
  }
  std::vector<std::string> patients;
  for (const Record& r : corpus) patients.push_back(r.patient_id);
  std::sort(patients.begin(), patients.end());
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
  if (patients.size() < 3) {
    throw InvalidArgument("split: need at least 3 patients, got " +
                          std::to_string(patients.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(patients.begin(), patients.end(), rng);

  const double total = ratios.train + ratios.val + ratios.test;
  const double n = static_cast<double>(patients.size());
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(n * ratios.val / total)));
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(n * ratios.test / total)));
  if (n_val + n_test >= patients.size()) {
    throw InvalidArgument("split: too few patients for the requested ratios");
  }
  std::map<std::string, int> bucket;
  for (std::size_t i = 0; i < patients.size(); ++i) {
    bucket[patients[i]] = i < n_val ? 1 : (i < n_val + n_test ? 2 : 0);
  }
  Split split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    switch (bucket[corpus[i].patient_id]) {
      case 0: split.train.push_back(i); break;
      case 1: split.val.push_back(i); break;
      default: split.test.push_back(i); break;
    }
  }
  return split;
}

std::vector<ImagePair> BuildPairs(const Corpus& corpus,
                                  std::span<const std::size_t> indices,
                                  std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs % 2 != 0) {
    throw InvalidArgument("pairs: n_pairs must be even for a balanced set");
  }
  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t idx : indices) {
    if (idx >= corpus.size()) throw InvalidArgument("pairs: index out of range");
    by_patient[corpus[idx].patient_id].push_back(idx);
  }
  std::vector<const std::vector<std::size_t>*> multi;
  for (const auto& [id, imgs] : by_patient) {
    if (imgs.size() >= 2) multi.push_back(&imgs);
  }
  if (n_pairs > 0 && multi.empty()) {
    throw InvalidArgument("pairs: no patient with two or more images");
  }
  if (n_pairs > 0 && by_patient.size() < 2) {
    throw InvalidArgument("pairs: negatives need at least two patients");
  }

  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  std::vector<ImagePair> pairs;
  pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs / 2; ++i) {
    const auto& imgs = *multi[pick(multi.size())];
    const std::size_t a = pick(imgs.size());
    std::size_t b = pick(imgs.size() - 1);
    if (b >= a) ++b;
    pairs.push_back({imgs[a], imgs[b], 1});
  }
  for (std::size_t i = 0; i < n_pairs / 2; ++i) {
    std::size_t a, b;
    do {
      a = indices[pick(indices.size())];
      b = indices[pick(indices.size())];
    } while (corpus[a].patient_id == corpus[b].patient_id);
    pairs.push_back({a, b, 0});
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

ExperimentData PrepareExperiment(const Corpus& corpus, std::uint64_t split_seed,
                                 std::uint64_t pair_seed, PairCounts counts) {
  ExperimentData d;
  d.split = PatientSplit(corpus, split_seed);
  d.train_pairs = BuildPairs(corpus, d.split.train, counts.train, pair_seed);
  d.val_pairs = BuildPairs(corpus, d.split.val, counts.val, pair_seed + 1);
  d.test_pairs = BuildPairs(corpus, d.split.test, counts.test, pair_seed + 2);
  return d;
}

// --- Corpus cache --------------------------------------------------------------

namespace {

constexpr char kCorpusMagic[5] = {'D', 'A', 'N', 'C', '1'};

void PutLE(std::ostream& os, std::uint64_t v, int bytes) {
  char b[8];
  for (int i = 0; i < bytes; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, bytes);
}

std::uint64_t GetLE(std::istream& is, int bytes, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), bytes)) {
    throw IoError("corpus: truncated file " + path);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void SaveCorpus(const Corpus& corpus, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("corpus: cannot open " + path + " for writing");
  os.write(kCorpusMagic, sizeof(kCorpusMagic));
  PutLE(os, corpus.size(), 8);
  for (const Record& r : corpus) {
    PutLE(os, r.patient_id.size(), 4);
    os.write(r.patient_id.data(), static_cast<std::streamsize>(r.patient_id.size()));
    PutLE(os, static_cast<std::uint32_t>(r.follow_up), 4);
    std::uint64_t bits = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) bits |= std::uint64_t{r.labels[c]} << c;
    PutLE(os, bits, 2);
    PutLE(os, r.image.height, 4);
    PutLE(os, r.image.width, 4);
    for (double v : r.image.pixels) PutLE(os, std::bit_cast<std::uint64_t>(v), 8);
  }
  if (!os) throw IoError("corpus: write failed for " + path);
}

Corpus LoadCorpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("corpus: cannot open " + path);
  char magic[sizeof(kCorpusMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kCorpusMagic)) {
    throw IoError("corpus: " + path + " is not a DANC1 corpus");
  }
  const auto n = GetLE(is, 8, path);
  Corpus corpus;
  for (std::uint64_t i = 0; i < n; ++i) {
    Record r;
    const auto id_len = GetLE(is, 4, path);
    if (id_len > 1024) throw IoError("corpus: corrupt record in " + path);
    r.patient_id.resize(id_len);
    if (!is.read(r.patient_id.data(), static_cast<std::streamsize>(id_len))) {
      throw IoError("corpus: truncated file " + path);
    }
    r.follow_up = static_cast<int>(static_cast<std::int32_t>(GetLE(is, 4, path)));
    const auto bits = GetLE(is, 2, path);
    for (std::size_t c = 0; c < kNumClasses; ++c) r.labels[c] = (bits >> c) & 1;
    const auto h = GetLE(is, 4, path);
    const auto w = GetLE(is, 4, path);
    if (h * w > (std::uint64_t{1} << 26)) throw IoError("corpus: corrupt image in " + path);
    r.image = Image(h, w);
    for (double& v : r.image.pixels) v = std::bit_cast<double>(GetLE(is, 8, path));
    corpus.push_back(std::move(r));
  }
  return corpus;
}

}  // namespace radanon
