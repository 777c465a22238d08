// Copyright 2026 The FAAL Desk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "faal/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {
namespace {

constexpr std::uint32_t kIdxUbyte3d = 0x00000803;
constexpr std::uint32_t kIdxDouble2d = 0x00000D02;
constexpr std::uint32_t kIdxUbyte1d = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class BigEndianReader {
 public:
  BigEndianReader(const std::vector<unsigned char>& bytes,
                  const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }
  unsigned char u8() {
    need(1);
    return bytes_[pos_++];
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | bytes_[pos_++];
    return std::bit_cast<double>(v);
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(fmt::format("{}: truncated IDX file", path_.string()));
    }
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

void put_f64(std::ofstream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (56 - 8 * i));
  out.write(b, 8);
}

}  // namespace

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t label : y) {
    if (label < num_classes) ++counts[label];
  }
  return counts;
}

void Dataset::validate() const {
  if (x.rows() != y.size()) {
    throw DimensionError(
        fmt::format("dataset: {} rows but {} labels", x.rows(), y.size()));
  }
  for (std::size_t label : y) {
    if (label >= num_classes) {
      throw DomainError(
          fmt::format("dataset: label {} outside [0, {})", label, num_classes));
    }
  }
  for (double v : x.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError(fmt::format("dataset: input value {} outside [0, 1]", v));
    }
  }
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw DomainError("synthetic: need >= 2 classes");
  if (dim < num_classes) throw DomainError("synthetic: dim must be >= classes");
  if (hardness.size() != num_classes) {
    throw DomainError(fmt::format("synthetic: {} hardness values for {} classes",
                                  hardness.size(), num_classes));
  }
  for (double h : hardness) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw DomainError("synthetic: hardness values must be positive");
    }
  }
  if (n_per_class == 0 || n_test_per_class == 0) {
    throw DomainError("synthetic: per-class counts must be positive");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw DomainError("synthetic: noise_sigma must be >= 0");
  }
  if (!(center_scale > 0.0) || !std::isfinite(center_scale)) {
    throw DomainError("synthetic: center_scale must be positive");
  }
}

TrainTestSplit generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t c_count = spec.num_classes;
  const std::size_t d = spec.dim;
  const double g = spec.center_scale / static_cast<double>(c_count);

  std::vector<std::vector<double>> centers(c_count, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t j = 0; j < c_count; ++j) {
      const double vertex = j == c ? spec.center_scale : 0.0;
      centers[c][j] = g + spec.hardness[c] * (vertex - g);
    }
  }

  const double lo = -4.0 * spec.noise_sigma;
  const double hi = spec.center_scale + 4.0 * spec.noise_sigma;
  const double span = hi - lo;

  SeededRng root(spec.seed);
  auto make = [&](std::size_t per_class, Split split, SeededRng rng) {
    Dataset ds;
    ds.num_classes = c_count;
    ds.split = split;
    ds.x = DenseMatrix(per_class * c_count, d);
    ds.y.resize(per_class * c_count);
    std::size_t row = 0;
    // Class-major generation; batching shuffles later.
    for (std::size_t c = 0; c < c_count; ++c) {
      for (std::size_t n = 0; n < per_class; ++n, ++row) {
        ds.y[row] = c;
        auto r = ds.x.row(row);
        for (std::size_t j = 0; j < d; ++j) {
          const double raw = centers[c][j] + spec.noise_sigma * rng.normal();
          r[j] = std::clamp((raw - lo) / span, 0.0, 1.0);
        }
      }
    }
    return ds;
  };
  SeededRng train_rng = root.split();
  SeededRng test_rng = root.split();
  return {make(spec.n_per_class, Split::kTrain, train_rng),
          make(spec.n_test_per_class, Split::kTest, test_rng)};
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::optional<std::size_t> num_classes) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);
  BigEndianReader images(image_bytes, images_path);
  BigEndianReader labels(label_bytes, labels_path);

  const std::uint32_t image_magic = images.u32();
  std::size_t n = 0;
  std::size_t d = 0;
  bool as_bytes = true;
  if (image_magic == kIdxUbyte3d) {
    n = images.u32();
    d = static_cast<std::size_t>(images.u32()) * images.u32();
  } else if (image_magic == kIdxDouble2d) {
    n = images.u32();
    d = images.u32();
    as_bytes = false;
  } else {
    throw FormatError(fmt::format("{}: bad image magic 0x{:08X}",
                                  images_path.string(), image_magic));
  }
  const std::uint32_t label_magic = labels.u32();
  if (label_magic != kIdxUbyte1d) {
    throw FormatError(fmt::format("{}: bad label magic 0x{:08X}",
                                  labels_path.string(), label_magic));
  }
  const std::size_t n_labels = labels.u32();
  if (n_labels != n) {
    throw FormatError(
        fmt::format("IDX count mismatch: {} images, {} labels", n, n_labels));
  }
  if (d == 0) throw FormatError("IDX image dimension is zero");

  Dataset ds;
  images.need(n * d * (as_bytes ? 1 : 8));
  labels.need(n);
  ds.x = DenseMatrix(n, d);
  for (auto& v : ds.x.values()) {
    v = as_bytes ? static_cast<double>(images.u8()) / 255.0 : images.f64();
  }
  ds.y.resize(n);
  std::size_t max_label = 0;
  for (auto& label : ds.y) {
    label = labels.u8();
    max_label = std::max(max_label, label);
  }
  if (!images.at_end() || !labels.at_end()) {
    throw FormatError("IDX file has trailing bytes");
  }
  ds.num_classes = num_classes.value_or(n == 0 ? 0 : max_label + 1);
  try {
    ds.validate();
  } catch (const DomainError& e) {
    throw FormatError(fmt::format("IDX content: {}", e.what()));
  }
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  ds.validate();
  for (std::size_t label : ds.y) {
    if (label > 255) throw DomainError("write_idx: label does not fit a byte");
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw IoError("write_idx: cannot open output files");
  put_u32(img, kIdxDouble2d);
  put_u32(img, static_cast<std::uint32_t>(ds.size()));
  put_u32(img, static_cast<std::uint32_t>(ds.dim()));
  for (double v : ds.x.values()) put_f64(img, v);
  put_u32(lab, kIdxUbyte1d);
  put_u32(lab, static_cast<std::uint32_t>(ds.size()));
  for (std::size_t label : ds.y) lab.put(static_cast<char>(label));
  if (!img || !lab) throw IoError("write_idx: write failed");
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size,
                           SeededRng& rng) {
  if (batch_size == 0) throw DomainError("batch_size must be positive");
  const auto order = rng.permutation(ds.size());
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const std::span<const std::size_t> idx(order.data() + start, end - start);
    Batch b;
    b.x = ds.x.gather_rows(idx);
    b.y.reserve(idx.size());
    for (std::size_t i : idx) b.y.push_back(ds.y[i]);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace faal
