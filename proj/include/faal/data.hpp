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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "faal/nn.hpp"
#include "faal/rng.hpp"
#include "faal/tensor.hpp"

namespace faal {

enum class Split { kTrain, kTest };

struct Dataset {
  DenseMatrix x;  // N x d, entries in [0, 1]
  Labels y;
  std::size_t num_classes = 0;
  Split split = Split::kTrain;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
  std::vector<std::size_t> class_counts() const;

  // Throws DomainError on labels outside [0, C) or x outside [0, 1].
  void validate() const;
};

// Gaussian blobs around the vertices of a scaled simplex. Vertex c is
// center_scale * e_c; it is then pulled toward the vertex centroid g:
//
//   center_c = g + hardness[c] * (center_scale * e_c - g)
//
// so a small hardness value makes the class overlap every other class.
// Samples are center_c + N(0, noise_sigma^2 I_d), mapped per coordinate by
// the fixed affine map [-4 sigma, scale + 4 sigma] -> [0, 1] and clamped.
struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  std::size_t n_per_class = 2000;
  std::size_t n_test_per_class = 500;
  std::vector<double> hardness{1.0, 1.0, 1.0, 0.35};
  double noise_sigma = 0.12;
  double center_scale = 1.0;
  std::uint64_t seed = 0;

  // Throws DomainError when hardness length != C, any hardness <= 0,
  // dim < C, or a count is zero.
  void validate() const;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

TrainTestSplit generate_synthetic(const SyntheticSpec& spec);

// Reads an IDX image/label pair. Images are either unsigned bytes with
// magic 0x00000803 (N x rows x cols, scaled by 1/255) or 64-bit big-endian
// doubles with magic 0x00000D02 (N x d, values used as stored). Labels are
// unsigned bytes with magic 0x00000801. Throws FormatError on bad magic,
// truncation or count mismatch. The class count defaults to max label + 1.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::optional<std::size_t> num_classes = std::nullopt);

// Writes the double-precision image variant plus a byte label file.
void write_idx(const Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

struct Batch {
  DenseMatrix x;
  Labels y;
};

// One epoch: a fresh permutation drawn from `rng`, cut into consecutive
// batches; the last batch may be short.
std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size,
                           SeededRng& rng);

}  // namespace faal
