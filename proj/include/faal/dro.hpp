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

// Class-weight maximization inside a KL ball around the uniform distribution:
//
//   max_w  sum_c w_c * loss_c   s.t.  w in simplex,  KL(.,.) <= tau
//
// The ball is centred on the uniform distribution over the classes that are
// present in the batch. Two divergence directions are supported:
//
//   kAnchorFirst   KL(U || w) = (1/m) sum_c log((1/m) / w_c)
//   kWeightsFirst  KL(w || U) = sum_c w_c log(m w_c)
//
// Both are solved exactly through their one-dimensional dual:
//
//   anchor first:   w_c ∝ 1 / (mu - loss_c),  mu > max loss
//   weights first:  w_c ∝ exp(loss_c / lambda),  lambda > 0
//
// and the scalar is bisected until the divergence equals tau.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace faal {

enum class DivergenceDirection { kAnchorFirst, kWeightsFirst };

std::string_view to_string(DivergenceDirection d);
// Accepts "anchor_first" / "weights_first"; throws DomainError otherwise.
DivergenceDirection parse_direction(std::string_view s);

// Per-class losses for one batch. Classes that did not appear in the batch
// carry no value.
struct ClassMarginVector {
  std::vector<std::optional<double>> values;

  std::size_t num_classes() const { return values.size(); }
  std::size_t num_present() const;
  bool present(std::size_t c) const { return values[c].has_value(); }
  // Present values in class order.
  std::vector<double> present_values() const;
  std::vector<std::size_t> present_classes() const;

  static ClassMarginVector dense(std::span<const double> losses);
};

// Solver output. `weights` is indexed by class; absent classes get 0.
struct CdaWeights {
  std::vector<double> weights;
  std::vector<bool> present;
  double tau = 0.0;
  DivergenceDirection direction = DivergenceDirection::kAnchorFirst;
  double achieved_divergence = 0.0;
  double objective_value = 0.0;
  int iterations = 0;

  std::size_t num_present() const;
};

// Divergence between the uniform distribution over `w.size()` entries and w,
// in the requested direction. Infinite when the anchor-first direction hits a
// zero weight.
double kl_from_uniform(std::span<const double> w, DivergenceDirection d);

// Exact maximizer. Throws DomainError for tau < 0, non-finite tau or losses,
// or when no class is present.
CdaWeights solve_kl_dro(const ClassMarginVector& losses, double tau,
                        DivergenceDirection direction =
                            DivergenceDirection::kAnchorFirst);

// Search-based maximizer for verification; shares no algebra with
// solve_kl_dro. The first m - 2 weights are searched on a lattice centred on
// the uniform distribution: an exhaustive pass at `grid_resolution` (0
// selects 1e-3 for three classes, 1e-2 for four), then zooming in around the
// incumbent, ten times finer per level, down to a 1e-9 step. The last two
// weights are completed by bisecting the divergence along their line, which
// is exact for two classes. Throws DomainError for more than four present
// classes.
CdaWeights brute_force_oracle(const ClassMarginVector& losses, double tau,
                              DivergenceDirection direction,
                              double grid_resolution = 0.0);

// Per-sample weights w[y_i] * m, m = number of present classes. Uniform class
// weights therefore give every sample weight 1.
std::vector<double> expand_to_sample_weights(const CdaWeights& w,
                                             std::span<const std::size_t> y);

}  // namespace faal
