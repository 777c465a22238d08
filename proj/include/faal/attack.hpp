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
#include <span>
#include <string_view>

#include "faal/nn.hpp"
#include "faal/rng.hpp"
#include "faal/tensor.hpp"

namespace faal {

enum class AttackObjective { kCrossEntropy, kCwMargin };

std::string_view to_string(AttackObjective o);
AttackObjective parse_objective(std::string_view s);  // "ce" | "cw_margin"

// l-infinity PGD settings. epsilon and alpha are in input units.
struct AttackConfig {
  double epsilon = 8.0 / 255.0;
  double alpha = 2.0 / 255.0;
  std::size_t steps = 10;
  AttackObjective objective = AttackObjective::kCrossEntropy;
  bool random_start = false;

  // Throws DomainError unless epsilon >= 0, alpha > 0, steps >= 1.
  void validate() const;
};

// Sign-gradient ascent on the perturbation:
//
//   delta = 0
//   repeat steps: delta = clamp(delta + alpha * sign(grad_delta loss), -eps, eps)
//   x_adv = clamp(x + delta, 0, 1)
//
// With random_start, delta starts uniform in [-eps, eps] drawn from `rng`
// (required in that case).
DenseMatrix pgd_attack(const MlpModel& model, const DenseMatrix& x,
                       std::span<const std::size_t> y, const AttackConfig& cfg,
                       SeededRng* rng = nullptr);

// Single step with alpha = epsilon.
DenseMatrix fgsm_attack(const MlpModel& model, const DenseMatrix& x,
                        std::span<const std::size_t> y, double epsilon);

// Attacked objective per sample (CE or CW margin) at x.
std::vector<double> attack_loss(const MlpModel& model, const DenseMatrix& x,
                                std::span<const std::size_t> y,
                                AttackObjective objective);

}  // namespace faal
