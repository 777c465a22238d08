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

#include "faal/attack.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {

std::string_view to_string(AttackObjective o) {
  return o == AttackObjective::kCrossEntropy ? "ce" : "cw_margin";
}

AttackObjective parse_objective(std::string_view s) {
  if (s == "ce") return AttackObjective::kCrossEntropy;
  if (s == "cw_margin") return AttackObjective::kCwMargin;
  throw DomainError(fmt::format("unknown attack objective '{}'", s));
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("attack epsilon must be >= 0");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("attack alpha must be > 0");
  }
  if (steps < 1) throw DomainError("attack steps must be >= 1");
}

DenseMatrix pgd_attack(const MlpModel& model, const DenseMatrix& x,
                       std::span<const std::size_t> y, const AttackConfig& cfg,
                       SeededRng* rng) {
  cfg.validate();
  if (y.size() != x.rows()) {
    throw DimensionError(
        fmt::format("pgd_attack: {} labels for {} rows", y.size(), x.rows()));
  }
  if (x.cols() != model.input_dim()) {
    throw DimensionError("pgd_attack: input width does not match model");
  }
  for (std::size_t label : y) {
    if (label >= model.num_classes()) {
      throw DomainError(fmt::format("pgd_attack: label {} out of range", label));
    }
  }

  const double eps = cfg.epsilon;
  DenseMatrix delta(x.rows(), x.cols());
  if (cfg.random_start) {
    if (rng == nullptr) throw DomainError("pgd_attack: random_start needs rng");
    for (auto& v : delta.values()) v = rng->uniform(-eps, eps);
  }

  const std::vector<double> unit(x.rows(), 1.0);
  DenseMatrix shifted = x;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    {
      const auto xs = x.values();
      const auto ds = delta.values();
      auto ss = shifted.values();
      for (std::size_t i = 0; i < ss.size(); ++i) ss[i] = xs[i] + ds[i];
    }
    const ForwardPass pass = forward(model, shifted);
    const DenseMatrix dlogits =
        cfg.objective == AttackObjective::kCrossEntropy
            ? ce_logit_grad(pass.softmax, y, unit)
            : cw_margin_logit_grad(pass.softmax, y, unit);
    const DenseMatrix grad = input_gradient(model, pass, dlogits);
    const auto gs = grad.values();
    auto ds = delta.values();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double stepped =
          ds[i] + cfg.alpha * apply(ElementwiseFn::sign(), gs[i]);
      ds[i] = std::max(std::min(stepped, eps), -eps);
    }
  }

  DenseMatrix x_adv = x;
  const auto ds = delta.values();
  auto as = x_adv.values();
  for (std::size_t i = 0; i < as.size(); ++i) {
    as[i] = std::min(std::max(as[i] + ds[i], 0.0), 1.0);
  }
  return x_adv;
}

DenseMatrix fgsm_attack(const MlpModel& model, const DenseMatrix& x,
                        std::span<const std::size_t> y, double epsilon) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  // alpha must be positive; with epsilon == 0 the ball clamp zeroes the step.
  cfg.alpha = epsilon > 0.0 ? epsilon : 1.0;
  cfg.steps = 1;
  return pgd_attack(model, x, y, cfg);
}

std::vector<double> attack_loss(const MlpModel& model, const DenseMatrix& x,
                                std::span<const std::size_t> y,
                                AttackObjective objective) {
  const ForwardPass pass = forward(model, x);
  return objective == AttackObjective::kCrossEntropy
             ? ce_loss_per_sample(pass.softmax, y)
             : cw_margin_per_sample(pass.softmax, y);
}

}  // namespace faal
