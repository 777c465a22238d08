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

#include "faal/dro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {
namespace {

constexpr double kResidualTol = 1e-12;
constexpr int kMaxIterations = 200;
// Smallest admissible distance between mu and the largest loss.
constexpr double kMuGuard = 1e-12;
// Feasibility slack of the oracle; absorbs rounding in KL(U, U).
constexpr double kOracleSlack = 1e-12;
// Final lattice step of the oracle's zoom phase.
constexpr double kOracleFinest = 1e-9;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> uniform(std::size_t m) {
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

// Weights w_c ∝ 1 / (t + gap_c) with gap_c = max loss - loss_c.
std::vector<double> anchor_first_weights(std::span<const double> gaps,
                                         double t) {
  std::vector<double> w(gaps.size());
  double total = 0.0;
  for (std::size_t c = 0; c < gaps.size(); ++c) {
    w[c] = 1.0 / (t + gaps[c]);
    total += w[c];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Weights w_c ∝ exp(-gap_c / lambda).
std::vector<double> weights_first_weights(std::span<const double> gaps,
                                          double lambda) {
  std::vector<double> w(gaps.size());
  double total = 0.0;
  for (std::size_t c = 0; c < gaps.size(); ++c) {
    w[c] = std::exp(-gaps[c] / lambda);
    total += w[c];
  }
  for (auto& v : w) v /= total;
  return w;
}

struct Bisection {
  std::vector<double> weights;
  double divergence = 0.0;
  int iterations = 0;
};

// Geometric bisection on a positive scalar s whose divergence decreases in s.
// `lo` must be infeasible (divergence > tau) and `hi` feasible. Returns the
// feasible end of the final bracket, or the midpoint once the residual is
// within tolerance.
template <typename WeightsFn>
Bisection bisect(WeightsFn&& weights_at, DivergenceDirection dir, double tau,
                 double lo, double hi) {
  Bisection best{weights_at(hi), 0.0, 0};
  best.divergence = kl_from_uniform(best.weights, dir);
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    if (!(mid > lo && mid < hi)) break;
    auto w = weights_at(mid);
    const double div = kl_from_uniform(w, dir);
    best.iterations = it;
    if (div <= tau) {
      hi = mid;
      best.weights = std::move(w);
      best.divergence = div;
      if (tau - div <= kResidualTol) break;
    } else {
      lo = mid;
      if (div - tau <= kResidualTol) {
        // Within tolerance from above; keep the feasible bracket end.
        continue;
      }
    }
  }
  return best;
}

CdaWeights assemble(const ClassMarginVector& losses,
                    std::span<const double> present_losses,
                    std::vector<double> w, double tau, DivergenceDirection dir,
                    int iterations) {
  CdaWeights out;
  out.tau = tau;
  out.direction = dir;
  out.iterations = iterations;
  out.achieved_divergence = kl_from_uniform(w, dir);
  out.objective_value = dot(w, present_losses);
  out.weights.assign(losses.num_classes(), 0.0);
  out.present.assign(losses.num_classes(), false);
  const auto classes = losses.present_classes();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    out.weights[classes[k]] = w[k];
    out.present[classes[k]] = true;
  }
  return out;
}

void validate_inputs(const ClassMarginVector& losses, double tau) {
  if (!std::isfinite(tau) || tau < 0.0) {
    throw DomainError(fmt::format("tau must be finite and >= 0, got {}", tau));
  }
  if (losses.num_present() == 0) {
    throw DomainError("solve_kl_dro: every class is absent");
  }
  for (const auto& v : losses.values) {
    if (v && !std::isfinite(*v)) {
      throw DomainError("solve_kl_dro: non-finite class loss");
    }
  }
}

}  // namespace

std::string_view to_string(DivergenceDirection d) {
  return d == DivergenceDirection::kAnchorFirst ? "anchor_first"
                                                : "weights_first";
}

DivergenceDirection parse_direction(std::string_view s) {
  if (s == "anchor_first") return DivergenceDirection::kAnchorFirst;
  if (s == "weights_first") return DivergenceDirection::kWeightsFirst;
  throw DomainError(fmt::format("unknown divergence direction '{}'", s));
}

std::size_t ClassMarginVector::num_present() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(),
                    [](const auto& v) { return v.has_value(); }));
}

std::vector<double> ClassMarginVector::present_values() const {
  std::vector<double> out;
  for (const auto& v : values) {
    if (v) out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> ClassMarginVector::present_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (values[c]) out.push_back(c);
  }
  return out;
}

ClassMarginVector ClassMarginVector::dense(std::span<const double> losses) {
  ClassMarginVector out;
  out.values.assign(losses.begin(), losses.end());
  return out;
}

std::size_t CdaWeights::num_present() const {
  return static_cast<std::size_t>(
      std::count(present.begin(), present.end(), true));
}

double kl_from_uniform(std::span<const double> w, DivergenceDirection d) {
  const double m = static_cast<double>(w.size());
  double acc = 0.0;
  if (d == DivergenceDirection::kAnchorFirst) {
    for (double v : w) {
      if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
      acc += std::log(v);
    }
    return -std::log(m) - acc / m;
  }
  for (double v : w) {
    if (v > 0.0) acc += v * std::log(v);
  }
  return std::log(m) + acc;
}

CdaWeights solve_kl_dro(const ClassMarginVector& losses, double tau,
                        DivergenceDirection direction) {
  validate_inputs(losses, tau);
  const std::vector<double> ell = losses.present_values();
  const std::size_t m = ell.size();
  const double top = *std::max_element(ell.begin(), ell.end());
  const double bottom = *std::min_element(ell.begin(), ell.end());

  if (m == 1 || tau == 0.0 || top == bottom) {
    return assemble(losses, ell, uniform(m), tau, direction, 0);
  }

  std::vector<double> gaps(m);
  for (std::size_t c = 0; c < m; ++c) gaps[c] = top - ell[c];

  if (direction == DivergenceDirection::kAnchorFirst) {
    auto weights_at = [&gaps](double t) {
      return anchor_first_weights(gaps, t);
    };
    const double lo = kMuGuard;
    auto w_lo = weights_at(lo);
    if (kl_from_uniform(w_lo, direction) <= tau) {
      // Even mu at the guard stays inside the ball.
      return assemble(losses, ell, std::move(w_lo), tau, direction, 0);
    }
    double hi = 1.0;
    while (kl_from_uniform(weights_at(hi), direction) > tau) hi *= 2.0;
    auto result = bisect(weights_at, direction, tau, lo, hi);
    return assemble(losses, ell, std::move(result.weights), tau, direction,
                    result.iterations);
  }

  // Weights first. As lambda -> 0 the weights become uniform over the tied
  // maximizers, with divergence log(m / k). A ball at least that large
  // contains the unconstrained optimum.
  const std::size_t k = static_cast<std::size_t>(
      std::count(gaps.begin(), gaps.end(), 0.0));
  std::vector<double> argmax_uniform(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    if (gaps[c] == 0.0) argmax_uniform[c] = 1.0 / static_cast<double>(k);
  }
  if (kl_from_uniform(argmax_uniform, direction) <= tau) {
    return assemble(losses, ell, std::move(argmax_uniform), tau, direction, 0);
  }
  auto weights_at = [&gaps](double lambda) {
    return weights_first_weights(gaps, lambda);
  };
  double lo = 1.0;
  while (kl_from_uniform(weights_at(lo), direction) <= tau) lo *= 0.5;
  double hi = 1.0;
  while (kl_from_uniform(weights_at(hi), direction) > tau) hi *= 2.0;
  auto result = bisect(weights_at, direction, tau, lo, hi);
  return assemble(losses, ell, std::move(result.weights), tau, direction,
                  result.iterations);
}

CdaWeights brute_force_oracle(const ClassMarginVector& losses, double tau,
                              DivergenceDirection direction,
                              double grid_resolution) {
  validate_inputs(losses, tau);
  const std::vector<double> ell = losses.present_values();
  const std::size_t m = ell.size();
  if (m > 4) {
    throw DomainError(
        fmt::format("brute_force_oracle: {} classes (max 4)", m));
  }
  if (m == 1) return assemble(losses, ell, {1.0}, tau, direction, 0);
  if (grid_resolution <= 0.0) grid_resolution = m == 3 ? 1e-3 : 1e-2;
  const std::size_t free = m - 2;

  // Completes a prefix w_0..w_{m-3} with the best feasible pair (a, b),
  // a + b = rest. The divergence is convex along the pair's line and
  // smallest at a = b, so the feasible pairs form a segment centred there
  // and the linear objective peaks at one of its ends.
  std::vector<double> w(m);
  auto complete = [&](std::span<const double> prefix) -> bool {
    double rest = 1.0;
    for (std::size_t c = 0; c < free; ++c) {
      w[c] = prefix[c];
      rest -= prefix[c];
    }
    if (rest < 0.0) return false;
    auto div_at = [&](double a) {
      w[m - 2] = a;
      w[m - 1] = rest - a;
      return kl_from_uniform(w, direction);
    };
    const double mid = rest / 2.0;
    if (!(div_at(mid) <= tau + kOracleSlack)) return false;
    double in = mid;
    double out = rest;
    if (div_at(rest) <= tau + kOracleSlack) {
      in = rest;
    } else {
      for (int it = 0; it < 200; ++it) {
        const double probe = 0.5 * (in + out);
        if (!(probe > in && probe < out)) break;
        (div_at(probe) <= tau + kOracleSlack ? in : out) = probe;
      }
    }
    const double a = ell[m - 2] >= ell[m - 1] ? in : rest - in;
    w[m - 2] = a;
    w[m - 1] = rest - a;
    return true;
  };

  std::vector<double> best_w;
  double best_obj = -std::numeric_limits<double>::infinity();
  auto consider = [&](std::span<const double> prefix) {
    if (!complete(prefix)) return;
    const double obj = dot(w, ell);
    if (obj > best_obj) {
      best_obj = obj;
      best_w = w;
    }
  };

  // Lattice center + step * k over the prefix, |k_c| <= radius, clipped to
  // [0, 1].
  auto search = [&](std::vector<double> center, double step, long radius) {
    std::vector<long> lo(free), hi(free), k(free);
    for (std::size_t c = 0; c < free; ++c) {
      lo[c] = std::max(-radius,
                       static_cast<long>(std::ceil(-center[c] / step - 1e-9)));
      hi[c] = std::min(radius, static_cast<long>(std::floor(
                                   (1.0 - center[c]) / step + 1e-9)));
      k[c] = lo[c];
    }
    std::vector<double> prefix(free);
    for (;;) {
      for (std::size_t c = 0; c < free; ++c) {
        prefix[c] = std::max(center[c] + step * static_cast<double>(k[c]), 0.0);
      }
      consider(prefix);
      std::size_t c = 0;
      while (c < free && k[c] == hi[c]) {
        k[c] = lo[c];
        ++c;
      }
      if (c == free) break;
      ++k[c];
    }
  };

  if (free == 0) {
    consider({});
  } else {
    const std::vector<double> center(free, 1.0 / static_cast<double>(m));
    double step = grid_resolution;
    search(center, step, std::numeric_limits<long>::max() / 4);
    // The best value over the prefix is concave, so zooming in around the
    // incumbent (re-centred until it stops improving) converges.
    constexpr long kRadius = 10;
    while (std::isfinite(best_obj) && step > kOracleFinest) {
      step = std::max(step / 10.0, kOracleFinest);
      for (int pass = 0; pass < 10000; ++pass) {
        const double before = best_obj;
        search({best_w.begin(), best_w.begin() + static_cast<long>(free)},
               step, kRadius);
        if (!(best_obj > before)) break;
      }
    }
  }
  if (!std::isfinite(best_obj)) {
    throw DomainError("brute_force_oracle: no feasible lattice point");
  }
  return assemble(losses, ell, std::move(best_w), tau, direction, 0);
}

std::vector<double> expand_to_sample_weights(const CdaWeights& w,
                                             std::span<const std::size_t> y) {
  const double m = static_cast<double>(w.num_present());
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= w.weights.size() || !w.present[y[i]]) {
      throw Error(fmt::format(
          "expand_to_sample_weights: label {} has no class weight", y[i]));
    }
    out[i] = w.weights[y[i]] * m;
  }
  return out;
}

}  // namespace faal
