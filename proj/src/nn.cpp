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

#include "faal/nn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {
namespace {

void check_labels(const DenseMatrix& softmax, std::span<const std::size_t> y) {
  if (y.size() != softmax.rows()) {
    throw DimensionError(fmt::format("{} labels for a batch of {}", y.size(),
                                     softmax.rows()));
  }
  for (std::size_t label : y) {
    if (label >= softmax.cols()) {
      throw DomainError(fmt::format("label {} out of range [0, {})", label,
                                    softmax.cols()));
    }
  }
}

void check_weights(const DenseMatrix& softmax,
                   std::span<const double> weights) {
  if (weights.size() != softmax.rows()) {
    throw DimensionError(fmt::format("{} sample weights for a batch of {}",
                                     weights.size(), softmax.rows()));
  }
}

std::size_t competing_class(std::span<const double> z, std::size_t y) {
  std::size_t best = y == 0 ? 1 : 0;
  for (std::size_t j = best + 1; j < z.size(); ++j) {
    if (j != y && z[j] > z[best]) best = j;
  }
  return best;
}

}  // namespace

DenseLayer::DenseLayer(DenseMatrix w, DenseMatrix b)
    : weight(std::move(w)),
      bias(std::move(b)),
      weight_grad(weight.rows(), weight.cols()),
      bias_grad(bias.rows(), bias.cols()) {
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw DimensionError("DenseLayer: bias must be 1 x out_dim");
  }
}

MlpModel::MlpModel(std::span<const std::size_t> widths, SeededRng& rng) {
  if (widths.size() < 2) throw DimensionError("MlpModel: need >= 2 widths");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    if (in == 0 || out == 0) throw DimensionError("MlpModel: zero width");
    DenseMatrix w(in, out);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    for (auto& v : w.values()) v = rng.normal(0.0, stddev);
    layers_.emplace_back(std::move(w), DenseMatrix(1, out));
  }
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("MlpModel: no layers");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    if (layers_[l].out_dim() != layers_[l + 1].in_dim()) {
      throw DimensionError(fmt::format(
          "MlpModel: layer {} outputs {} but layer {} expects {}", l,
          layers_[l].out_dim(), l + 1, layers_[l + 1].in_dim()));
    }
  }
}

MlpModel MlpModel::zeros(std::span<const std::size_t> widths) {
  if (widths.size() < 2) throw DimensionError("MlpModel: need >= 2 widths");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    layers.emplace_back(DenseMatrix(widths[l], widths[l + 1]),
                        DenseMatrix(1, widths[l + 1]));
  }
  return MlpModel(std::move(layers));
}

std::vector<std::size_t> MlpModel::widths() const {
  std::vector<std::size_t> w{input_dim()};
  for (const auto& layer : layers_) w.push_back(layer.out_dim());
  return w;
}

void MlpModel::zero_grad() {
  for (auto& layer : layers_) {
    layer.weight_grad.fill(0.0);
    layer.bias_grad.fill(0.0);
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

void MlpModel::for_each_parameter(
    const std::function<void(DenseMatrix&, DenseMatrix&)>& fn) {
  for (auto& layer : layers_) {
    fn(layer.weight, layer.weight_grad);
    fn(layer.bias, layer.bias_grad);
  }
}

bool MlpModel::same_parameters(const MlpModel& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight ||
        layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

double MlpModel::max_parameter_diff(const MlpModel& other) const {
  if (widths() != other.widths()) {
    throw DimensionError("max_parameter_diff: architectures differ");
  }
  double diff = 0.0;
  auto scan = [&diff](const DenseMatrix& a, const DenseMatrix& b) {
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
      diff = std::max(diff, std::abs(av[i] - bv[i]));
    }
  };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    scan(layers_[l].weight, other.layers_[l].weight);
    scan(layers_[l].bias, other.layers_[l].bias);
  }
  return diff;
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (auto& v : o) v /= total;
  }
  return out;
}

ForwardPass forward(const MlpModel& model, const DenseMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw DimensionError(fmt::format("forward: input has {} columns, model "
                                     "expects {}",
                                     x.cols(), model.input_dim()));
  }
  ForwardPass pass;
  const auto& layers = model.layers();
  DenseMatrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    DenseMatrix z = matmul(h, layers[l].weight);
    add_row_vector(z, layers[l].bias);
    pass.layer_inputs.push_back(std::move(h));
    if (l + 1 < layers.size()) {
      h = map_elementwise(z, ElementwiseFn::relu());
    } else {
      pass.logits = z;
    }
    pass.pre_activations.push_back(std::move(z));
  }
  pass.softmax = softmax_rows(pass.logits);
  return pass;
}

std::vector<double> ce_loss_per_sample(const DenseMatrix& softmax,
                                       std::span<const std::size_t> y) {
  check_labels(softmax, y);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    // Softmax entries can underflow to 0 for extreme logits.
    const double p = std::max(softmax(i, y[i]), 1e-300);
    out[i] = -std::log(p);
  }
  return out;
}

std::vector<double> cw_margin_per_sample(const DenseMatrix& softmax,
                                         std::span<const std::size_t> y) {
  check_labels(softmax, y);
  if (softmax.cols() < 2) throw DomainError("cw margin needs >= 2 classes");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto z = softmax.row(i);
    out[i] = z[competing_class(z, y[i])] - z[y[i]];
  }
  return out;
}

ClassMarginVector cw_margin_per_class(const DenseMatrix& softmax,
                                      std::span<const std::size_t> y,
                                      std::size_t num_classes) {
  if (y.empty()) throw DomainError("cw_margin_per_class: empty batch");
  if (softmax.cols() != num_classes) {
    throw DimensionError("cw_margin_per_class: class count mismatch");
  }
  const auto margins = cw_margin_per_sample(softmax, y);
  std::vector<double> sums(num_classes, 0.0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    sums[y[i]] += margins[i];
    ++counts[y[i]];
  }
  ClassMarginVector out;
  out.values.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) {
      out.values[c] =
          std::clamp(sums[c] / static_cast<double>(counts[c]), -1.0, 1.0);
    }
  }
  return out;
}

DenseMatrix ce_logit_grad(const DenseMatrix& softmax,
                          std::span<const std::size_t> y,
                          std::span<const double> sample_weights) {
  check_labels(softmax, y);
  check_weights(softmax, sample_weights);
  DenseMatrix g = softmax;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    auto r = g.row(i);
    r[y[i]] -= 1.0;
    for (auto& v : r) v *= sample_weights[i];
  }
  return g;
}

DenseMatrix cw_margin_logit_grad(const DenseMatrix& softmax,
                                 std::span<const std::size_t> y,
                                 std::span<const double> sample_weights) {
  check_labels(softmax, y);
  check_weights(softmax, sample_weights);
  DenseMatrix g(softmax.rows(), softmax.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const auto z = softmax.row(i);
    const std::size_t rival = competing_class(z, y[i]);
    // dmargin/dlogit_k = z_k (g_k - sum_j g_j z_j), g = e_rival - e_y.
    const double inner = z[rival] - z[y[i]];
    auto r = g.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      double gk = (k == rival ? 1.0 : 0.0) - (k == y[i] ? 1.0 : 0.0);
      r[k] = sample_weights[i] * z[k] * (gk - inner);
    }
  }
  return g;
}

DenseMatrix backprop(MlpModel& model, const ForwardPass& pass,
                     const DenseMatrix& dlogits, bool accumulate_params) {
  auto& layers = model.layers();
  if (!dlogits.same_shape(pass.logits)) {
    throw DimensionError("backprop: dlogits shape does not match logits");
  }
  if (accumulate_params) model.zero_grad();
  DenseMatrix delta = dlogits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) {
      delta = hadamard(delta, map_elementwise(pass.pre_activations[l],
                                              ElementwiseFn::relu_grad()));
    }
    if (accumulate_params) {
      layers[l].weight_grad = matmul_transpose_a(pass.layer_inputs[l], delta);
      layers[l].bias_grad = reduce(delta, Axis::kPerColumn, ReduceOp::kSum);
    }
    delta = matmul_transpose_b(delta, layers[l].weight);
  }
  return delta;
}

DenseMatrix input_gradient(const MlpModel& model, const ForwardPass& pass,
                           const DenseMatrix& dlogits) {
  const auto& layers = model.layers();
  if (!dlogits.same_shape(pass.logits)) {
    throw DimensionError("input_gradient: dlogits shape does not match logits");
  }
  DenseMatrix delta = dlogits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) {
      delta = hadamard(delta, map_elementwise(pass.pre_activations[l],
                                              ElementwiseFn::relu_grad()));
    }
    delta = matmul_transpose_b(delta, layers[l].weight);
  }
  return delta;
}

DenseMatrix backward(MlpModel& model, const DenseMatrix& x,
                     std::span<const std::size_t> y,
                     std::span<const double> sample_weights) {
  if (sample_weights.size() != x.rows()) {
    throw DimensionError(fmt::format("{} sample weights for a batch of {}",
                                     sample_weights.size(), x.rows()));
  }
  for (double w : sample_weights) {
    if (!(w >= 0.0)) throw DomainError("sample weights must be >= 0");
  }
  const ForwardPass pass = forward(model, x);
  return backprop(model, pass, ce_logit_grad(pass.softmax, y, sample_weights));
}

void Sgd::step(MlpModel& model, double lr) {
  auto& layers = model.layers();
  if (velocity_.empty()) {
    for (const auto& layer : layers) {
      velocity_.emplace_back(layer.weight.rows(), layer.weight.cols());
      velocity_.emplace_back(layer.bias.rows(), layer.bias.cols());
    }
  }
  std::size_t slot = 0;
  model.for_each_parameter([&](DenseMatrix& param, DenseMatrix& grad) {
    auto p = param.values();
    const auto g = grad.values();
    auto v = velocity_[slot++].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = g[i] + options_.weight_decay * p[i];
      v[i] = options_.momentum * v[i] + d;
      p[i] -= lr * v[i];
    }
  });
}

EmaState EmaState::start(const MlpModel& model, double decay,
                         std::size_t active_since) {
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw DomainError("ema decay must lie in [0, 1]");
  }
  return EmaState{model, decay, active_since};
}

void ema_update(EmaState& ema, const MlpModel& model) {
  auto& shadow = ema.shadow.layers();
  const auto& live = model.layers();
  if (shadow.size() != live.size()) {
    throw DimensionError("ema_update: architecture mismatch");
  }
  const double keep = ema.decay;
  const double take = 1.0 - ema.decay;
  auto blend = [&](DenseMatrix& s, const DenseMatrix& t) {
    if (!s.same_shape(t)) throw DimensionError("ema_update: shape mismatch");
    auto sv = s.values();
    const auto tv = t.values();
    for (std::size_t i = 0; i < sv.size(); ++i) {
      sv[i] = keep * sv[i] + take * tv[i];
    }
  };
  for (std::size_t l = 0; l < shadow.size(); ++l) {
    blend(shadow[l].weight, live[l].weight);
    blend(shadow[l].bias, live[l].bias);
  }
}

Labels predict(const MlpModel& model, const DenseMatrix& x) {
  const ForwardPass pass = forward(model, x);
  Labels out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = argmax(pass.softmax.row(i));
  return out;
}

}  // namespace faal
