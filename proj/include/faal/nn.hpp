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
#include <functional>
#include <span>
#include <vector>

#include "faal/dro.hpp"
#include "faal/rng.hpp"
#include "faal/tensor.hpp"

namespace faal {

using Labels = std::vector<std::size_t>;

struct DenseLayer {
  DenseMatrix weight;  // in x out
  DenseMatrix bias;    // 1 x out
  DenseMatrix weight_grad;
  DenseMatrix bias_grad;

  DenseLayer(DenseMatrix w, DenseMatrix b);
  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

// Fully connected network: relu between layers, softmax on the output.
class MlpModel {
 public:
  // widths = {input, hidden..., classes}. He-normal weights, zero biases.
  MlpModel(std::span<const std::size_t> widths, SeededRng& rng);
  explicit MlpModel(std::vector<DenseLayer> layers);

  static MlpModel zeros(std::span<const std::size_t> widths);

  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t num_classes() const { return layers_.back().out_dim(); }
  std::vector<std::size_t> widths() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void zero_grad();
  std::size_t parameter_count() const;

  // Visits (parameter, gradient) pairs: weight then bias, layer by layer.
  void for_each_parameter(
      const std::function<void(DenseMatrix&, DenseMatrix&)>& fn);

  // Exact parameter equality (gradients ignored).
  bool same_parameters(const MlpModel& other) const;
  // Largest absolute parameter difference; models must share widths.
  double max_parameter_diff(const MlpModel& other) const;

 private:
  std::vector<DenseLayer> layers_;
};

// Activations kept for the backward pass.
struct ForwardPass {
  std::vector<DenseMatrix> layer_inputs;     // input to each layer
  std::vector<DenseMatrix> pre_activations;  // x W + b of each layer
  DenseMatrix logits;
  DenseMatrix softmax;
};

ForwardPass forward(const MlpModel& model, const DenseMatrix& x);

// Row softmax with max subtraction.
DenseMatrix softmax_rows(const DenseMatrix& logits);

// Per-sample -log softmax[i, y_i], no reduction.
std::vector<double> ce_loss_per_sample(const DenseMatrix& softmax,
                                       std::span<const std::size_t> y);

// Per-sample max_{j != y} z_j - z_y on softmax outputs. The competing class
// is the lowest-index maximizer.
std::vector<double> cw_margin_per_sample(const DenseMatrix& softmax,
                                         std::span<const std::size_t> y);

// Class-averaged margins; classes absent from the batch are left empty.
ClassMarginVector cw_margin_per_class(const DenseMatrix& softmax,
                                      std::span<const std::size_t> y,
                                      std::size_t num_classes);

// d(sum_i w_i * ce_i) / d logits = w_i (softmax_i - onehot(y_i)).
DenseMatrix ce_logit_grad(const DenseMatrix& softmax,
                          std::span<const std::size_t> y,
                          std::span<const double> sample_weights);

// d(sum_i w_i * margin_i) / d logits, through the softmax Jacobian.
DenseMatrix cw_margin_logit_grad(const DenseMatrix& softmax,
                                 std::span<const std::size_t> y,
                                 std::span<const double> sample_weights);

// Backpropagates dL/dlogits. Parameter gradients are zeroed and then filled
// when `accumulate_params` is set. Returns dL/dx.
DenseMatrix backprop(MlpModel& model, const ForwardPass& pass,
                     const DenseMatrix& dlogits, bool accumulate_params = true);

// dL/dx only; the model is untouched.
DenseMatrix input_gradient(const MlpModel& model, const ForwardPass& pass,
                           const DenseMatrix& dlogits);

// Gradient of sum_i sample_weights[i] * ce_i into the model's gradient
// buffers. Returns the gradient with respect to x.
DenseMatrix backward(MlpModel& model, const DenseMatrix& x,
                     std::span<const std::size_t> y,
                     std::span<const double> sample_weights);

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// theta <- theta - lr * v,  v <- momentum * v + (grad + weight_decay * theta).
class Sgd {
 public:
  explicit Sgd(SgdOptions options = {}) : options_(options) {}

  void step(MlpModel& model, double lr);
  const SgdOptions& options() const { return options_; }

 private:
  SgdOptions options_;
  std::vector<DenseMatrix> velocity_;
};

// Exponential moving average of parameters. The shadow starts as a copy of
// the model handed to `start`.
struct EmaState {
  MlpModel shadow;
  double decay = 0.999;
  std::size_t active_since = 0;

  static EmaState start(const MlpModel& model, double decay,
                        std::size_t active_since);
};

// shadow <- decay * shadow + (1 - decay) * theta.
void ema_update(EmaState& ema, const MlpModel& model);

// Predicted class per row (lowest-index argmax of the softmax).
Labels predict(const MlpModel& model, const DenseMatrix& x);

}  // namespace faal
