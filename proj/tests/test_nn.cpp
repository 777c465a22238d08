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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "faal/errors.hpp"
#include "faal/nn.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace faal;
using faal::testing::random_matrix;

namespace {

const std::vector<std::size_t> kWidths{5, 7, 6, 4};

MlpModel random_model(std::uint64_t seed,
                      const std::vector<std::size_t>& widths = kWidths) {
  SeededRng rng(seed);
  MlpModel m(widths, rng);
  // Non-zero biases so the bias paths are exercised.
  for (auto& layer : m.layers()) {
    for (auto& v : layer.bias.values()) v = rng.uniform(-0.2, 0.2);
  }
  return m;
}

Labels random_labels(std::size_t n, std::size_t classes, SeededRng& rng) {
  Labels y(n);
  for (auto& v : y) v = rng.uniform_int(classes);
  return y;
}

MlpModel scalar_model(double w) {
  std::vector<DenseLayer> layers;
  layers.emplace_back(DenseMatrix(1, 1, w), DenseMatrix(1, 1, 0.0));
  return MlpModel(std::move(layers));
}

}  // namespace

TEST_CASE("layer shapes must chain") {
  std::vector<DenseLayer> layers;
  layers.emplace_back(DenseMatrix(3, 4), DenseMatrix(1, 4));
  layers.emplace_back(DenseMatrix(5, 2), DenseMatrix(1, 2));
  CHECK_THROWS_AS(MlpModel(std::move(layers)), DimensionError);
}

TEST_CASE("zero-weight model gives uniform softmax") {
  const MlpModel m = MlpModel::zeros(kWidths);
  SeededRng rng(1);
  const auto pass = forward(m, random_matrix(6, 5, rng));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(pass.softmax(i, c) == 0.25);
  }
}

TEST_CASE("identity model keeps the argmax of basis inputs") {
  std::vector<DenseLayer> layers;
  layers.emplace_back(DenseMatrix::identity(4), DenseMatrix(1, 4));
  const MlpModel m(std::move(layers));
  const DenseMatrix x = DenseMatrix::identity(4);
  CHECK(predict(m, x) == Labels{0, 1, 2, 3});
}

TEST_CASE("forward rejects a wrong input width") {
  const MlpModel m = random_model(2);
  CHECK_THROWS_AS(forward(m, DenseMatrix(3, 4)), DimensionError);
}

TEST_CASE("softmax rows are normalized and shift invariant") {
  SeededRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix logits = random_matrix(8, 5, rng, -30.0, 30.0);
    const DenseMatrix p = softmax_rows(logits);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0.0;
      for (double v : p.row(i)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
      const double shift = rng.uniform(-100.0, 100.0);
      for (auto& v : logits.row(i)) v += shift;
    }
    const DenseMatrix q = softmax_rows(logits);
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(std::abs(p.values()[k] - q.values()[k]) <= 1e-10);
    }
  }
}

TEST_CASE("cross-entropy examples") {
  const auto confident = DenseMatrix::from_rows({{1.0 - 1e-12, 1e-12}});
  CHECK(ce_loss_per_sample(confident, Labels{0})[0] ==
        doctest::Approx(0.0).epsilon(1e-11));
  const DenseMatrix uniform(3, 10, 0.1);
  for (double v : ce_loss_per_sample(uniform, Labels{0, 4, 9})) {
    CHECK(v == doctest::Approx(2.302585092994046).epsilon(1e-15));
  }
  CHECK_THROWS_AS(ce_loss_per_sample(uniform, Labels{0, 10, 1}), DomainError);
}

TEST_CASE("cross-entropy matches an extended-precision log") {
  SeededRng rng(6);
  const DenseMatrix p = softmax_rows(random_matrix(50, 7, rng, -5.0, 5.0));
  const Labels y = random_labels(50, 7, rng);
  const auto ce = ce_loss_per_sample(p, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double ref = -std::log(static_cast<long double>(p(i, y[i])));
    CHECK(ce[i] >= 0.0);
    CHECK(std::abs(static_cast<long double>(ce[i]) - ref) <= 1e-15L * (1 + ref));
  }
}

TEST_CASE("CW margin examples") {
  const auto onehot = DenseMatrix::from_rows({{0, 1, 0}});
  CHECK(cw_margin_per_sample(onehot, Labels{1})[0] == -1.0);
  const DenseMatrix uniform(2, 4, 0.25);
  CHECK(cw_margin_per_sample(uniform, Labels{0, 3})[0] == 0.0);
  const auto z = DenseMatrix::from_rows({{0.1, 0.7, 0.2}});
  CHECK(cw_margin_per_sample(z, Labels{0})[0] == doctest::Approx(0.6));
}

TEST_CASE("per-class margins average present classes and flag absent ones") {
  const auto z = DenseMatrix::from_rows({{0.1, 0.6, 0.2, 0.1},
                                         {0.6, 0.3, 0.1, 0.0},
                                         {0.2, 0.2, 0.6, 0.0}});
  const ClassMarginVector m = cw_margin_per_class(z, Labels{0, 0, 2}, 4);
  CHECK(m.num_classes() == 4);
  CHECK(m.num_present() == 2);
  CHECK(*m.values[0] == doctest::Approx((0.5 + -0.3) / 2.0));
  CHECK_FALSE(m.present(1));
  CHECK(*m.values[2] == doctest::Approx(-0.4));
  CHECK_FALSE(m.present(3));
}

TEST_CASE("per-class margins stay in [-1, 1]") {
  SeededRng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix p = softmax_rows(random_matrix(16, 5, rng, -40.0, 40.0));
    const auto m = cw_margin_per_class(p, random_labels(16, 5, rng), 5);
    for (double v : m.present_values()) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  const ClassMarginVector u = cw_margin_per_class(DenseMatrix(4, 4, 0.25),
                                                  Labels{0, 1, 2, 3}, 4);
  for (double v : u.present_values()) CHECK(v == 0.0);
}

TEST_CASE("parameter gradients match central differences") {
  SeededRng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const MlpModel m = random_model(100 + trial);
    const DenseMatrix x = random_matrix(9, 5, rng, 0.0, 1.0);
    const Labels y = random_labels(9, 4, rng);
    std::vector<double> w(9);
    for (auto& v : w) v = rng.uniform(0.0, 2.0);
    const auto r = faal::testing::check_parameter_gradients(m, x, y, w, 100, rng);
    CHECK(r.checked == 100);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("input gradients match central differences") {
  SeededRng rng(12);
  const MlpModel m = random_model(7);
  const DenseMatrix x = random_matrix(4, 5, rng, 0.0, 1.0);
  const Labels y = random_labels(4, 4, rng);
  const std::vector<double> w(4, 1.0);
  for (auto objective : {0, 1}) {
    const auto pass = forward(m, x);
    const DenseMatrix dlogits = objective == 0
                                    ? ce_logit_grad(pass.softmax, y, w)
                                    : cw_margin_logit_grad(pass.softmax, y, w);
    const DenseMatrix g = input_gradient(m, pass, dlogits);
    auto loss = [&](const DenseMatrix& xx) {
      const auto sm = forward(m, xx).softmax;
      const auto v = objective == 0 ? ce_loss_per_sample(sm, y)
                                    : cw_margin_per_sample(sm, y);
      double s = 0.0;
      for (double e : v) s += e;
      return s;
    };
    for (std::size_t k = 0; k < x.size(); ++k) {
      DenseMatrix up = x;
      DenseMatrix down = x;
      up.values()[k] += 1e-5;
      down.values()[k] -= 1e-5;
      const double numeric = (loss(up) - loss(down)) / 2e-5;
      CHECK(faal::testing::relative_error(g.values()[k], numeric) < 1e-4);
    }
  }
}

TEST_CASE("zero sample weights give zero gradients") {
  MlpModel m = random_model(3);
  SeededRng rng(13);
  const DenseMatrix x = random_matrix(5, 5, rng, 0.0, 1.0);
  const Labels y = random_labels(5, 4, rng);
  backward(m, x, y, std::vector<double>(5, 1.0));
  backward(m, x, y, std::vector<double>(5, 0.0));
  m.for_each_parameter([](DenseMatrix&, DenseMatrix& g) {
    for (double v : g.values()) CHECK(v == 0.0);
  });
}

TEST_CASE("weights 1/B give the mean cross-entropy gradient") {
  SeededRng rng(14);
  MlpModel a = random_model(5);
  MlpModel b = a;
  const DenseMatrix x = random_matrix(6, 5, rng, 0.0, 1.0);
  const Labels y = random_labels(6, 4, rng);
  backward(a, x, y, std::vector<double>(6, 1.0 / 6.0));
  backward(b, x, y, std::vector<double>(6, 1.0));
  std::vector<double> ga;
  std::vector<double> gb;
  a.for_each_parameter([&](DenseMatrix&, DenseMatrix& g) {
    ga.insert(ga.end(), g.values().begin(), g.values().end());
  });
  b.for_each_parameter([&](DenseMatrix&, DenseMatrix& g) {
    gb.insert(gb.end(), g.values().begin(), g.values().end());
  });
  for (std::size_t k = 0; k < ga.size(); ++k) {
    CHECK(ga[k] == doctest::Approx(gb[k] / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("backward validates its weights") {
  MlpModel m = random_model(3);
  const DenseMatrix x(2, 5, 0.5);
  CHECK_THROWS_AS(backward(m, x, Labels{0, 1}, std::vector<double>{1.0}),
                  DimensionError);
  CHECK_THROWS_AS(backward(m, x, Labels{0, 1}, std::vector<double>{1.0, -1.0}),
                  DomainError);
}

TEST_CASE("sgd with lr 0 leaves parameters unchanged") {
  MlpModel m = random_model(15);
  const MlpModel before = m;
  SeededRng rng(15);
  backward(m, random_matrix(3, 5, rng), Labels{0, 1, 2},
           std::vector<double>(3, 1.0));
  Sgd sgd;
  sgd.step(m, 0.0);
  CHECK(m.same_parameters(before));
}

TEST_CASE("plain sgd on a scalar") {
  MlpModel m = scalar_model(0.8);
  m.layers()[0].weight_grad = DenseMatrix(1, 1, 0.3);
  m.layers()[0].bias_grad = DenseMatrix(1, 1, 0.0);
  Sgd sgd(SgdOptions{0.0, 0.0});
  sgd.step(m, 0.1);
  CHECK(m.layers()[0].weight(0, 0) == 0.8 - 0.1 * 0.3);
}

TEST_CASE("two momentum steps follow the unrolled recurrence") {
  const double mu = 0.9;
  const double wd = 5e-4;
  const double lr = 0.05;
  const double theta0 = 0.8;
  const double g1 = 0.3;
  const double g2 = -0.7;
  MlpModel m = scalar_model(theta0);
  Sgd sgd(SgdOptions{mu, wd});
  m.layers()[0].weight_grad = DenseMatrix(1, 1, g1);
  sgd.step(m, lr);
  m.layers()[0].weight_grad = DenseMatrix(1, 1, g2);
  sgd.step(m, lr);

  const double v1 = g1 + wd * theta0;
  const double theta1 = theta0 - lr * v1;
  const double v2 = mu * v1 + g2 + wd * theta1;
  const double theta2 = theta1 - lr * v2;
  CHECK(m.layers()[0].weight(0, 0) == doctest::Approx(theta2).epsilon(1e-15));
}

TEST_CASE("ema decay endpoints and a hand-computed average") {
  const MlpModel start = scalar_model(1.0);
  {
    EmaState ema = EmaState::start(start, 0.0, 0);
    ema_update(ema, scalar_model(3.0));
    CHECK(ema.shadow.layers()[0].weight(0, 0) == 3.0);
  }
  {
    EmaState ema = EmaState::start(start, 1.0, 0);
    ema_update(ema, scalar_model(3.0));
    CHECK(ema.shadow.layers()[0].weight(0, 0) == 1.0);
  }
  {
    EmaState ema = EmaState::start(start, 0.5, 0);
    ema_update(ema, scalar_model(3.0));
    ema_update(ema, scalar_model(5.0));
    // (1 + 3) / 2 = 2, then (2 + 5) / 2.
    CHECK(ema.shadow.layers()[0].weight(0, 0) == 3.5);
  }
  CHECK_THROWS_AS(EmaState::start(start, 1.5, 0), DomainError);
}

TEST_CASE("ema rejects a different architecture") {
  EmaState ema = EmaState::start(random_model(1), 0.9, 0);
  CHECK_THROWS_AS(ema_update(ema, random_model(1, {5, 3, 4})), DimensionError);
}
