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
#include <initializer_list>
#include <span>
#include <vector>

namespace faal {

// Row-major dense matrix of doubles. Every numeric quantity in the library
// (inputs, perturbations, activations, parameters, gradients) lives in one.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  void fill(double v);

  // Copies the listed rows, in order, into a new matrix.
  DenseMatrix gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b. Each output entry accumulates over k in increasing order.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// transpose(a) * b, same fixed accumulation order.
DenseMatrix matmul_transpose_a(const DenseMatrix& a, const DenseMatrix& b);
// a * transpose(b).
DenseMatrix matmul_transpose_b(const DenseMatrix& a, const DenseMatrix& b);

enum class ElementwiseKind { kRelu, kReluGrad, kExp, kLog, kSign, kClamp };

struct ElementwiseFn {
  ElementwiseKind kind;
  double lo = 0.0;
  double hi = 0.0;

  static ElementwiseFn relu() { return {ElementwiseKind::kRelu}; }
  // Derivative of relu evaluated at the entry: 1 for x > 0, else 0.
  static ElementwiseFn relu_grad() { return {ElementwiseKind::kReluGrad}; }
  static ElementwiseFn exp() { return {ElementwiseKind::kExp}; }
  static ElementwiseFn log() { return {ElementwiseKind::kLog}; }
  // sign(0) == 0.
  static ElementwiseFn sign() { return {ElementwiseKind::kSign}; }
  static ElementwiseFn clamp(double lo, double hi) {
    return {ElementwiseKind::kClamp, lo, hi};
  }
};

double apply(const ElementwiseFn& f, double x);
DenseMatrix map_elementwise(const DenseMatrix& m, const ElementwiseFn& f);

enum class Axis {
  kPerRow,     // one result per row (collapses columns): rows x 1
  kPerColumn,  // one result per column (collapses rows): 1 x cols
};
enum class ReduceOp { kSum, kMax, kArgmax };

// Argmax ties resolve to the lowest index; the index is stored as a double.
DenseMatrix reduce(const DenseMatrix& m, Axis axis, ReduceOp op);

// Lowest-index argmax of a nonempty span.
std::size_t argmax(std::span<const double> v);

// In-place helpers used by the layers.
void add_row_vector(DenseMatrix& m, const DenseMatrix& row_vec);
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);  // y += a*x
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace faal
