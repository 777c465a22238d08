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

#include "faal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "faal/errors.hpp"

namespace faal {
namespace {

std::string shape_str(const DenseMatrix& m) {
  return fmt::format("{}x{}", m.rows(), m.cols());
}

void require_finite(const DenseMatrix& m, const char* op) {
  if (!m.all_finite()) {
    throw DomainError(fmt::format("{}: produced a non-finite entry", op));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError(fmt::format("DenseMatrix: {} values for {}x{}",
                                     data_.size(), rows, cols));
  }
}

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t c = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * c);
  for (const auto& r : rows) {
    if (r.size() != c) throw DimensionError("from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return DenseMatrix(n, c, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

DenseMatrix DenseMatrix::gather_rows(
    std::span<const std::size_t> indices) const {
  DenseMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw DimensionError("gather_rows: index range");
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError(
        fmt::format("matmul: {} * {}", shape_str(a), shape_str(b)));
  }
  DenseMatrix out(a.rows(), b.cols());
  // i-k-j order: for a fixed output entry the k terms are still added in
  // increasing k, so the result matches the textbook triple loop bit for bit.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  require_finite(out, "matmul");
  return out;
}

DenseMatrix matmul_transpose_a(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError(
        fmt::format("matmul_transpose_a: {}^T * {}", shape_str(a),
                    shape_str(b)));
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto a_row = a.row(k);
    const auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  require_finite(out, "matmul_transpose_a");
  return out;
}

DenseMatrix matmul_transpose_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError(
        fmt::format("matmul_transpose_b: {} * {}^T", shape_str(a),
                    shape_str(b)));
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto b_row = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  require_finite(out, "matmul_transpose_b");
  return out;
}

double apply(const ElementwiseFn& f, double x) {
  switch (f.kind) {
    case ElementwiseKind::kRelu:
      return x > 0.0 ? x : 0.0;
    case ElementwiseKind::kReluGrad:
      return x > 0.0 ? 1.0 : 0.0;
    case ElementwiseKind::kExp:
      return std::exp(x);
    case ElementwiseKind::kLog:
      if (!(x > 0.0)) {
        throw DomainError(fmt::format("log of non-positive entry {}", x));
      }
      return std::log(x);
    case ElementwiseKind::kSign:
      return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case ElementwiseKind::kClamp:
      return std::min(std::max(x, f.lo), f.hi);
  }
  return x;
}

DenseMatrix map_elementwise(const DenseMatrix& m, const ElementwiseFn& f) {
  if (f.kind == ElementwiseKind::kClamp && f.lo > f.hi) {
    throw DomainError("clamp: lo > hi");
  }
  DenseMatrix out = m;
  for (auto& v : out.values()) v = apply(f, v);
  require_finite(out, "map_elementwise");
  return out;
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw DomainError("argmax of empty span");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

DenseMatrix reduce(const DenseMatrix& m, Axis axis, ReduceOp op) {
  const bool per_row = axis == Axis::kPerRow;
  const std::size_t outer = per_row ? m.rows() : m.cols();
  const std::size_t inner = per_row ? m.cols() : m.rows();
  if (inner == 0) throw DomainError("reduce: empty axis");
  DenseMatrix out = per_row ? DenseMatrix(outer, 1) : DenseMatrix(1, outer);
  for (std::size_t o = 0; o < outer; ++o) {
    auto at = [&](std::size_t i) { return per_row ? m(o, i) : m(i, o); };
    double result = at(0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < inner; ++i) {
      const double v = at(i);
      switch (op) {
        case ReduceOp::kSum:
          result += v;
          break;
        case ReduceOp::kMax:
          result = std::max(result, v);
          break;
        case ReduceOp::kArgmax:
          if (v > at(best)) best = i;
          break;
      }
    }
    out.values()[o] =
        op == ReduceOp::kArgmax ? static_cast<double>(best) : result;
  }
  return out;
}

void add_row_vector(DenseMatrix& m, const DenseMatrix& row_vec) {
  if (row_vec.rows() != 1 || row_vec.cols() != m.cols()) {
    throw DimensionError(fmt::format("add_row_vector: {} + {}", shape_str(m),
                                     shape_str(row_vec)));
  }
  const auto b = row_vec.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
}

void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y) {
  if (!x.same_shape(y)) {
    throw DimensionError(
        fmt::format("axpy: {} vs {}", shape_str(x), shape_str(y)));
  }
  const auto xs = x.values();
  auto ys = y.values();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += alpha * xs[i];
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(
        fmt::format("hadamard: {} vs {}", shape_str(a), shape_str(b)));
  }
  DenseMatrix out = a;
  const auto bs = b.values();
  auto os = out.values();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] *= bs[i];
  return out;
}

}  // namespace faal
