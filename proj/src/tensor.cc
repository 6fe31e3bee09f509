// SPDX-License-Identifier: Apache-2.0
#include "srnn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "srnn/errors.hpp"

namespace srnn {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: buffer of " + std::to_string(data_.size()) +
                         " entries cannot hold " + shape_string());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Vector matvec(const Matrix& a, std::span<const double> v) {
  if (a.cols() != v.size()) {
    throw DimensionError("matvec: " + a.shape_string() + " x vector of " +
                         std::to_string(v.size()));
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * v[k];
    out[i] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> v) {
  Vector out(a.cols(), 0.0);
  matvec_transposed_accumulate(a, v, out);
  return out;
}

void matvec_transposed_accumulate(const Matrix& a, std::span<const double> v,
                                  std::span<double> out) {
  if (a.rows() != v.size() || a.cols() != out.size()) {
    throw DimensionError("matvec_transposed: " + a.shape_string() + "^T x vector of " +
                         std::to_string(v.size()) + " into " + std::to_string(out.size()));
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double vi = v[i];
    const auto row = a.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * vi;
  }
}

void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v) {
  if (a.rows() != u.size() || a.cols() != v.size()) {
    throw DimensionError("add_outer: " + a.shape_string() + " += " +
                         std::to_string(u.size()) + "x" + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double ui = u[i];
    auto row = a.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += ui * v[j];
  }
}

Matrix matrix_power(const Matrix& w, std::size_t e) {
  if (!w.square()) throw DimensionError("matrix_power: non-square " + w.shape_string());
  Matrix out = Matrix::identity(w.rows());
  for (std::size_t i = 0; i < e; ++i) out = matmul(out, w);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix map_sigmoid(const Matrix& a) {
  Matrix out = a;
  for (double& x : out.data()) x = sigmoid(x);
  return out;
}

Matrix map_tanh(const Matrix& a) {
  Matrix out = a;
  for (double& x : out.data()) x = std::tanh(x);
  return out;
}

Vector map_sigmoid(std::span<const double> v) {
  Vector out(v.begin(), v.end());
  for (double& x : out) x = sigmoid(x);
  return out;
}

Vector map_tanh(std::span<const double> v) {
  Vector out(v.begin(), v.end());
  for (double& x : out) x = std::tanh(x);
  return out;
}

Vector softmax(std::span<const double> v) {
  if (v.empty()) return {};
  const double peak = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector hadamard(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void add_into(std::span<double> acc, std::span<const double> v) {
  require_same_length(acc, v, "add_into");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "relative_error");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  return diff / std::max({max_abs(a), max_abs(b), 1.0});
}

}  // namespace srnn
