// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices and vectors of doubles. Shapes are explicit and
// never broadcast; every mismatch throws DimensionError.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace srnn {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  /// "RxC", used in error messages.
  std::string shape_string() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// a · v
Vector matvec(const Matrix& a, std::span<const double> v);
/// aᵀ · v
Vector matvec_transposed(const Matrix& a, std::span<const double> v);
/// out += aᵀ · v
void matvec_transposed_accumulate(const Matrix& a, std::span<const double> v,
                                  std::span<double> out);
/// a += u vᵀ
void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v);

/// w multiplied by itself e times; e = 0 gives the identity.
Matrix matrix_power(const Matrix& w, std::size_t e);

double sigmoid(double x);

Matrix map_sigmoid(const Matrix& a);
Matrix map_tanh(const Matrix& a);
Vector map_sigmoid(std::span<const double> v);
Vector map_tanh(std::span<const double> v);

/// Max-subtracted softmax.
Vector softmax(std::span<const double> v);

Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector hadamard(std::span<const double> a, std::span<const double> b);
void add_into(std::span<double> acc, std::span<const double> v);

double max_abs(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// ‖a−b‖∞ / max(‖a‖∞, ‖b‖∞, 1)
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace srnn
