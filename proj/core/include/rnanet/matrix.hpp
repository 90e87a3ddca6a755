// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rnanet {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

/// a · b. Throws ConfigError when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ without materializing the transpose.
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);
/// aᵀ · b without materializing the transpose.
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// [a ‖ b] along columns; row counts must agree.
Matrix hconcat(const Matrix& a, const Matrix& b);
/// Columns [begin, begin + count) of a.
Matrix column_block(const Matrix& a, std::size_t begin, std::size_t count);
/// Rows of a picked by index, in the given order.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);
/// Stacks matrices with equal column counts on top of each other.
Matrix vstack(std::span<const Matrix> parts);

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// Solves a · x = b for square a by Gauss-Jordan elimination with partial
/// pivoting. Throws DegenerateInputError when a is numerically singular.
Matrix solve(Matrix a, Matrix b);

}  // namespace rnanet
