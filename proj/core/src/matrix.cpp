// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnanet/errors.hpp"

namespace rnanet {
namespace {

void require_finite(std::span<const double> values, const char* where) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string(where) + ": non-finite entry");
    }
  }
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  require_finite(std::span<const double>(&fill, 1), "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ConfigError("Matrix: " + std::to_string(values_.size()) + " values for shape " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  require_finite(values_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ConfigError("Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
  require_finite(values_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: inner dimensions differ (" + shape(a) + " x " + shape(b) + ")");
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ConfigError("matmul_transpose_b: column counts differ (" + shape(a) + ", " + shape(b) +
                      ")");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ConfigError("matmul_transpose_a: row counts differ (" + shape(a) + ", " + shape(b) + ")");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ConfigError("hconcat: row counts differ (" + shape(a) + ", " + shape(b) + ")");
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), dst.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Matrix column_block(const Matrix& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw ConfigError("column_block: range exceeds " + shape(a));
  Matrix out(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto src = a.row(i).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) throw ConfigError("gather_rows: index out of range");
    auto src = a.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix vstack(std::span<const Matrix> parts) {
  if (parts.empty()) return {};
  std::size_t rows = 0;
  const std::size_t cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ConfigError("vstack: column counts differ");
    rows += p.rows();
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& p : parts) values.insert(values.end(), p.values().begin(), p.values().end());
  return Matrix(rows, cols, std::move(values));
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Matrix solve(Matrix a, Matrix b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw ConfigError("solve: expected square system");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) < 1e-300) throw DegenerateInputError("solve: singular matrix");
    if (pivot != col) {
      std::swap_ranges(a.row(col).begin(), a.row(col).end(), a.row(pivot).begin());
      std::swap_ranges(b.row(col).begin(), b.row(col).end(), b.row(pivot).begin());
    }
    const double inv = 1.0 / a(col, col);
    for (double& v : a.row(col)) v *= inv;
    for (double& v : b.row(col)) v *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) a(r, c) -= f * a(col, c);
      for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
    }
  }
  return b;
}

}  // namespace rnanet
