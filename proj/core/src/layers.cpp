// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnanet/errors.hpp"

namespace rnanet {

LinearLayerParams::LinearLayerParams(Matrix w, std::vector<double> b)
    : weight(std::move(w)), bias(std::move(b)) {
  if (bias.size() != weight.rows()) {
    throw ConfigError("LinearLayerParams: bias length " + std::to_string(bias.size()) +
                      " does not match output width " + std::to_string(weight.rows()));
  }
}

LinearLayerParams::LinearLayerParams(std::size_t in, std::size_t out)
    : weight(out, in), bias(out, 0.0) {}

Matrix linear_forward(const LinearLayerParams& params, const Matrix& input, LinearCache* cache) {
  if (input.cols() != params.in()) {
    throw ConfigError("linear_forward: input width " + std::to_string(input.cols()) +
                      ", layer expects " + std::to_string(params.in()));
  }
  Matrix out = matmul_transpose_b(input, params.weight);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += params.bias[j];
  }
  if (cache != nullptr) {
    cache->input = input;
    cache->in = params.in();
    cache->out = params.out();
    cache->valid = true;
  }
  return out;
}

LinearGrads linear_backward(const LinearLayerParams& params, LinearCache& cache,
                            const Matrix& grad_output) {
  if (!cache.valid) throw ConfigError("linear_backward: stale or empty cache");
  if (cache.in != params.in() || cache.out != params.out()) {
    throw ConfigError("linear_backward: cache was produced by a layer of a different shape");
  }
  if (grad_output.rows() != cache.input.rows() || grad_output.cols() != params.out()) {
    throw ConfigError("linear_backward: grad_output shape does not match forward output");
  }
  LinearGrads g;
  g.params.weight = matmul_transpose_a(grad_output, cache.input);
  g.params.bias.assign(params.out(), 0.0);
  for (std::size_t r = 0; r < grad_output.rows(); ++r) {
    auto row = grad_output.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) g.params.bias[j] += row[j];
  }
  g.input = matmul(grad_output, params.weight);
  cache.valid = false;
  return g;
}

Matrix relu_forward(const Matrix& input, ReluCache* cache) {
  Matrix out = input;
  for (double& v : out.values()) v = std::max(v, 0.0);
  if (cache != nullptr) {
    cache->input = input;
    cache->valid = true;
  }
  return out;
}

Matrix relu_backward(ReluCache& cache, const Matrix& grad_output) {
  if (!cache.valid) throw ConfigError("relu_backward: stale or empty cache");
  if (grad_output.rows() != cache.input.rows() || grad_output.cols() != cache.input.cols()) {
    throw ConfigError("relu_backward: grad_output shape does not match forward input");
  }
  Matrix g = grad_output;
  auto in = cache.input.values();
  auto out = g.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(in[i] > 0.0)) out[i] = 0.0;
  }
  cache.valid = false;
  return g;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp(v - m);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return p;
}

CrossEntropyResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  if (labels.size() != n) {
    throw ConfigError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(n) + " rows");
  }
  if (n == 0) throw ConfigError("softmax_cross_entropy: empty batch");
  CrossEntropyResult res;
  res.grad_logits = Matrix(n, c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ConfigError("softmax_cross_entropy: label " + std::to_string(y) +
                        " outside [0, " + std::to_string(c) + ")");
    }
    auto row = logits.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    const double log_z = std::log(z) + m;
    res.loss += (log_z - row[static_cast<std::size_t>(y)]) * inv_n;
    auto g = res.grad_logits.row(r);
    for (std::size_t j = 0; j < c; ++j) g[j] = std::exp(row[j] - log_z) * inv_n;
    g[static_cast<std::size_t>(y)] -= inv_n;
  }
  return res;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    // max_element returns the first maximum, which is the tie rule we want.
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace rnanet
