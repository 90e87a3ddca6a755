// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rnanet/matrix.hpp"

namespace rnanet {

/// Fully connected layer y = x · Wᵀ + b, weight stored out × in.
struct LinearLayerParams {
  Matrix weight;
  std::vector<double> bias;

  LinearLayerParams() = default;
  LinearLayerParams(Matrix w, std::vector<double> b);
  /// Zero-initialized layer.
  LinearLayerParams(std::size_t in, std::size_t out);

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }

  friend bool operator==(const LinearLayerParams&, const LinearLayerParams&) = default;
};

/// Input remembered by linear_forward for the matching backward call.
struct LinearCache {
  Matrix input;
  std::size_t in = 0;
  std::size_t out = 0;
  bool valid = false;
};

/// Gradients of a linear layer are shaped like the layer itself.
struct LinearGrads {
  LinearLayerParams params;
  Matrix input;
};

Matrix linear_forward(const LinearLayerParams& params, const Matrix& input,
                      LinearCache* cache = nullptr);

/// Consumes the cache; a second backward on the same cache is rejected as
/// stale.
LinearGrads linear_backward(const LinearLayerParams& params, LinearCache& cache,
                            const Matrix& grad_output);

struct ReluCache {
  Matrix input;
  bool valid = false;
};

Matrix relu_forward(const Matrix& input, ReluCache* cache = nullptr);
/// Subgradient at exactly zero is zero.
Matrix relu_backward(ReluCache& cache, const Matrix& grad_output);

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix grad_logits;
};

/// Batch-mean cross-entropy of row-wise softmax against class indices.
CrossEntropyResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Row-wise softmax, max-subtracted.
Matrix softmax_rows(const Matrix& logits);

/// Index of the largest entry in each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace rnanet
