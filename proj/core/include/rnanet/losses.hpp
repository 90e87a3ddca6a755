// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnanet/matrix.hpp"

namespace rnanet {

enum class Modality { visual, audio };

std::string_view to_string(Modality m);

/// Encoded features of one modality, one row per sample.
struct FeatureBatch {
  Matrix features;
  Modality modality = Modality::visual;
  std::optional<std::string> domain;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

/// Loss value and its gradient with respect to both feature batches.
struct LossResult {
  double value = 0.0;
  Matrix grad_visual;
  Matrix grad_audio;
};

struct UdaLossResult {
  LossResult source;
  LossResult target;

  double total() const { return source.value + target.value; }
};

/// Mean feature norms of the two modalities and how they compare.
struct NormStats {
  double mean_norm_visual = 0.0;
  double mean_norm_audio = 0.0;
  double delta = 0.0;  // mean_norm_visual - mean_norm_audio
  double rho = 0.0;    // mean_norm_visual / mean_norm_audio
};

struct DotDecomposition {
  double dot = 0.0;
  double norm_v = 0.0;
  double norm_a = 0.0;
  std::optional<double> cos_theta;  // empty when either vector is zero
};

/// L2 norm of every row.
std::vector<double> feature_norms(const FeatureBatch& batch);
std::vector<double> row_norms(const Matrix& m);

NormStats norm_stats(const FeatureBatch& visual, const FeatureBatch& audio);

/// Relative norm alignment: (rho - 1)^2 with rho the ratio of summed visual
/// to summed audio feature norms. Zero-norm rows receive zero gradient.
LossResult rna_loss(const FeatureBatch& visual, const FeatureBatch& audio);

/// Source and target alignment terms, each computed on its own domain only.
UdaLossResult rna_loss_uda(const FeatureBatch& source_visual, const FeatureBatch& source_audio,
                           const FeatureBatch& target_visual, const FeatureBatch& target_audio);

/// Mean over paired rows of 1 - cos(theta_i).
LossResult cosine_alignment_loss(const FeatureBatch& visual, const FeatureBatch& audio);

/// Mean over paired rows of cos(theta_i)^2.
LossResult orthogonality_loss(const FeatureBatch& visual, const FeatureBatch& audio);

/// Hard norm alignment: (mean_v - R)^2 + (mean_a - R)^2.
LossResult hna_loss(const FeatureBatch& visual, const FeatureBatch& audio, double target_norm);

DotDecomposition dot_product_decomposition(std::span<const double> v, std::span<const double> a);

/// Fraction of the total squared feature mass carried by the k feature
/// dimensions with the largest squared mass. k is clamped to the width.
double top_k_norm_share(const Matrix& features, std::size_t k);

}  // namespace rnanet
