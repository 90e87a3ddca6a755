// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rnanet/errors.hpp"

namespace rnanet {
namespace {

void require_paired(const FeatureBatch& visual, const FeatureBatch& audio, const char* op) {
  if (visual.size() == 0 || audio.size() == 0) {
    throw ConfigError(std::string(op) + ": empty feature batch");
  }
  if (visual.size() != audio.size()) {
    throw ConfigError(std::string(op) + ": visual has " + std::to_string(visual.size()) +
                      " rows, audio has " + std::to_string(audio.size()));
  }
}

void require_same_width(const FeatureBatch& visual, const FeatureBatch& audio, const char* op) {
  if (visual.dim() != audio.dim()) {
    throw ConfigError(std::string(op) + ": feature widths differ (" + std::to_string(visual.dim()) +
                      " vs " + std::to_string(audio.dim()) + ")");
  }
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Writes coeff_i * row_i / ||row_i|| into grad, i.e. the chain rule through
// per-row norms given dL/dh_i = coeff_i. Zero rows stay zero.
Matrix grad_through_norms(const Matrix& features, const std::vector<double>& norms,
                          const std::function<double(std::size_t)>& coeff) {
  Matrix grad(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    if (norms[i] == 0.0) continue;
    const double scale = coeff(i) / norms[i];
    auto src = features.row(i);
    auto dst = grad.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = scale * src[j];
  }
  return grad;
}

// Shared path for the two cosine-based losses. `outer` maps cos_i to the
// per-row loss and `outer_grad` gives its derivative with respect to cos_i.
LossResult cosine_family(const FeatureBatch& visual, const FeatureBatch& audio, const char* op,
                         double (*outer)(double), double (*outer_grad)(double)) {
  require_paired(visual, audio, op);
  require_same_width(visual, audio, op);
  const std::size_t n = visual.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossResult res;
  res.grad_visual = Matrix(n, visual.dim());
  res.grad_audio = Matrix(n, audio.dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto v = visual.features.row(i);
    auto a = audio.features.row(i);
    const double nv = l2_norm(v);
    const double na = l2_norm(a);
    if (nv == 0.0 || na == 0.0) {
      throw DegenerateInputError(std::string(op) + ": zero-norm feature row " + std::to_string(i) +
                                 " (cosine undefined)");
    }
    const double c = dot(v, a) / (nv * na);
    res.value += outer(c) * inv_n;
    const double g = outer_grad(c) * inv_n;
    // d cos / d v = a / (|v||a|) - cos * v / |v|^2, symmetrically for a.
    auto gv = res.grad_visual.row(i);
    auto ga = res.grad_audio.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) {
      gv[j] = g * (a[j] / (nv * na) - c * v[j] / (nv * nv));
      ga[j] = g * (v[j] / (nv * na) - c * a[j] / (na * na));
    }
  }
  return res;
}

}  // namespace

std::string_view to_string(Modality m) { return m == Modality::visual ? "visual" : "audio"; }

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = l2_norm(m.row(i));
  return out;
}

std::vector<double> feature_norms(const FeatureBatch& batch) { return row_norms(batch.features); }

NormStats norm_stats(const FeatureBatch& visual, const FeatureBatch& audio) {
  require_paired(visual, audio, "norm_stats");
  const double n = static_cast<double>(visual.size());
  NormStats s;
  s.mean_norm_visual = sum(feature_norms(visual)) / n;
  s.mean_norm_audio = sum(feature_norms(audio)) / n;
  if (s.mean_norm_audio == 0.0) {
    throw DegenerateInputError("norm_stats: mean audio feature norm is zero (ratio undefined)");
  }
  s.delta = s.mean_norm_visual - s.mean_norm_audio;
  s.rho = s.mean_norm_visual / s.mean_norm_audio;
  return s;
}

LossResult rna_loss(const FeatureBatch& visual, const FeatureBatch& audio) {
  require_paired(visual, audio, "rna_loss");
  const auto hv = feature_norms(visual);
  const auto ha = feature_norms(audio);
  const double sv = sum(hv);
  const double sa = sum(ha);
  if (sa == 0.0) {
    throw DegenerateInputError("rna_loss: audio feature norms sum to zero (ratio undefined)");
  }
  const double rho = sv / sa;
  LossResult res;
  res.value = (rho - 1.0) * (rho - 1.0);
  // dL/dh_v_i = 2 (rho - 1) / S_a ;  dL/dh_a_i = -2 (rho - 1) rho / S_a
  const double gv = 2.0 * (rho - 1.0) / sa;
  const double ga = -gv * rho;
  res.grad_visual = grad_through_norms(visual.features, hv, [gv](std::size_t) { return gv; });
  res.grad_audio = grad_through_norms(audio.features, ha, [ga](std::size_t) { return ga; });
  return res;
}

UdaLossResult rna_loss_uda(const FeatureBatch& source_visual, const FeatureBatch& source_audio,
                           const FeatureBatch& target_visual, const FeatureBatch& target_audio) {
  UdaLossResult res;
  try {
    res.source = rna_loss(source_visual, source_audio);
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(std::string("source domain: ") + e.what());
  }
  try {
    res.target = rna_loss(target_visual, target_audio);
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(std::string("target domain: ") + e.what());
  }
  return res;
}

LossResult cosine_alignment_loss(const FeatureBatch& visual, const FeatureBatch& audio) {
  return cosine_family(
      visual, audio, "cosine_alignment_loss", [](double c) { return 1.0 - c; },
      [](double) { return -1.0; });
}

LossResult orthogonality_loss(const FeatureBatch& visual, const FeatureBatch& audio) {
  return cosine_family(
      visual, audio, "orthogonality_loss", [](double c) { return c * c; },
      [](double c) { return 2.0 * c; });
}

LossResult hna_loss(const FeatureBatch& visual, const FeatureBatch& audio, double target_norm) {
  if (!(target_norm > 0.0) || !std::isfinite(target_norm)) {
    throw ConfigError("hna_loss: target norm R must be positive, got " + std::to_string(target_norm));
  }
  require_paired(visual, audio, "hna_loss");
  const double n = static_cast<double>(visual.size());
  const auto hv = feature_norms(visual);
  const auto ha = feature_norms(audio);
  const double mv = sum(hv) / n;
  const double ma = sum(ha) / n;
  LossResult res;
  res.value = (mv - target_norm) * (mv - target_norm) + (ma - target_norm) * (ma - target_norm);
  const double gv = 2.0 * (mv - target_norm) / n;
  const double ga = 2.0 * (ma - target_norm) / n;
  res.grad_visual = grad_through_norms(visual.features, hv, [gv](std::size_t) { return gv; });
  res.grad_audio = grad_through_norms(audio.features, ha, [ga](std::size_t) { return ga; });
  return res;
}

DotDecomposition dot_product_decomposition(std::span<const double> v, std::span<const double> a) {
  DotDecomposition d;
  d.dot = dot(v, a);
  d.norm_v = l2_norm(v);
  d.norm_a = l2_norm(a);
  if (d.norm_v > 0.0 && d.norm_a > 0.0) {
    d.cos_theta = std::clamp(d.dot / (d.norm_v * d.norm_a), -1.0, 1.0);
  }
  return d;
}

double top_k_norm_share(const Matrix& features, std::size_t k) {
  std::vector<double> mass(features.cols(), 0.0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto row = features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) mass[j] += row[j] * row[j];
  }
  const double total = sum(mass);
  if (total == 0.0) return 0.0;
  if (k >= mass.size()) return 1.0;
  std::sort(mass.begin(), mass.end(), std::greater<>());
  const double top = std::accumulate(mass.begin(), mass.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return top / total;
}

}  // namespace rnanet
