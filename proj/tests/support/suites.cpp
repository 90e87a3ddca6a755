// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>

#include "rnanet/gradcheck.hpp"
#include "rnanet/layers.hpp"
#include "rnanet/model.hpp"

namespace rnanet::testing {
namespace {

std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

std::vector<double> flatten(std::initializer_list<const Matrix*> parts) {
  std::vector<double> out;
  for (const Matrix* m : parts) out.insert(out.end(), m->values().begin(), m->values().end());
  return out;
}

// Splits x back into matrices shaped like `shapes`.
std::vector<Matrix> unflatten(std::span<const double> x, const std::vector<const Matrix*>& shapes) {
  std::vector<Matrix> out;
  std::size_t off = 0;
  for (const Matrix* s : shapes) {
    std::vector<double> v(x.begin() + off, x.begin() + off + s->size());
    off += s->size();
    out.emplace_back(s->rows(), s->cols(), std::move(v));
  }
  return out;
}

// Runs `instances` trials of `trial`, keeping the worst error.
CheckResult sweep(std::string name, std::size_t instances, const std::function<double()>& trial) {
  CheckResult r{std::move(name), 0, 0.0, false};
  try {
    for (std::size_t i = 0; i < instances; ++i) {
      const double e = trial();
      r.worst = std::isnan(e) ? INFINITY : std::max(r.worst, e);
      ++r.instances;
    }
  } catch (const std::exception&) {
    r.failed_to_run = true;
  }
  return r;
}

using PairLoss = std::function<LossResult(const FeatureBatch&, const FeatureBatch&)>;

double pair_loss_trial(const PairLoss& loss, std::mt19937_64& rng) {
  const std::size_t n = uniform_size(rng, 1, 8);
  const std::size_t d = uniform_size(rng, 2, 16);
  const Matrix v = random_matrix(n, d, rng);
  const Matrix a = random_matrix(n, d, rng, uniform(rng, 0.5, 10.0));
  const LossResult res = loss(visual_batch(v), audio_batch(a));
  const std::vector<const Matrix*> shapes{&v, &a};
  auto f = [&](std::span<const double> x) {
    auto m = unflatten(x, shapes);
    return loss(visual_batch(m[0]), audio_batch(m[1])).value;
  };
  return relative_error(flatten({&res.grad_visual, &res.grad_audio}),
                        finite_difference_grad(f, flatten({&v, &a})));
}

double uda_trial(std::mt19937_64& rng) {
  const std::size_t ns = uniform_size(rng, 1, 8);
  const std::size_t nt = uniform_size(rng, 1, 8);
  const std::size_t d = uniform_size(rng, 2, 16);
  const Matrix sv = random_matrix(ns, d, rng);
  const Matrix sa = random_matrix(ns, d, rng, 5.0);
  const Matrix tv = random_matrix(nt, d, rng);
  const Matrix ta = random_matrix(nt, d, rng, 3.0);
  const auto res = rna_loss_uda(visual_batch(sv), audio_batch(sa), visual_batch(tv), audio_batch(ta));
  const std::vector<const Matrix*> shapes{&sv, &sa, &tv, &ta};
  auto f = [&](std::span<const double> x) {
    auto m = unflatten(x, shapes);
    return rna_loss_uda(visual_batch(m[0]), audio_batch(m[1]), visual_batch(m[2]), audio_batch(m[3]))
        .total();
  };
  return relative_error(flatten({&res.source.grad_visual, &res.source.grad_audio,
                                 &res.target.grad_visual, &res.target.grad_audio}),
                        finite_difference_grad(f, flatten({&sv, &sa, &tv, &ta})));
}

double cross_entropy_trial(std::mt19937_64& rng) {
  const std::size_t n = uniform_size(rng, 1, 8);
  const std::size_t c = uniform_size(rng, 2, 16);
  const Matrix logits = random_matrix(n, c, rng, 3.0);
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(uniform_size(rng, 0, c - 1));
  const auto res = softmax_cross_entropy(logits, labels);
  auto f = [&](std::span<const double> x) {
    return softmax_cross_entropy(Matrix(n, c, std::vector<double>(x.begin(), x.end())), labels).loss;
  };
  return relative_error(res.grad_logits.values(), finite_difference_grad(f, logits.values()));
}

// Scalar probe sum(G .* layer(x)) so every output coordinate contributes.
double probe(const Matrix& out, const Matrix& g) { return dot(out.values(), g.values()); }

double linear_trial(std::mt19937_64& rng) {
  const std::size_t n = uniform_size(rng, 1, 8);
  const std::size_t in = uniform_size(rng, 1, 16);
  const std::size_t out = uniform_size(rng, 1, 16);
  const Matrix w = random_matrix(out, in, rng);
  const Matrix b = random_matrix(1, out, rng);
  const Matrix x = random_matrix(n, in, rng);
  const Matrix g = random_matrix(n, out, rng);
  auto params = [](const Matrix& w, const Matrix& b) {
    return LinearLayerParams(w, std::vector<double>(b.values().begin(), b.values().end()));
  };
  LinearCache cache;
  const LinearLayerParams p = params(w, b);
  linear_forward(p, x, &cache);
  const LinearGrads grads = linear_backward(p, cache, g);
  const Matrix gb(1, out, grads.params.bias);
  const std::vector<const Matrix*> shapes{&w, &b, &x};
  auto f = [&](std::span<const double> v) {
    auto m = unflatten(v, shapes);
    return probe(linear_forward(params(m[0], m[1]), m[2]), g);
  };
  return relative_error(flatten({&grads.params.weight, &gb, &grads.input}),
                        finite_difference_grad(f, flatten({&w, &b, &x})));
}

double relu_trial(std::mt19937_64& rng) {
  const std::size_t n = uniform_size(rng, 1, 8);
  const std::size_t d = uniform_size(rng, 1, 16);
  Matrix x = random_matrix(n, d, rng);
  // Stay clear of the kink where central differences straddle 0.
  for (double& v : x.values()) v += v >= 0 ? 0.1 : -0.1;
  const Matrix g = random_matrix(n, d, rng);
  ReluCache cache;
  relu_forward(x, &cache);
  const Matrix gx = relu_backward(cache, g);
  auto f = [&](std::span<const double> v) {
    return probe(relu_forward(Matrix(n, d, std::vector<double>(v.begin(), v.end()))), g);
  };
  return relative_error(gx.values(), finite_difference_grad(f, x.values()));
}

std::vector<double> flat_params(const ParameterSet& p) {
  std::vector<double> out;
  for (auto s : parameter_spans(p)) out.insert(out.end(), s.begin(), s.end());
  return out;
}

void assign_params(ParameterSet& p, std::span<const double> x) {
  std::size_t off = 0;
  for (auto s : parameter_spans(p)) {
    std::copy_n(x.begin() + off, s.size(), s.begin());
    off += s.size();
  }
}

// Cross-entropy on fused logits plus lambda * RNA on the features.
double model_trial(std::mt19937_64& rng, FusionMode fusion, bool batchnorm) {
  ModelConfig cfg;
  cfg.visual_input = uniform_size(rng, 2, 8);
  cfg.audio_input = uniform_size(rng, 2, 8);
  cfg.hidden = uniform_size(rng, 2, 16);
  cfg.feature_dim = uniform_size(rng, 2, 8);
  cfg.num_classes = uniform_size(rng, 2, 5);
  cfg.encoder_layers = uniform_size(rng, 1, 2);
  cfg.fusion = fusion;
  cfg.batchnorm = batchnorm;
  const std::size_t n = uniform_size(rng, batchnorm ? 2 : 1, 8);
  TwoStreamModel model = init_model(cfg, rng());
  // Perturb biases and batchnorm parameters away from their init values.
  for (auto s : parameter_spans(model.params)) {
    for (double& v : s) v += 0.1 * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  const Matrix xv = random_matrix(n, cfg.visual_input, rng);
  const Matrix xa = random_matrix(n, cfg.audio_input, rng, 4.0);
  std::vector<int> y(n);
  for (int& c : y) c = static_cast<int>(uniform_size(rng, 0, cfg.num_classes - 1));
  const double lambda = 0.7;

  auto loss_of = [&](TwoStreamModel m, ForwardCache* cache, LossResult* aux) {
    const ModelOutput out = forward(m, xv, xa, NormMode::train, cache);
    const LossResult r = rna_loss(out.features_visual, out.features_audio);
    if (aux) *aux = r;
    return softmax_cross_entropy(out.fused, y).loss + lambda * r.value;
  };

  TwoStreamModel work = model;
  ForwardCache cache;
  LossResult aux;
  const ModelOutput out = forward(work, xv, xa, NormMode::train, &cache);
  aux = rna_loss(out.features_visual, out.features_audio);
  const auto ce = softmax_cross_entropy(out.fused, y);
  const Matrix gv = aux.grad_visual * lambda;
  const Matrix ga = aux.grad_audio * lambda;
  const GradientBundle grads = backward(work, cache, ce.grad_logits, &gv, &ga);

  auto f = [&](std::span<const double> x) {
    TwoStreamModel m = model;
    assign_params(m.params, x);
    return loss_of(std::move(m), nullptr, nullptr);
  };
  return relative_error(flat_params(grads), finite_difference_grad(f, flat_params(model.params)));
}

}  // namespace

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

Matrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v = random_vector(n, rng);
    // Two Gram-Schmidt passes keep the basis orthogonal to rounding.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double c = dot(v, q.row(j));
        for (std::size_t k = 0; k < n; ++k) v[k] -= c * q(j, k);
      }
    }
    const double norm = l2_norm(v);
    for (std::size_t k = 0; k < n; ++k) q(i, k) = v[k] / norm;
  }
  return q;
}

FeatureBatch visual_batch(Matrix m) { return FeatureBatch{std::move(m), Modality::visual, std::nullopt}; }
FeatureBatch audio_batch(Matrix m) { return FeatureBatch{std::move(m), Modality::audio, std::nullopt}; }

std::vector<CheckResult> gradient_oracle_suite(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  out.push_back(sweep("rna", instances, [&] { return pair_loss_trial(rna_loss, rng); }));
  out.push_back(sweep("rna-uda", instances, [&] { return uda_trial(rng); }));
  out.push_back(sweep("cosine-align", instances,
                      [&] { return pair_loss_trial(cosine_alignment_loss, rng); }));
  out.push_back(sweep("orthogonality", instances,
                      [&] { return pair_loss_trial(orthogonality_loss, rng); }));
  out.push_back(sweep("hna", instances, [&] {
    const double r = uniform(rng, 0.5, 5.0);
    return pair_loss_trial([r](const FeatureBatch& v, const FeatureBatch& a) { return hna_loss(v, a, r); },
                           rng);
  }));
  out.push_back(sweep("cross-entropy", instances, [&] { return cross_entropy_trial(rng); }));
  out.push_back(sweep("linear", instances, [&] { return linear_trial(rng); }));
  out.push_back(sweep("relu", instances, [&] { return relu_trial(rng); }));
  out.push_back(sweep("model-late", instances, [&] { return model_trial(rng, FusionMode::late, false); }));
  out.push_back(sweep("model-mid", instances, [&] { return model_trial(rng, FusionMode::mid, false); }));
  out.push_back(sweep("model-late-batchnorm", instances,
                      [&] { return model_trial(rng, FusionMode::late, true); }));
  out.push_back(sweep("model-mid-batchnorm", instances,
                      [&] { return model_trial(rng, FusionMode::mid, true); }));
  return out;
}

std::vector<CheckResult> invariance_suite(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  auto rotate = [](const Matrix& m, const Matrix& q) { return matmul_transpose_b(m, q); };
  auto rescale_rows = [&](Matrix m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double s = std::exp(uniform(rng, -2.0, 2.0));
      for (double& v : m.row(r)) v *= s;
    }
    return m;
  };
  auto random_pair = [&](double audio_scale) {
    const std::size_t n = uniform_size(rng, 1, 8);
    const std::size_t d = uniform_size(rng, 2, 16);
    return std::pair{random_matrix(n, d, rng), random_matrix(n, d, rng, audio_scale)};
  };

  std::vector<CheckResult> out;
  out.push_back(sweep("rna-orthogonal", instances, [&] {
    auto [v, a] = random_pair(uniform(rng, 0.5, 10.0));
    const Matrix qv = random_orthogonal(v.cols(), rng);
    const Matrix qa = random_orthogonal(a.cols(), rng);
    return std::abs(rna_loss(visual_batch(v), audio_batch(a)).value -
                    rna_loss(visual_batch(rotate(v, qv)), audio_batch(rotate(a, qa))).value);
  }));
  out.push_back(sweep("hna-orthogonal", instances, [&] {
    auto [v, a] = random_pair(uniform(rng, 0.5, 3.0));
    const double r = uniform(rng, 0.5, 5.0);
    const Matrix qv = random_orthogonal(v.cols(), rng);
    const Matrix qa = random_orthogonal(a.cols(), rng);
    return std::abs(hna_loss(visual_batch(v), audio_batch(a), r).value -
                    hna_loss(visual_batch(rotate(v, qv)), audio_batch(rotate(a, qa)), r).value);
  }));
  out.push_back(sweep("cosine-align-scale", instances, [&] {
    auto [v, a] = random_pair(1.0);
    return std::abs(cosine_alignment_loss(visual_batch(v), audio_batch(a)).value -
                    cosine_alignment_loss(visual_batch(rescale_rows(v)), audio_batch(rescale_rows(a))).value);
  }));
  out.push_back(sweep("orthogonality-scale", instances, [&] {
    auto [v, a] = random_pair(1.0);
    return std::abs(orthogonality_loss(visual_batch(v), audio_batch(a)).value -
                    orthogonality_loss(visual_batch(rescale_rows(v)), audio_batch(rescale_rows(a))).value);
  }));
  out.push_back(sweep("dot-identity", instances, [&] {
    const std::size_t d = uniform_size(rng, 1, 16);
    const auto v = random_vector(d, rng);
    const auto a = random_vector(d, rng);
    const auto dd = dot_product_decomposition(v, a);
    return std::abs(dd.dot - dd.norm_v * dd.norm_a * dd.cos_theta.value());
  }));
  return out;
}

}  // namespace rnanet::testing
