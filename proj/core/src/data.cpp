// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rnanet/errors.hpp"

namespace rnanet {
namespace {

std::vector<double> gaussian_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

// Radius-`scale` point drawn uniformly on the sphere.
std::vector<double> sphere_point(std::size_t n, double scale, std::mt19937_64& rng) {
  auto v = gaussian_vector(n, rng);
  const double norm = l2_norm(v);
  for (double& x : v) x *= scale / norm;
  return v;
}

struct DomainShift {
  Matrix rotation;
  std::vector<double> offset;
};

DomainShift draw_shift(std::size_t dim, double strength, const BenchmarkSpec& spec,
                       std::mt19937_64& rng) {
  DomainShift s;
  s.rotation = random_rotation(dim, strength, rng());
  s.offset = gaussian_vector(dim, rng);
  const double scale = strength * spec.prototype_scale / std::sqrt(double(dim));
  for (double& x : s.offset) x *= scale;
  return s;
}

// Q mu + b + noise, times `gain`.
void write_sample(std::span<double> dst, const DomainShift& shift, std::span<const double> proto,
                  double sigma, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < dst.size(); ++j) {
    const double mean = dot(shift.rotation.row(j), proto) + shift.offset[j];
    dst[j] = gain * (mean + sigma * normal(rng));
  }
}

}  // namespace

void MultiModalBatch::validate() const {
  if (visual.rows() != audio.rows()) {
    throw ConfigError("MultiModalBatch: visual has " + std::to_string(visual.rows()) +
                      " rows, audio has " + std::to_string(audio.rows()));
  }
  if (labels && labels->size() != visual.rows()) {
    throw ConfigError("MultiModalBatch: " + std::to_string(labels->size()) + " labels for " +
                      std::to_string(visual.rows()) + " samples");
  }
}

const std::vector<int>& MultiModalBatch::require_labels() const {
  if (!labels) {
    throw ConfigError("batch of domain " + std::to_string(domain_id) + " carries no labels");
  }
  return *labels;
}

UnlabeledBatch strip_labels(const MultiModalBatch& batch) {
  return UnlabeledBatch{batch.visual, batch.audio, batch.domain_id};
}

void BenchmarkSpec::validate() const {
  if (num_domains < 2) throw ConfigError("benchmark: num_domains must be >= 2 (one source, one target)");
  if (num_classes < 2) throw ConfigError("benchmark: num_classes must be >= 2");
  if (visual_dim == 0 || audio_dim == 0) throw ConfigError("benchmark: input dims must be positive");
  if (samples_per_class < 2) throw ConfigError("benchmark: samples_per_class must be >= 2");
  if (!(prototype_scale > 0.0)) throw ConfigError("benchmark: prototype_scale must be positive");
  if (!(transform_strength >= 0.0)) throw ConfigError("benchmark: transform_strength must be >= 0");
  if (!(visual_shift_scale >= 0.0) || !(audio_shift_scale >= 0.0)) {
    throw ConfigError("benchmark: shift scales must be >= 0");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("benchmark: noise_sigma must be >= 0");
  if (!(audio_norm_scale > 0.0) || !std::isfinite(audio_norm_scale)) {
    throw ConfigError("benchmark: audio_norm_scale must be positive");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("benchmark: train_fraction must lie in (0, 1)");
  }
  if (!(class_skew >= 0.0 && class_skew < 1.0)) {
    throw ConfigError("benchmark: class_skew must lie in [0, 1)");
  }
}

Matrix random_rotation(std::size_t n, double strength, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix skew(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = strength * normal(rng);
      skew(i, j) = v;
      skew(j, i) = -v;
    }
  }
  // Cayley transform; I - tS is invertible for every skew-symmetric tS.
  Matrix lhs = Matrix::identity(n) - skew;
  Matrix rhs = Matrix::identity(n) + skew;
  return solve(std::move(lhs), std::move(rhs));
}

std::vector<Domain> generate_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t c = spec.num_classes;

  std::vector<std::vector<double>> proto_v(c);
  std::vector<std::vector<double>> proto_a(c);
  for (std::size_t k = 0; k < c; ++k) {
    proto_v[k] = sphere_point(spec.visual_dim, spec.prototype_scale, rng);
    proto_a[k] = sphere_point(spec.audio_dim, spec.prototype_scale, rng);
  }

  std::vector<Domain> domains;
  domains.reserve(spec.num_domains);
  for (std::size_t d = 0; d < spec.num_domains; ++d) {
    const DomainShift shift_v =
        draw_shift(spec.visual_dim, spec.transform_strength * spec.visual_shift_scale, spec, rng);
    const DomainShift shift_a =
        draw_shift(spec.audio_dim, spec.transform_strength * spec.audio_shift_scale, spec, rng);

    std::vector<std::size_t> per_class(c, spec.samples_per_class);
    if (spec.class_skew > 0.0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& n : per_class) {
        const double keep = 1.0 - spec.class_skew * u(rng);
        n = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(double(n) * keep)));
      }
    }

    std::vector<double> tv, ta, sv, sa;
    std::vector<int> tl, sl;
    std::vector<double> row_v(spec.visual_dim), row_a(spec.audio_dim);
    const std::size_t max_n = *std::max_element(per_class.begin(), per_class.end());
    // Sample-major, class-minor order interleaves classes in both splits.
    for (std::size_t i = 0; i < max_n; ++i) {
      for (std::size_t k = 0; k < c; ++k) {
        if (i >= per_class[k]) continue;
        write_sample(row_v, shift_v, proto_v[k], spec.noise_sigma, 1.0, rng);
        write_sample(row_a, shift_a, proto_a[k], spec.noise_sigma, spec.audio_norm_scale, rng);
        auto n_train = static_cast<std::size_t>(std::lround(spec.train_fraction * double(per_class[k])));
        n_train = std::clamp<std::size_t>(n_train, 1, per_class[k] - 1);
        const bool train = i < n_train;
        auto& dv = train ? tv : sv;
        auto& da = train ? ta : sa;
        dv.insert(dv.end(), row_v.begin(), row_v.end());
        da.insert(da.end(), row_a.begin(), row_a.end());
        (train ? tl : sl).push_back(static_cast<int>(k));
      }
    }
    Domain dom;
    dom.id = static_cast<int>(d);
    dom.train = MultiModalBatch{Matrix(tl.size(), spec.visual_dim, std::move(tv)),
                                Matrix(tl.size(), spec.audio_dim, std::move(ta)), std::move(tl),
                                dom.id};
    dom.test = MultiModalBatch{Matrix(sl.size(), spec.visual_dim, std::move(sv)),
                               Matrix(sl.size(), spec.audio_dim, std::move(sa)), std::move(sl),
                               dom.id};
    domains.push_back(std::move(dom));
  }
  return domains;
}

DgSplit make_dg_split(std::span<const Domain> domains, std::size_t target_index,
                      std::optional<std::size_t> source_index) {
  if (domains.size() < 2) throw ConfigError("make_dg_split: need at least 2 domains");
  if (target_index >= domains.size()) throw ConfigError("make_dg_split: target index out of range");
  DgSplit split;
  split.target_id = domains[target_index].id;
  split.target_test = domains[target_index].test;
  if (source_index) {
    if (*source_index >= domains.size() || *source_index == target_index) {
      throw ConfigError("make_dg_split: source index must name a domain other than the target");
    }
    split.sources.push_back(domains[*source_index].train);
    split.source_ids.push_back(domains[*source_index].id);
  } else {
    for (std::size_t i = 0; i < domains.size(); ++i) {
      if (i == target_index) continue;
      split.sources.push_back(domains[i].train);
      split.source_ids.push_back(domains[i].id);
    }
  }
  for (const auto& s : split.sources) s.require_labels();
  split.target_test.require_labels();
  return split;
}

UdaSplit make_uda_split(std::span<const Domain> domains, std::size_t source_index,
                        std::size_t target_index) {
  if (source_index >= domains.size() || target_index >= domains.size()) {
    throw ConfigError("make_uda_split: domain index out of range");
  }
  if (source_index == target_index) throw ConfigError("make_uda_split: source and target must differ");
  UdaSplit split{domains[source_index].train, strip_labels(domains[target_index].train),
                 domains[target_index].test};
  split.source.require_labels();
  split.target_test.require_labels();
  return split;
}

MultiModalBatch pool(std::span<const MultiModalBatch> batches) {
  if (batches.empty()) throw ConfigError("pool: no batches");
  std::vector<Matrix> v, a;
  std::vector<int> labels;
  for (const auto& b : batches) {
    b.validate();
    v.push_back(b.visual);
    a.push_back(b.audio);
    const auto& l = b.require_labels();
    labels.insert(labels.end(), l.begin(), l.end());
  }
  return MultiModalBatch{vstack(v), vstack(a), std::move(labels),
                         batches.size() == 1 ? batches.front().domain_id : -1};
}

std::string pair_label(std::span<const int> sources, int target) {
  std::string s;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (i > 0) s += ",";
    s += "D" + std::to_string(sources[i] + 1);
  }
  return s + "->D" + std::to_string(target + 1);
}

}  // namespace rnanet
