// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rnanet/matrix.hpp"

namespace rnanet {

/// Paired visual/audio inputs of one domain. Labels are present exactly when
/// the batch may be seen by a supervised learner.
struct MultiModalBatch {
  Matrix visual;
  Matrix audio;
  std::optional<std::vector<int>> labels;
  int domain_id = 0;

  std::size_t size() const { return visual.rows(); }
  bool labeled() const { return labels.has_value(); }
  /// Throws ConfigError on a row-count mismatch or label-count mismatch.
  void validate() const;
  const std::vector<int>& require_labels() const;
  friend bool operator==(const MultiModalBatch&, const MultiModalBatch&) = default;
};

/// What an adaptation trainer may see of the target domain. There is no
/// label field to leak.
struct UnlabeledBatch {
  Matrix visual;
  Matrix audio;
  int domain_id = 0;

  std::size_t size() const { return visual.rows(); }
};

UnlabeledBatch strip_labels(const MultiModalBatch& batch);

struct BenchmarkSpec {
  std::size_t num_domains = 3;
  std::size_t num_classes = 8;
  std::size_t visual_dim = 32;
  std::size_t audio_dim = 32;
  std::size_t samples_per_class = 100;
  /// Radius of the sphere class prototypes are drawn on.
  double prototype_scale = 3.0;
  /// 0 leaves every domain identical; larger values rotate further from the
  /// identity and add a larger per-domain offset.
  double transform_strength = 0.4;
  /// Per-modality multipliers on transform_strength. By default audio, the
  /// louder stream, also moves more between domains.
  double visual_shift_scale = 0.5;
  double audio_shift_scale = 1.5;
  double noise_sigma = 1.0;
  /// Multiplies every audio input; 1 means no norm imbalance.
  double audio_norm_scale = 10.0;
  double train_fraction = 0.7;
  /// Per-domain class-proportion skew in [0, 1); 0 is balanced.
  double class_skew = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const BenchmarkSpec&, const BenchmarkSpec&) = default;
};

struct Domain {
  int id = 0;
  MultiModalBatch train;
  MultiModalBatch test;
};

/// Shared class prototypes per modality; per (domain, modality) a random
/// rotation pulled toward the identity plus an offset; isotropic noise;
/// audio scaled by audio_norm_scale.
std::vector<Domain> generate_benchmark(const BenchmarkSpec& spec);

/// Orthogonal matrix (I - tS)^-1 (I + tS) for a random skew-symmetric S
/// with N(0, 1/n) entries; t = 0 gives the identity.
Matrix random_rotation(std::size_t n, double strength, std::uint64_t seed);

struct DgSplit {
  /// Training splits of the source domains, labeled.
  std::vector<MultiModalBatch> sources;
  /// Held-out evaluation data of the target domain, never handed to a trainer.
  MultiModalBatch target_test;
  std::vector<int> source_ids;
  int target_id = 0;
};

/// Multi-source (all other domains) unless `source_index` names one source.
DgSplit make_dg_split(std::span<const Domain> domains, std::size_t target_index,
                      std::optional<std::size_t> source_index = std::nullopt);

struct UdaSplit {
  MultiModalBatch source;
  UnlabeledBatch target_train;
  MultiModalBatch target_test;
};

UdaSplit make_uda_split(std::span<const Domain> domains, std::size_t source_index,
                        std::size_t target_index);

/// Concatenates labeled batches into one pooled batch (Deep All sampling).
MultiModalBatch pool(std::span<const MultiModalBatch> batches);

/// "D1,D2->D3" with 1-based domain numbers.
std::string pair_label(std::span<const int> sources, int target);

}  // namespace rnanet
