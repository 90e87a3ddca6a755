// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "rnanet/experiment.hpp"

namespace rnanet {

/// Flat "key = value" text with [section] headers. '#' and ';' start
/// comments. Keys outside any section live in section "".
class IniFile {
 public:
  /// Throws ParseError naming the line on malformed input or duplicate keys.
  static IniFile parse(std::string_view text);

  bool has_section(std::string_view section) const;
  std::optional<std::string> get(std::string_view section, std::string_view key) const;

  /// Every "section.key" that get() has not been asked for.
  std::set<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;  // "section.key"
  std::set<std::string, std::less<>> sections_;
  mutable std::set<std::string, std::less<>> used_;
};

// Recognized sections and keys:
//
//   [benchmark]  num_domains num_classes visual_dim audio_dim samples_per_class
//                prototype_scale transform_strength visual_shift_scale
//                audio_shift_scale noise_sigma audio_norm_scale
//                train_fraction class_skew seed
//   [data]       dir          (RNAFEAT directory, relative to the config file)
//   [experiment] setting source target aux lambda hna_target iterations
//                batch_size checkpoint_average checkpoint_interval seed
//                shuffle_target
//   [model]      hidden feature_dim encoder_layers fusion batchnorm
//   [optimizer]  learning_rate momentum weight_decay
//   [matrix]     methods seeds threads
//
// Domain numbers (source, target) are 1-based as in D1, D2, D3. Unknown
// sections or keys are a ConfigError.

ExperimentConfig parse_experiment_config(std::string_view text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Benchmark-only view used by `generate`.
BenchmarkSpec parse_benchmark_spec(std::string_view text);

/// Canonical text form of a resolved config; parses back to the same value.
std::string format_experiment_config(const ExperimentConfig& config);

}  // namespace rnanet
