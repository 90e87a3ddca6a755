// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnanet/data.hpp"
#include "rnanet/training.hpp"

namespace rnanet {

enum class Setting { dg_single, dg_multi, uda };

std::string_view to_string(Setting s);
Setting setting_from_string(std::string_view s);

/// Rows of a results table. Each maps to an auxiliary loss / architecture.
enum class Method {
  source_only,
  alignment_only,
  orthogonality_only,
  batchnorm,
  hna,
  rna,
  rna_mid,
};

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
/// The base run configuration adjusted for the method.
TrainConfig apply_method(TrainConfig base, Method m);

/// Source domain(s) and target domain, 0-based.
struct DomainPair {
  std::vector<int> sources;
  int target = 0;

  std::string label() const { return pair_label(sources, target); }
  friend bool operator==(const DomainPair&, const DomainPair&) = default;
};

/// Every ordered (source, target) pair for dg-single / uda; every
/// leave-one-out target for dg-multi.
std::vector<DomainPair> standard_pairs(Setting setting, std::size_t num_domains);

struct ExperimentConfig {
  /// Inline synthetic benchmark; ignored when data_dir is set.
  BenchmarkSpec benchmark;
  /// Directory holding d<k>_train.rnafeat / d<k>_test.rnafeat files.
  std::optional<std::filesystem::path> data_dir;
  Setting setting = Setting::dg_single;
  int source = 0;
  int target = 1;
  TrainConfig train;
  std::vector<Method> methods{Method::source_only, Method::alignment_only,
                              Method::orthogonality_only, Method::batchnorm, Method::hna,
                              Method::rna};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t threads = 1;

  void validate() const;
  /// The configured (source, target); dg-multi uses every non-target domain.
  DomainPair pair(std::size_t num_domains) const;
};

/// The domains an experiment runs on: loaded from data_dir if set,
/// otherwise generated from the inline benchmark.
std::vector<Domain> load_domains(const ExperimentConfig& config);

struct RunOutcome {
  TrainResult train;
  /// Target accuracy of the checkpoint-averaged prediction.
  double accuracy = 0.0;
  double accuracy_final_model = 0.0;
};

/// Trains one configuration on one domain pair and evaluates on the target's
/// held-out split.
RunOutcome run_single(const TrainConfig& config, Setting setting, std::span<const Domain> domains,
                      const DomainPair& pair);

struct ResultsRow {
  std::string method;
  std::vector<double> mean;    // per pair, over seeds, in percent
  std::vector<double> stddev;  // per pair, over seeds
  std::vector<bool> failed;
  /// Per pair, the per-seed accuracies in percent.
  std::vector<std::vector<double>> per_seed;
  double mean_over_pairs = 0.0;
};

struct ResultsTable {
  std::vector<std::string> columns;  // pair labels
  std::vector<ResultsRow> rows;

  const ResultsRow& row(std::string_view method) const;
  /// "method,<pairs...>,mean", one row per method, accuracies in percent.
  std::string to_csv() const;
  std::string stddev_to_csv() const;
};

/// Mean and population standard deviation over seeds per (method, pair);
/// a failing cell is reported as NaN and flagged, the rest still run. Cells
/// are independent and may run on `threads` worker threads; the result does
/// not depend on the thread count.
ResultsTable run_experiment_matrix(const ExperimentConfig& base, std::span<const DomainPair> pairs,
                                   std::span<const Method> methods,
                                   std::span<const std::uint64_t> seeds,
                                   std::span<const Domain> domains, std::size_t threads = 1);

}  // namespace rnanet
