// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnanet/data.hpp"
#include "rnanet/losses.hpp"
#include "rnanet/model.hpp"
#include "rnanet/optim.hpp"

namespace rnanet {

enum class AuxLoss { none, rna, cosine_align, orthogonality, hna, batchnorm_only };

std::string_view to_string(AuxLoss a);
AuxLoss aux_loss_from_string(std::string_view s);

/// Everything that determines one training run besides its data.
struct TrainConfig {
  ModelConfig model;
  AuxLoss aux = AuxLoss::rna;
  /// Weight of the auxiliary feature loss against cross-entropy. HNA is
  /// applied as lambda / R^2 so one lambda suits both norm losses.
  double lambda = 10.0;
  /// HNA target norm; when empty, half-way between the initial model's mean
  /// visual and audio norms on the training data.
  std::optional<double> hna_target;
  SgdConfig optimizer{0.001, 0.9, 1e-4};
  std::size_t iterations = 2000;
  std::size_t batch_size = 32;
  /// Number of trailing snapshots whose softmax scores are averaged.
  std::size_t checkpoint_average = 9;
  std::size_t checkpoint_interval = 50;
  bool shuffle_target = true;
  std::uint64_t seed = 0;

  void validate() const;
  /// Model config with batchnorm switched on for the batchnorm baseline.
  ModelConfig effective_model() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double mean_norm_visual = 0.0;
  double mean_norm_audio = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double ce_loss = 0.0;
  double aux_loss = 0.0;
  /// Target-minibatch norms, UDA only.
  std::optional<NormStats> target;
};

enum class EvalMode { fused, visual_only, audio_only };

std::string_view to_string(EvalMode m);

struct EvaluationRecord {
  std::string split;
  EvalMode mode = EvalMode::fused;
  double accuracy = 0.0;
};

/// Per-iteration norm diagnostics plus end-of-run evaluations.
class NormTelemetry {
 public:
  static constexpr std::string_view kCsvHeader = "iter,mean_norm_v,mean_norm_a,delta,rho,ce_loss,aux_loss";

  explicit NormTelemetry(std::string aux_loss_name = "none") : aux_loss_name_(std::move(aux_loss_name)) {}

  /// Throws ConfigError unless the iteration index strictly increases.
  void append(IterationRecord record);
  void add_evaluation(EvaluationRecord record) { evaluations_.push_back(std::move(record)); }

  const std::string& aux_loss_name() const { return aux_loss_name_; }
  const std::vector<IterationRecord>& records() const { return records_; }
  const std::vector<EvaluationRecord>& evaluations() const { return evaluations_; }
  bool empty() const { return records_.empty(); }

  /// Mean |rho - 1| over the first or last `fraction` of the records.
  double mean_abs_rho_deviation_head(double fraction) const;
  double mean_abs_rho_deviation_tail(double fraction) const;

  std::string to_csv() const;
  /// UDA runs only: same layout for the target minibatch norms.
  std::string target_to_csv() const;
  static NormTelemetry from_csv(std::string_view text, std::string aux_loss_name = "unknown");

 private:
  std::string aux_loss_name_;
  std::vector<IterationRecord> records_;
  std::vector<EvaluationRecord> evaluations_;
};

struct TrainResult {
  TwoStreamModel model;
  NormTelemetry telemetry;
  /// Trailing snapshots, oldest first; the last one equals `model`.
  std::vector<TwoStreamModel> snapshots;
  std::optional<double> hna_target;
};

/// Domain generalization: cross-entropy on fused logits plus lambda times the
/// auxiliary loss on the source features. Several sources are pooled.
TrainResult train_dg(const TrainConfig& config, std::span<const MultiModalBatch> sources);

/// Unsupervised adaptation: as train_dg on the source, plus lambda times the
/// same auxiliary loss on unlabeled target minibatches.
TrainResult train_uda(const TrainConfig& config, const MultiModalBatch& source,
                      const UnlabeledBatch& target);

/// Eval-mode logits for the requested stream combination.
Matrix eval_logits(const TwoStreamModel& model, const MultiModalBatch& batch, EvalMode mode);

std::vector<int> predict(const TwoStreamModel& model, const MultiModalBatch& batch);

/// Top-1 accuracy in [0, 1]. Throws ConfigError on an empty or unlabeled set.
double evaluate(const TwoStreamModel& model, const MultiModalBatch& batch,
                EvalMode mode = EvalMode::fused);

/// Argmax of the per-sample mean softmax over the snapshots.
std::vector<int> average_checkpoint_predictions(std::span<const TwoStreamModel> snapshots,
                                                const MultiModalBatch& batch,
                                                EvalMode mode = EvalMode::fused);
double average_checkpoint_scores(std::span<const TwoStreamModel> snapshots,
                                 const MultiModalBatch& batch, EvalMode mode = EvalMode::fused);

/// Accuracy from precomputed per-sample class scores.
double accuracy_from_scores(const Matrix& scores, std::span<const int> labels);

}  // namespace rnanet
