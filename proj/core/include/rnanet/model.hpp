// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rnanet/layers.hpp"
#include "rnanet/losses.hpp"
#include "rnanet/matrix.hpp"

namespace rnanet {

enum class FusionMode { late, mid };

/// Whether BatchNorm uses (and updates) batch statistics or its running ones.
enum class NormMode { train, eval };

std::string_view to_string(FusionMode m);
FusionMode fusion_mode_from_string(std::string_view s);

struct ModelConfig {
  std::size_t visual_input = 32;
  std::size_t audio_input = 32;
  std::size_t hidden = 128;
  std::size_t feature_dim = 64;
  std::size_t num_classes = 8;
  /// Linear layers per encoder, ReLU between consecutive ones.
  std::size_t encoder_layers = 2;
  FusionMode fusion = FusionMode::late;
  /// BatchNorm before the classifier, on both streams.
  bool batchnorm = false;

  void validate() const;
  std::size_t input_dim(Modality m) const {
    return m == Modality::visual ? visual_input : audio_input;
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  friend bool operator==(const BatchNormState&, const BatchNormState&) = default;
};

struct StreamParams {
  std::vector<LinearLayerParams> encoder;
  LinearLayerParams classifier;
  std::optional<BatchNormParams> batchnorm;
  friend bool operator==(const StreamParams&, const StreamParams&) = default;
};

/// Every trainable parameter of the two-stream network.
struct ParameterSet {
  StreamParams visual;
  StreamParams audio;
  /// Present iff fusion is mid; reads [f_v || f_a].
  std::optional<LinearLayerParams> mid_classifier;

  StreamParams& stream(Modality m) { return m == Modality::visual ? visual : audio; }
  const StreamParams& stream(Modality m) const { return m == Modality::visual ? visual : audio; }
  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

/// Gradients mirror the parameter layout exactly.
using GradientBundle = ParameterSet;

/// Flat views in declaration order: visual encoder layers (weight, bias),
/// visual classifier, visual batchnorm (gamma, beta), the same for audio,
/// then the mid-fusion classifier.
std::vector<std::span<double>> parameter_spans(ParameterSet& params);
std::vector<std::span<const double>> parameter_spans(const ParameterSet& params);
GradientBundle zeros_like(const ParameterSet& params);
std::size_t parameter_count(const ParameterSet& params);

struct TwoStreamModel {
  ModelConfig config;
  ParameterSet params;
  std::optional<BatchNormState> bn_visual;
  std::optional<BatchNormState> bn_audio;

  std::optional<BatchNormState>& bn_state(Modality m) {
    return m == Modality::visual ? bn_visual : bn_audio;
  }
  const std::optional<BatchNormState>& bn_state(Modality m) const {
    return m == Modality::visual ? bn_visual : bn_audio;
  }
  friend bool operator==(const TwoStreamModel&, const TwoStreamModel&) = default;
};

/// Zero-parameter model with the right shapes.
TwoStreamModel make_model(const ModelConfig& config);

/// Kaiming-style uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero
/// biases, BatchNorm at gamma = 1, beta = 0. Fully determined by the seed.
TwoStreamModel init_model(const ModelConfig& config, std::uint64_t seed);

// --- encoders -------------------------------------------------------------

struct EncoderCache {
  std::vector<LinearCache> linear;
  std::vector<ReluCache> relu;
};

FeatureBatch encode(const TwoStreamModel& model, Modality modality, const Matrix& input,
                    EncoderCache* cache = nullptr);

/// Adds parameter gradients into `grads` and returns dL/d input.
Matrix encode_backward(const TwoStreamModel& model, Modality modality, EncoderCache& cache,
                       const Matrix& grad_features, GradientBundle& grads);

// --- batchnorm ------------------------------------------------------------

struct BatchNormCache {
  Matrix normalized;
  std::vector<double> inv_std;
  bool valid = false;
};

struct BatchNormGrads {
  Matrix input;
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Train mode normalizes with batch statistics and updates the running ones
/// (unbiased variance); eval mode is a fixed per-feature affine map.
Matrix batchnorm_forward(const BatchNormParams& params, BatchNormState& state, const Matrix& input,
                         NormMode mode, BatchNormCache* cache = nullptr);
Matrix batchnorm_forward(const BatchNormParams& params, const BatchNormState& state,
                         const Matrix& input);
BatchNormGrads batchnorm_backward(const BatchNormParams& params, BatchNormCache& cache,
                                  const Matrix& grad_output);

// --- classifiers and fusion -----------------------------------------------

struct ClassifierCache {
  BatchNormCache batchnorm;
  LinearCache linear;
};

/// G^m(f_m), with BatchNorm first when the model has it.
Matrix classify(TwoStreamModel& model, Modality modality, const FeatureBatch& features,
                NormMode mode, ClassifierCache* cache = nullptr);
Matrix classify(const TwoStreamModel& model, Modality modality, const FeatureBatch& features);
Matrix classify_backward(const TwoStreamModel& model, Modality modality, ClassifierCache& cache,
                         const Matrix& grad_logits, GradientBundle& grads);

Matrix fuse_late(const Matrix& logits_visual, const Matrix& logits_audio);

struct MidFusionCache {
  BatchNormCache batchnorm_visual;
  BatchNormCache batchnorm_audio;
  LinearCache linear;
};

struct FeatureGrads {
  Matrix visual;
  Matrix audio;
};

/// Mid-level fusion: one classifier over [f_v || f_a]. ConfigError in late mode.
Matrix fuse_mid(TwoStreamModel& model, const FeatureBatch& features_visual,
                const FeatureBatch& features_audio, NormMode mode, MidFusionCache* cache = nullptr);
Matrix fuse_mid(const TwoStreamModel& model, const FeatureBatch& features_visual,
                const FeatureBatch& features_audio);
FeatureGrads fuse_mid_backward(const TwoStreamModel& model, MidFusionCache& cache,
                               const Matrix& grad_logits, GradientBundle& grads);

// --- whole network --------------------------------------------------------

struct ForwardCache {
  EncoderCache encoder_visual;
  EncoderCache encoder_audio;
  ClassifierCache classifier_visual;
  ClassifierCache classifier_audio;
  MidFusionCache mid;
};

struct ModelOutput {
  FeatureBatch features_visual;
  FeatureBatch features_audio;
  Matrix logits_visual;  // late fusion only
  Matrix logits_audio;   // late fusion only
  Matrix fused;
};

ModelOutput forward(TwoStreamModel& model, const Matrix& visual_input, const Matrix& audio_input,
                    NormMode mode, ForwardCache* cache = nullptr);
ModelOutput forward(const TwoStreamModel& model, const Matrix& visual_input,
                    const Matrix& audio_input);

/// Backpropagates dL/d fused logits plus optional extra feature gradients
/// (from an auxiliary feature loss) through both streams.
GradientBundle backward(const TwoStreamModel& model, ForwardCache& cache,
                        const Matrix& grad_fused, const Matrix* grad_features_visual = nullptr,
                        const Matrix* grad_features_audio = nullptr);

/// Logits of one stream alone. In mid mode the other half of the fused
/// classifier input is zeroed.
Matrix single_stream_logits(const TwoStreamModel& model, Modality modality, const Matrix& input);

/// Argmax of the fused eval-mode logits, ties to the lowest class index.
std::vector<int> predict(const TwoStreamModel& model, const Matrix& visual_input,
                         const Matrix& audio_input);

}  // namespace rnanet
