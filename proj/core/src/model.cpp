// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rnanet/errors.hpp"

namespace rnanet {
namespace {

void append_linear(std::vector<std::span<double>>& out, LinearLayerParams& l) {
  out.emplace_back(l.weight.values());
  out.emplace_back(l.bias);
}

void append_stream(std::vector<std::span<double>>& out, StreamParams& s) {
  for (auto& l : s.encoder) append_linear(out, l);
  append_linear(out, s.classifier);
  if (s.batchnorm) {
    out.emplace_back(s.batchnorm->gamma);
    out.emplace_back(s.batchnorm->beta);
  }
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void add_into(LinearLayerParams& dst, const LinearLayerParams& src) {
  dst.weight += src.weight;
  add_into(dst.bias, src.bias);
}

void require_width(const Matrix& m, std::size_t width, const char* what) {
  if (m.cols() != width) {
    throw ConfigError(std::string(what) + ": expected width " + std::to_string(width) + ", got " +
                      std::to_string(m.cols()));
  }
}

LinearLayerParams uniform_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  LinearLayerParams l(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : l.weight.values()) w = dist(rng);
  return l;
}

// Classifier input for a stream: the features, batch-normalized if enabled.
Matrix classifier_input(TwoStreamModel& model, Modality m, const Matrix& features, NormMode mode,
                        BatchNormCache* cache) {
  const auto& bn = model.params.stream(m).batchnorm;
  if (!bn) return features;
  return batchnorm_forward(*bn, *model.bn_state(m), features, mode, cache);
}

Matrix classifier_input(const TwoStreamModel& model, Modality m, const Matrix& features) {
  const auto& bn = model.params.stream(m).batchnorm;
  if (!bn) return features;
  return batchnorm_forward(*bn, *model.bn_state(m), features);
}

// Routes a gradient at the classifier input back to the raw features.
Matrix classifier_input_backward(const TwoStreamModel& model, Modality m, BatchNormCache& cache,
                                 Matrix grad, GradientBundle& grads) {
  const auto& bn = model.params.stream(m).batchnorm;
  if (!bn) return grad;
  auto g = batchnorm_backward(*bn, cache, grad);
  add_into(grads.stream(m).batchnorm->gamma, g.gamma);
  add_into(grads.stream(m).batchnorm->beta, g.beta);
  return std::move(g.input);
}

}  // namespace

std::string_view to_string(FusionMode m) { return m == FusionMode::late ? "late" : "mid"; }

FusionMode fusion_mode_from_string(std::string_view s) {
  if (s == "late") return FusionMode::late;
  if (s == "mid") return FusionMode::mid;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "' (expected late|mid)");
}

void ModelConfig::validate() const {
  if (visual_input == 0 || audio_input == 0 || hidden == 0 || feature_dim == 0) {
    throw ConfigError("ModelConfig: all widths must be positive");
  }
  if (num_classes < 2) throw ConfigError("ModelConfig: need at least 2 classes");
  if (encoder_layers == 0) throw ConfigError("ModelConfig: encoder needs at least one layer");
}

std::vector<std::span<double>> parameter_spans(ParameterSet& params) {
  std::vector<std::span<double>> out;
  append_stream(out, params.visual);
  append_stream(out, params.audio);
  if (params.mid_classifier) append_linear(out, *params.mid_classifier);
  return out;
}

std::vector<std::span<const double>> parameter_spans(const ParameterSet& params) {
  auto mut = parameter_spans(const_cast<ParameterSet&>(params));
  return {mut.begin(), mut.end()};
}

GradientBundle zeros_like(const ParameterSet& params) {
  GradientBundle g = params;
  for (auto span : parameter_spans(g)) std::fill(span.begin(), span.end(), 0.0);
  return g;
}

std::size_t parameter_count(const ParameterSet& params) {
  std::size_t n = 0;
  for (auto span : parameter_spans(params)) n += span.size();
  return n;
}

TwoStreamModel make_model(const ModelConfig& config) {
  config.validate();
  TwoStreamModel model;
  model.config = config;
  for (Modality m : {Modality::visual, Modality::audio}) {
    auto& s = model.params.stream(m);
    std::size_t in = config.input_dim(m);
    for (std::size_t l = 0; l < config.encoder_layers; ++l) {
      const std::size_t out = l + 1 == config.encoder_layers ? config.feature_dim : config.hidden;
      s.encoder.emplace_back(in, out);
      in = out;
    }
    s.classifier = LinearLayerParams(config.feature_dim, config.num_classes);
    if (config.batchnorm) {
      s.batchnorm = BatchNormParams{std::vector<double>(config.feature_dim, 1.0),
                                    std::vector<double>(config.feature_dim, 0.0)};
      model.bn_state(m) = BatchNormState{std::vector<double>(config.feature_dim, 0.0),
                                         std::vector<double>(config.feature_dim, 1.0)};
    }
  }
  if (config.fusion == FusionMode::mid) {
    model.params.mid_classifier = LinearLayerParams(2 * config.feature_dim, config.num_classes);
  }
  return model;
}

TwoStreamModel init_model(const ModelConfig& config, std::uint64_t seed) {
  TwoStreamModel model = make_model(config);
  std::mt19937_64 rng(seed);
  for (Modality m : {Modality::visual, Modality::audio}) {
    auto& s = model.params.stream(m);
    for (auto& l : s.encoder) l = uniform_layer(l.in(), l.out(), rng);
    s.classifier = uniform_layer(s.classifier.in(), s.classifier.out(), rng);
  }
  if (model.params.mid_classifier) {
    auto& mid = *model.params.mid_classifier;
    mid = uniform_layer(mid.in(), mid.out(), rng);
  }
  return model;
}

FeatureBatch encode(const TwoStreamModel& model, Modality modality, const Matrix& input,
                    EncoderCache* cache) {
  const auto& layers = model.params.stream(modality).encoder;
  require_width(input, model.config.input_dim(modality), "encode");
  if (cache != nullptr) {
    cache->linear.assign(layers.size(), {});
    cache->relu.assign(layers.size() > 0 ? layers.size() - 1 : 0, {});
  }
  Matrix h = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = linear_forward(layers[l], h, cache ? &cache->linear[l] : nullptr);
    if (l + 1 < layers.size()) h = relu_forward(h, cache ? &cache->relu[l] : nullptr);
  }
  return FeatureBatch{std::move(h), modality, std::nullopt};
}

Matrix encode_backward(const TwoStreamModel& model, Modality modality, EncoderCache& cache,
                       const Matrix& grad_features, GradientBundle& grads) {
  const auto& layers = model.params.stream(modality).encoder;
  auto& layer_grads = grads.stream(modality).encoder;
  if (cache.linear.size() != layers.size()) {
    throw ConfigError("encode_backward: cache does not match encoder depth");
  }
  Matrix g = grad_features;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) g = relu_backward(cache.relu[l], g);
    auto lg = linear_backward(layers[l], cache.linear[l], g);
    add_into(layer_grads[l], lg.params);
    g = std::move(lg.input);
  }
  return g;
}

Matrix batchnorm_forward(const BatchNormParams& params, BatchNormState& state, const Matrix& input,
                         NormMode mode, BatchNormCache* cache) {
  if (mode == NormMode::eval) return batchnorm_forward(params, std::as_const(state), input);
  const std::size_t n = input.rows();
  const std::size_t d = input.cols();
  require_width(input, params.gamma.size(), "batchnorm_forward");
  if (n == 0) throw ConfigError("batchnorm_forward: empty batch");
  std::vector<double> mean(d, 0.0);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += input(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = input(i, j) - mean[j];
      var[j] += c * c;
    }
  }
  for (double& v : var) v /= static_cast<double>(n);

  std::vector<double> inv_std(d);
  for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + state.epsilon);
  Matrix normalized(n, d);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      normalized(i, j) = (input(i, j) - mean[j]) * inv_std[j];
      out(i, j) = params.gamma[j] * normalized(i, j) + params.beta[j];
    }
  }
  const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    state.running_mean[j] = (1.0 - state.momentum) * state.running_mean[j] + state.momentum * mean[j];
    state.running_var[j] =
        (1.0 - state.momentum) * state.running_var[j] + state.momentum * var[j] * unbias;
  }
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->valid = true;
  }
  return out;
}

Matrix batchnorm_forward(const BatchNormParams& params, const BatchNormState& state,
                         const Matrix& input) {
  require_width(input, params.gamma.size(), "batchnorm_forward");
  Matrix out(input.rows(), input.cols());
  for (std::size_t j = 0; j < input.cols(); ++j) {
    const double scale = params.gamma[j] / std::sqrt(state.running_var[j] + state.epsilon);
    const double shift = params.beta[j] - scale * state.running_mean[j];
    for (std::size_t i = 0; i < input.rows(); ++i) out(i, j) = scale * input(i, j) + shift;
  }
  return out;
}

BatchNormGrads batchnorm_backward(const BatchNormParams& params, BatchNormCache& cache,
                                  const Matrix& grad_output) {
  if (!cache.valid) throw ConfigError("batchnorm_backward: stale or empty cache");
  const Matrix& xhat = cache.normalized;
  const std::size_t n = xhat.rows();
  const std::size_t d = xhat.cols();
  if (grad_output.rows() != n || grad_output.cols() != d) {
    throw ConfigError("batchnorm_backward: grad_output shape does not match forward output");
  }
  BatchNormGrads g{Matrix(n, d), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      g.beta[j] += grad_output(i, j);
      g.gamma[j] += grad_output(i, j) * xhat(i, j);
    }
  }
  // dx = inv_std / N * (N dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)), dxhat = dy * gamma
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    const double sum_dxhat = g.beta[j] * params.gamma[j];
    const double sum_dxhat_xhat = g.gamma[j] * params.gamma[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double dxhat = grad_output(i, j) * params.gamma[j];
      g.input(i, j) =
          cache.inv_std[j] / nn * (nn * dxhat - sum_dxhat - xhat(i, j) * sum_dxhat_xhat);
    }
  }
  cache.valid = false;
  return g;
}

Matrix classify(TwoStreamModel& model, Modality modality, const FeatureBatch& features,
                NormMode mode, ClassifierCache* cache) {
  require_width(features.features, model.config.feature_dim, "classify");
  Matrix x = classifier_input(model, modality, features.features, mode,
                              cache ? &cache->batchnorm : nullptr);
  return linear_forward(model.params.stream(modality).classifier, x,
                        cache ? &cache->linear : nullptr);
}

Matrix classify(const TwoStreamModel& model, Modality modality, const FeatureBatch& features) {
  require_width(features.features, model.config.feature_dim, "classify");
  return linear_forward(model.params.stream(modality).classifier,
                        classifier_input(model, modality, features.features));
}

Matrix classify_backward(const TwoStreamModel& model, Modality modality, ClassifierCache& cache,
                         const Matrix& grad_logits, GradientBundle& grads) {
  auto lg = linear_backward(model.params.stream(modality).classifier, cache.linear, grad_logits);
  add_into(grads.stream(modality).classifier, lg.params);
  return classifier_input_backward(model, modality, cache.batchnorm, std::move(lg.input), grads);
}

Matrix fuse_late(const Matrix& logits_visual, const Matrix& logits_audio) {
  if (logits_visual.rows() != logits_audio.rows() || logits_visual.cols() != logits_audio.cols()) {
    throw ConfigError("fuse_late: logit shapes differ");
  }
  return logits_visual + logits_audio;
}

Matrix fuse_mid(TwoStreamModel& model, const FeatureBatch& features_visual,
                const FeatureBatch& features_audio, NormMode mode, MidFusionCache* cache) {
  if (!model.params.mid_classifier) throw ConfigError("fuse_mid: model is configured for late fusion");
  require_width(features_visual.features, model.config.feature_dim, "fuse_mid");
  require_width(features_audio.features, model.config.feature_dim, "fuse_mid");
  Matrix xv = classifier_input(model, Modality::visual, features_visual.features, mode,
                               cache ? &cache->batchnorm_visual : nullptr);
  Matrix xa = classifier_input(model, Modality::audio, features_audio.features, mode,
                               cache ? &cache->batchnorm_audio : nullptr);
  return linear_forward(*model.params.mid_classifier, hconcat(xv, xa),
                        cache ? &cache->linear : nullptr);
}

Matrix fuse_mid(const TwoStreamModel& model, const FeatureBatch& features_visual,
                const FeatureBatch& features_audio) {
  if (!model.params.mid_classifier) throw ConfigError("fuse_mid: model is configured for late fusion");
  require_width(features_visual.features, model.config.feature_dim, "fuse_mid");
  require_width(features_audio.features, model.config.feature_dim, "fuse_mid");
  return linear_forward(*model.params.mid_classifier,
                        hconcat(classifier_input(model, Modality::visual, features_visual.features),
                                classifier_input(model, Modality::audio, features_audio.features)));
}

FeatureGrads fuse_mid_backward(const TwoStreamModel& model, MidFusionCache& cache,
                               const Matrix& grad_logits, GradientBundle& grads) {
  if (!model.params.mid_classifier) {
    throw ConfigError("fuse_mid_backward: model is configured for late fusion");
  }
  auto lg = linear_backward(*model.params.mid_classifier, cache.linear, grad_logits);
  add_into(*grads.mid_classifier, lg.params);
  const std::size_t d = model.config.feature_dim;
  return FeatureGrads{
      classifier_input_backward(model, Modality::visual, cache.batchnorm_visual,
                                column_block(lg.input, 0, d), grads),
      classifier_input_backward(model, Modality::audio, cache.batchnorm_audio,
                                column_block(lg.input, d, d), grads)};
}

ModelOutput forward(TwoStreamModel& model, const Matrix& visual_input, const Matrix& audio_input,
                    NormMode mode, ForwardCache* cache) {
  if (visual_input.rows() != audio_input.rows()) {
    throw ConfigError("forward: visual and audio row counts differ");
  }
  ModelOutput out;
  out.features_visual =
      encode(model, Modality::visual, visual_input, cache ? &cache->encoder_visual : nullptr);
  out.features_audio =
      encode(model, Modality::audio, audio_input, cache ? &cache->encoder_audio : nullptr);
  if (model.config.fusion == FusionMode::late) {
    out.logits_visual = classify(model, Modality::visual, out.features_visual, mode,
                                 cache ? &cache->classifier_visual : nullptr);
    out.logits_audio = classify(model, Modality::audio, out.features_audio, mode,
                                cache ? &cache->classifier_audio : nullptr);
    out.fused = fuse_late(out.logits_visual, out.logits_audio);
  } else {
    out.fused = fuse_mid(model, out.features_visual, out.features_audio, mode,
                         cache ? &cache->mid : nullptr);
  }
  return out;
}

ModelOutput forward(const TwoStreamModel& model, const Matrix& visual_input,
                    const Matrix& audio_input) {
  if (visual_input.rows() != audio_input.rows()) {
    throw ConfigError("forward: visual and audio row counts differ");
  }
  ModelOutput out;
  out.features_visual = encode(model, Modality::visual, visual_input);
  out.features_audio = encode(model, Modality::audio, audio_input);
  if (model.config.fusion == FusionMode::late) {
    out.logits_visual = classify(model, Modality::visual, out.features_visual);
    out.logits_audio = classify(model, Modality::audio, out.features_audio);
    out.fused = fuse_late(out.logits_visual, out.logits_audio);
  } else {
    out.fused = fuse_mid(model, out.features_visual, out.features_audio);
  }
  return out;
}

GradientBundle backward(const TwoStreamModel& model, ForwardCache& cache, const Matrix& grad_fused,
                        const Matrix* grad_features_visual, const Matrix* grad_features_audio) {
  GradientBundle grads = zeros_like(model.params);
  Matrix gv;
  Matrix ga;
  if (model.config.fusion == FusionMode::late) {
    // Summation fusion passes the same gradient to both streams.
    gv = classify_backward(model, Modality::visual, cache.classifier_visual, grad_fused, grads);
    ga = classify_backward(model, Modality::audio, cache.classifier_audio, grad_fused, grads);
  } else {
    auto fg = fuse_mid_backward(model, cache.mid, grad_fused, grads);
    gv = std::move(fg.visual);
    ga = std::move(fg.audio);
  }
  if (grad_features_visual != nullptr) gv += *grad_features_visual;
  if (grad_features_audio != nullptr) ga += *grad_features_audio;
  encode_backward(model, Modality::visual, cache.encoder_visual, gv, grads);
  encode_backward(model, Modality::audio, cache.encoder_audio, ga, grads);
  return grads;
}

Matrix single_stream_logits(const TwoStreamModel& model, Modality modality, const Matrix& input) {
  FeatureBatch f = encode(model, modality, input);
  if (model.config.fusion == FusionMode::late) return classify(model, modality, f);
  const std::size_t d = model.config.feature_dim;
  Matrix x = classifier_input(model, modality, f.features);
  Matrix zero(x.rows(), d);
  Matrix concat = modality == Modality::visual ? hconcat(x, zero) : hconcat(zero, x);
  return linear_forward(*model.params.mid_classifier, concat);
}

std::vector<int> predict(const TwoStreamModel& model, const Matrix& visual_input,
                         const Matrix& audio_input) {
  return argmax_rows(forward(model, visual_input, audio_input).fused);
}

}  // namespace rnanet
