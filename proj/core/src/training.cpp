// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "rnanet/errors.hpp"
#include "rnanet/io.hpp"

namespace rnanet {
namespace {

// Independent streams for init, source sampling and target sampling, so the
// target sampler can never perturb the source trajectory.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  return rng();
}

/// Walks a permutation of [0, n), reshuffling at every epoch boundary.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::uint64_t seed, bool shuffle)
      : order_(n), rng_(seed), shuffle_(shuffle) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) {
        pos_ = 0;
        reshuffle();
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    if (shuffle_) std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  bool shuffle_;
  std::size_t pos_ = 0;
};

bool has_feature_loss(AuxLoss a) {
  return a == AuxLoss::rna || a == AuxLoss::cosine_align || a == AuxLoss::orthogonality ||
         a == AuxLoss::hna;
}

LossResult compute_aux(AuxLoss aux, const FeatureBatch& v, const FeatureBatch& a, double hna_target) {
  switch (aux) {
    case AuxLoss::rna:
      return rna_loss(v, a);
    case AuxLoss::cosine_align:
      return cosine_alignment_loss(v, a);
    case AuxLoss::orthogonality:
      return orthogonality_loss(v, a);
    case AuxLoss::hna:
      return hna_loss(v, a, hna_target);
    default:
      throw ConfigError("compute_aux: no feature loss for this auxiliary setting");
  }
}

double auto_hna_target(const TwoStreamModel& model, const Matrix& visual, const Matrix& audio) {
  const auto nv = row_norms(encode(model, Modality::visual, visual).features);
  const auto na = row_norms(encode(model, Modality::audio, audio).features);
  const double mv = std::accumulate(nv.begin(), nv.end(), 0.0) / double(nv.size());
  const double ma = std::accumulate(na.begin(), na.end(), 0.0) / double(na.size());
  return 0.5 * (mv + ma);
}

std::string describe(const IterationRecord& r) {
  return "iter=" + std::to_string(r.iteration) + " mean_norm_v=" + format_double(r.mean_norm_visual) +
         " mean_norm_a=" + format_double(r.mean_norm_audio) + " rho=" + format_double(r.rho) +
         " ce=" + format_double(r.ce_loss) + " aux=" + format_double(r.aux_loss);
}

struct TargetData {
  const UnlabeledBatch* batch;
};

TrainResult run_training(const TrainConfig& config, const MultiModalBatch& source,
                         const UnlabeledBatch* target) {
  config.validate();
  source.validate();
  const auto& labels = source.require_labels();
  if (source.size() == 0) throw ConfigError("training: empty source data");
  if (target != nullptr && target->size() == 0) throw ConfigError("training: empty target data");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= config.model.num_classes) {
      throw ConfigError("training: label " + std::to_string(y) + " outside the model's classes");
    }
  }

  TrainResult result{init_model(config.effective_model(), derive_seed(config.seed, 0)),
                     NormTelemetry(std::string(to_string(config.aux))), {}, std::nullopt};
  TwoStreamModel& model = result.model;
  if (source.visual.cols() != model.config.visual_input ||
      source.audio.cols() != model.config.audio_input) {
    throw ConfigError("training: data widths do not match the model inputs");
  }

  const bool use_aux = has_feature_loss(config.aux) && config.lambda > 0.0;
  double hna_target = 0.0;
  if (config.aux == AuxLoss::hna) {
    hna_target = config.hna_target ? *config.hna_target
                                   : auto_hna_target(model, source.visual, source.audio);
    result.hna_target = hna_target;
  }
  // HNA is quadratic in raw norms while RNA is scale-free; dividing by R^2
  // puts both on the same footing for a shared lambda.
  const double aux_weight =
      config.aux == AuxLoss::hna ? config.lambda / (hna_target * hna_target) : config.lambda;

  EpochSampler source_sampler(source.size(), derive_seed(config.seed, 1), true);
  std::optional<EpochSampler> target_sampler;
  if (target != nullptr) {
    target_sampler.emplace(target->size(), derive_seed(config.seed, 2), config.shuffle_target);
  }
  Sgd sgd(config.optimizer);
  const std::size_t batch = config.batch_size;

  auto maybe_snapshot = [&](std::size_t done) {
    const std::size_t remaining = config.iterations - done;
    if (remaining % config.checkpoint_interval == 0 &&
        remaining / config.checkpoint_interval < config.checkpoint_average) {
      result.snapshots.push_back(model);
    }
  };
  if (config.iterations == 0) result.snapshots.push_back(model);

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto idx = source_sampler.next(batch);
    const Matrix xv = gather_rows(source.visual, idx);
    const Matrix xa = gather_rows(source.audio, idx);
    std::vector<int> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = labels[idx[i]];

    ForwardCache cache;
    ModelOutput out = forward(model, xv, xa, NormMode::train, &cache);
    const CrossEntropyResult ce = softmax_cross_entropy(out.fused, y);

    IterationRecord rec;
    rec.iteration = it;
    rec.ce_loss = ce.loss;
    try {
      const NormStats ns = norm_stats(out.features_visual, out.features_audio);
      rec.mean_norm_visual = ns.mean_norm_visual;
      rec.mean_norm_audio = ns.mean_norm_audio;
      rec.delta = ns.delta;
      rec.rho = ns.rho;
    } catch (const DegenerateInputError& e) {
      throw NumericalError(std::string("training aborted at iteration ") + std::to_string(it) +
                           ": " + e.what());
    }

    std::optional<LossResult> aux_src;
    if (use_aux) {
      aux_src = compute_aux(config.aux, out.features_visual, out.features_audio, hna_target);
      rec.aux_loss = aux_src->value;
    }

    // Target branch: encoders only, no labels involved.
    std::optional<LossResult> aux_tgt;
    EncoderCache tgt_cache_v;
    EncoderCache tgt_cache_a;
    if (target != nullptr) {
      const auto tidx = target_sampler->next(batch);
      if (use_aux) {
        FeatureBatch tv = encode(model, Modality::visual, gather_rows(target->visual, tidx), &tgt_cache_v);
        FeatureBatch ta = encode(model, Modality::audio, gather_rows(target->audio, tidx), &tgt_cache_a);
        try {
          rec.target = norm_stats(tv, ta);
        } catch (const DegenerateInputError&) {
          rec.target.reset();
        }
        aux_tgt = compute_aux(config.aux, tv, ta, hna_target);
        rec.aux_loss += aux_tgt->value;
      }
    }

    const double total = rec.ce_loss + aux_weight * rec.aux_loss;
    if (!std::isfinite(total)) {
      std::string last = result.telemetry.empty() ? std::string("none")
                                                  : describe(result.telemetry.records().back());
      throw NumericalError("training aborted: non-finite loss at iteration " + std::to_string(it) +
                           " (last telemetry: " + last + ")");
    }

    GradientBundle grads;
    if (aux_src) {
      Matrix gv = aux_src->grad_visual * aux_weight;
      Matrix ga = aux_src->grad_audio * aux_weight;
      grads = backward(model, cache, ce.grad_logits, &gv, &ga);
    } else {
      grads = backward(model, cache, ce.grad_logits);
    }
    if (aux_tgt) {
      encode_backward(model, Modality::visual, tgt_cache_v, aux_tgt->grad_visual * aux_weight, grads);
      encode_backward(model, Modality::audio, tgt_cache_a, aux_tgt->grad_audio * aux_weight, grads);
    }

    result.telemetry.append(rec);
    try {
      sgd.step(parameter_spans(model.params), parameter_spans(std::as_const(grads)));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (last telemetry: " + describe(rec) + ")");
    }
    maybe_snapshot(it + 1);
  }
  return result;
}

double tail_or_head_mean(const std::vector<IterationRecord>& r, double fraction, bool tail) {
  if (r.empty()) throw ConfigError("telemetry is empty");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(double(r.size()) * fraction));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = tail ? r[r.size() - 1 - i] : r[i];
    s += std::abs(rec.rho - 1.0);
  }
  return s / double(n);
}

std::string record_csv_line(std::size_t it, const NormStats& ns, double ce, double aux) {
  return std::to_string(it) + "," + format_double(ns.mean_norm_visual) + "," +
         format_double(ns.mean_norm_audio) + "," + format_double(ns.delta) + "," +
         format_double(ns.rho) + "," + format_double(ce) + "," + format_double(aux) + "\n";
}

}  // namespace

std::string_view to_string(AuxLoss a) {
  switch (a) {
    case AuxLoss::none: return "none";
    case AuxLoss::rna: return "rna";
    case AuxLoss::cosine_align: return "cosine-align";
    case AuxLoss::orthogonality: return "orthogonality";
    case AuxLoss::hna: return "hna";
    case AuxLoss::batchnorm_only: return "batchnorm-only";
  }
  return "none";
}

AuxLoss aux_loss_from_string(std::string_view s) {
  for (AuxLoss a : {AuxLoss::none, AuxLoss::rna, AuxLoss::cosine_align, AuxLoss::orthogonality,
                    AuxLoss::hna, AuxLoss::batchnorm_only}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown auxiliary loss '" + std::string(s) +
                    "' (expected none|rna|cosine-align|orthogonality|hna|batchnorm-only)");
}

std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::fused: return "fused";
    case EvalMode::visual_only: return "visual-only";
    case EvalMode::audio_only: return "audio-only";
  }
  return "fused";
}

void TrainConfig::validate() const {
  model.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (checkpoint_average == 0) throw ConfigError("checkpoint_average must be >= 1");
  if (checkpoint_interval == 0) throw ConfigError("checkpoint_interval must be >= 1");
  if (hna_target && !(*hna_target > 0.0)) throw ConfigError("hna target norm must be positive");
  if (!(optimizer.learning_rate >= 0.0) || !(optimizer.momentum >= 0.0) ||
      !(optimizer.weight_decay >= 0.0)) {
    throw ConfigError("optimizer hyperparameters must be non-negative");
  }
}

ModelConfig TrainConfig::effective_model() const {
  ModelConfig m = model;
  if (aux == AuxLoss::batchnorm_only) m.batchnorm = true;
  return m;
}

void NormTelemetry::append(IterationRecord record) {
  if (!records_.empty() && record.iteration <= records_.back().iteration) {
    throw ConfigError("telemetry records must be strictly ordered by iteration");
  }
  records_.push_back(std::move(record));
}

double NormTelemetry::mean_abs_rho_deviation_head(double fraction) const {
  return tail_or_head_mean(records_, fraction, false);
}

double NormTelemetry::mean_abs_rho_deviation_tail(double fraction) const {
  return tail_or_head_mean(records_, fraction, true);
}

std::string NormTelemetry::to_csv() const {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records_) {
    out += record_csv_line(r.iteration,
                           NormStats{r.mean_norm_visual, r.mean_norm_audio, r.delta, r.rho},
                           r.ce_loss, r.aux_loss);
  }
  return out;
}

std::string NormTelemetry::target_to_csv() const {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records_) {
    if (r.target) out += record_csv_line(r.iteration, *r.target, r.ce_loss, r.aux_loss);
  }
  return out;
}

NormTelemetry NormTelemetry::from_csv(std::string_view text, std::string aux_loss_name) {
  NormTelemetry t(std::move(aux_loss_name));
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader) {
        throw ParseError("telemetry line 1: expected header '" + std::string(kCsvHeader) + "'");
      }
      continue;
    }
    std::vector<double> f;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) comma = line.size();
      auto tok = line.substr(start, comma - start);
      double v = 0.0;
      auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || end != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ParseError("telemetry line " + std::to_string(line_no) + ": invalid field '" +
                         std::string(tok) + "'");
      }
      f.push_back(v);
      start = comma + 1;
    }
    if (f.size() != 7) {
      throw ParseError("telemetry line " + std::to_string(line_no) + ": expected 7 fields, found " +
                       std::to_string(f.size()));
    }
    IterationRecord r;
    r.iteration = static_cast<std::size_t>(f[0]);
    r.mean_norm_visual = f[1];
    r.mean_norm_audio = f[2];
    r.delta = f[3];
    r.rho = f[4];
    r.ce_loss = f[5];
    r.aux_loss = f[6];
    try {
      t.append(r);
    } catch (const ConfigError& e) {
      throw ParseError("telemetry line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) throw ParseError("telemetry line 1: empty file");
  return t;
}

TrainResult train_dg(const TrainConfig& config, std::span<const MultiModalBatch> sources) {
  if (sources.empty()) throw ConfigError("train_dg: no source domains");
  if (sources.size() == 1) return run_training(config, sources.front(), nullptr);
  return run_training(config, pool(sources), nullptr);
}

TrainResult train_uda(const TrainConfig& config, const MultiModalBatch& source,
                      const UnlabeledBatch& target) {
  if (target.visual.rows() != target.audio.rows()) {
    throw ConfigError("train_uda: target visual and audio row counts differ");
  }
  return run_training(config, source, &target);
}

Matrix eval_logits(const TwoStreamModel& model, const MultiModalBatch& batch, EvalMode mode) {
  batch.validate();
  switch (mode) {
    case EvalMode::visual_only:
      return single_stream_logits(model, Modality::visual, batch.visual);
    case EvalMode::audio_only:
      return single_stream_logits(model, Modality::audio, batch.audio);
    case EvalMode::fused:
      break;
  }
  return forward(model, batch.visual, batch.audio).fused;
}

std::vector<int> predict(const TwoStreamModel& model, const MultiModalBatch& batch) {
  return argmax_rows(eval_logits(model, batch, EvalMode::fused));
}

double accuracy_from_scores(const Matrix& scores, std::span<const int> labels) {
  if (scores.rows() == 0) throw ConfigError("evaluate: empty dataset");
  if (labels.size() != scores.rows()) throw ConfigError("evaluate: label count mismatch");
  const auto pred = argmax_rows(scores);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return double(hits) / double(pred.size());
}

double evaluate(const TwoStreamModel& model, const MultiModalBatch& batch, EvalMode mode) {
  const auto& labels = batch.require_labels();
  if (batch.size() == 0) throw ConfigError("evaluate: empty dataset");
  return accuracy_from_scores(eval_logits(model, batch, mode), labels);
}

std::vector<int> average_checkpoint_predictions(std::span<const TwoStreamModel> snapshots,
                                                const MultiModalBatch& batch, EvalMode mode) {
  if (snapshots.empty()) throw ConfigError("average_checkpoint_scores: no snapshots");
  Matrix mean = softmax_rows(eval_logits(snapshots.front(), batch, mode));
  for (std::size_t k = 1; k < snapshots.size(); ++k) {
    mean += softmax_rows(eval_logits(snapshots[k], batch, mode));
  }
  mean *= 1.0 / double(snapshots.size());
  return argmax_rows(mean);
}

double average_checkpoint_scores(std::span<const TwoStreamModel> snapshots,
                                 const MultiModalBatch& batch, EvalMode mode) {
  const auto& labels = batch.require_labels();
  if (batch.size() == 0) throw ConfigError("evaluate: empty dataset");
  const auto pred = average_checkpoint_predictions(snapshots, batch, mode);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return double(hits) / double(pred.size());
}

}  // namespace rnanet
