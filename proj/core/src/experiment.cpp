// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/experiment.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "rnanet/errors.hpp"
#include "rnanet/feature_file.hpp"
#include "rnanet/io.hpp"

namespace rnanet {

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::dg_single: return "dg-single";
    case Setting::dg_multi: return "dg-multi";
    case Setting::uda: return "uda";
  }
  return "dg-single";
}

Setting setting_from_string(std::string_view s) {
  for (Setting x : {Setting::dg_single, Setting::dg_multi, Setting::uda}) {
    if (s == to_string(x)) return x;
  }
  throw ConfigError("unknown setting '" + std::string(s) + "' (expected dg-single|dg-multi|uda)");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::source_only: return "source-only";
    case Method::alignment_only: return "alignment-only";
    case Method::orthogonality_only: return "orthogonality-only";
    case Method::batchnorm: return "batchnorm";
    case Method::hna: return "hna";
    case Method::rna: return "rna";
    case Method::rna_mid: return "rna-mid";
  }
  return "rna";
}

Method method_from_string(std::string_view s) {
  for (Method m : {Method::source_only, Method::alignment_only, Method::orthogonality_only,
                   Method::batchnorm, Method::hna, Method::rna, Method::rna_mid}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

TrainConfig apply_method(TrainConfig base, Method m) {
  switch (m) {
    case Method::source_only:
      base.aux = AuxLoss::none;
      base.lambda = 0.0;
      break;
    case Method::alignment_only:
      base.aux = AuxLoss::cosine_align;
      break;
    case Method::orthogonality_only:
      base.aux = AuxLoss::orthogonality;
      break;
    case Method::batchnorm:
      base.aux = AuxLoss::batchnorm_only;
      break;
    case Method::hna:
      base.aux = AuxLoss::hna;
      break;
    case Method::rna:
      base.aux = AuxLoss::rna;
      break;
    case Method::rna_mid:
      base.aux = AuxLoss::rna;
      base.model.fusion = FusionMode::mid;
      break;
  }
  return base;
}

std::vector<DomainPair> standard_pairs(Setting setting, std::size_t num_domains) {
  std::vector<DomainPair> pairs;
  const int n = static_cast<int>(num_domains);
  if (setting == Setting::dg_multi) {
    for (int t = n - 1; t >= 0; --t) {
      DomainPair p;
      for (int s = 0; s < n; ++s) {
        if (s != t) p.sources.push_back(s);
      }
      p.target = t;
      pairs.push_back(std::move(p));
    }
    return pairs;
  }
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s != t) pairs.push_back(DomainPair{{s}, t});
    }
  }
  return pairs;
}

void ExperimentConfig::validate() const {
  if (!data_dir) benchmark.validate();
  train.validate();
  if (methods.empty()) throw ConfigError("experiment: at least one method required");
  if (seeds.empty()) throw ConfigError("experiment: at least one seed required");
  if (threads == 0) throw ConfigError("experiment: threads must be >= 1");
  if (source < 0 || target < 0) throw ConfigError("experiment: domain indices must be >= 0");
  if (setting != Setting::dg_multi && source == target) {
    throw ConfigError("experiment: source and target must differ");
  }
}

DomainPair ExperimentConfig::pair(std::size_t num_domains) const {
  if (setting != Setting::dg_multi) return DomainPair{{source}, target};
  const int n = static_cast<int>(num_domains);
  DomainPair p;
  p.target = target;
  for (int s = 0; s < n; ++s) {
    if (s != target) p.sources.push_back(s);
  }
  return p;
}

std::vector<Domain> load_domains(const ExperimentConfig& config) {
  if (!config.data_dir) return generate_benchmark(config.benchmark);
  std::vector<Domain> domains;
  for (int k = 0;; ++k) {
    const auto train = *config.data_dir / ("d" + std::to_string(k + 1) + "_train.rnafeat");
    const auto test = *config.data_dir / ("d" + std::to_string(k + 1) + "_test.rnafeat");
    if (!std::filesystem::exists(train) && !std::filesystem::exists(test)) break;
    if (!std::filesystem::exists(train) || !std::filesystem::exists(test)) {
      throw ConfigError("data directory is missing one split of domain D" + std::to_string(k + 1));
    }
    domains.push_back(Domain{k, load_feature_file(train, k), load_feature_file(test, k)});
  }
  if (domains.size() < 2) {
    throw ConfigError("data directory '" + config.data_dir->string() +
                      "' must hold at least two domains (d1_train.rnafeat, d1_test.rnafeat, ...)");
  }
  return domains;
}

RunOutcome run_single(const TrainConfig& config, Setting setting, std::span<const Domain> domains,
                      const DomainPair& pair) {
  const auto n = static_cast<int>(domains.size());
  if (pair.target < 0 || pair.target >= n) throw ConfigError("run: target domain out of range");
  for (int s : pair.sources) {
    if (s < 0 || s >= n || s == pair.target) throw ConfigError("run: invalid source domain");
  }
  RunOutcome out;
  const auto target = static_cast<std::size_t>(pair.target);
  TrainConfig cfg = config;
  cfg.model.visual_input = domains.front().train.visual.cols();
  cfg.model.audio_input = domains.front().train.audio.cols();
  MultiModalBatch eval_set;
  if (setting == Setting::uda) {
    if (pair.sources.size() != 1) throw ConfigError("uda: exactly one source domain");
    auto split = make_uda_split(domains, static_cast<std::size_t>(pair.sources.front()), target);
    out.train = train_uda(cfg, split.source, split.target_train);
    eval_set = std::move(split.target_test);
  } else {
    DgSplit split;
    if (pair.sources.size() == 1) {
      split = make_dg_split(domains, target, static_cast<std::size_t>(pair.sources.front()));
    } else {
      split = make_dg_split(domains, target);
      std::vector<int> want = pair.sources;
      if (split.source_ids != want) {
        // Subset of sources: pool exactly the requested ones.
        split.sources.clear();
        split.source_ids.clear();
        for (int s : want) {
          split.sources.push_back(domains[static_cast<std::size_t>(s)].train);
          split.source_ids.push_back(s);
        }
      }
    }
    out.train = train_dg(cfg, split.sources);
    eval_set = std::move(split.target_test);
  }
  out.accuracy = average_checkpoint_scores(out.train.snapshots, eval_set);
  out.accuracy_final_model = evaluate(out.train.model, eval_set);
  for (EvalMode m : {EvalMode::fused, EvalMode::visual_only, EvalMode::audio_only}) {
    out.train.telemetry.add_evaluation({"target-test", m, evaluate(out.train.model, eval_set, m)});
  }
  return out;
}

const ResultsRow& ResultsTable::row(std::string_view method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw ConfigError("results table has no row '" + std::string(method) + "'");
}

namespace {

std::string table_csv(const ResultsTable& t, bool stddev) {
  std::string out = "method";
  for (const auto& c : t.columns) out += "," + c;
  out += ",mean\n";
  for (const auto& r : t.rows) {
    out += r.method;
    const auto& cells = stddev ? r.stddev : r.mean;
    for (double v : cells) out += "," + (std::isnan(v) ? std::string("nan") : format_double(v));
    double tail = r.mean_over_pairs;
    if (stddev) {
      tail = 0.0;
      for (double v : cells) tail += v;
      tail /= double(cells.size());
    }
    out += "," + (std::isnan(tail) ? std::string("nan") : format_double(tail)) + "\n";
  }
  return out;
}

}  // namespace

std::string ResultsTable::to_csv() const { return table_csv(*this, false); }
std::string ResultsTable::stddev_to_csv() const { return table_csv(*this, true); }

ResultsTable run_experiment_matrix(const ExperimentConfig& base, std::span<const DomainPair> pairs,
                                   std::span<const Method> methods,
                                   std::span<const std::uint64_t> seeds,
                                   std::span<const Domain> domains, std::size_t threads) {
  if (pairs.empty() || methods.empty() || seeds.empty()) {
    throw ConfigError("experiment matrix needs at least one pair, method and seed");
  }
  const std::size_t np = pairs.size();
  const std::size_t ns = seeds.size();
  const std::size_t total = methods.size() * np * ns;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> acc(total, nan);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t job = next++; job < total; job = next++) {
      const std::size_t m = job / (np * ns);
      const std::size_t p = (job / ns) % np;
      const std::size_t s = job % ns;
      TrainConfig cfg = apply_method(base.train, methods[m]);
      cfg.seed = seeds[s];
      try {
        acc[job] = 100.0 * run_single(cfg, base.setting, domains, pairs[p]).accuracy;
      } catch (const std::exception&) {
        acc[job] = nan;
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, total));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ResultsTable table;
  for (const auto& p : pairs) table.columns.push_back(p.label());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    ResultsRow row;
    row.method = std::string(to_string(methods[m]));
    double sum_pairs = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      std::vector<double> cell(acc.begin() + static_cast<std::ptrdiff_t>((m * np + p) * ns),
                               acc.begin() + static_cast<std::ptrdiff_t>((m * np + p + 1) * ns));
      bool failed = false;
      double mean = 0.0;
      for (double v : cell) {
        failed = failed || std::isnan(v);
        mean += v;
      }
      mean /= double(ns);
      double var = 0.0;
      for (double v : cell) var += (v - mean) * (v - mean);
      row.mean.push_back(failed ? nan : mean);
      row.stddev.push_back(failed ? nan : std::sqrt(var / double(ns)));
      row.failed.push_back(failed);
      row.per_seed.push_back(std::move(cell));
      sum_pairs += row.mean.back();
    }
    row.mean_over_pairs = sum_pairs / double(np);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rnanet
