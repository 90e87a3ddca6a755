// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnanet/checkpoint.hpp"
#include "rnanet/config.hpp"
#include "rnanet/errors.hpp"
#include "rnanet/experiment.hpp"
#include "rnanet/feature_file.hpp"
#include "rnanet/io.hpp"
#include "rnanet/losses.hpp"

#ifndef RNANET_VERSION
#define RNANET_VERSION "0.0.0"
#endif

namespace rnanet::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Options {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  // norms only
  fs::path telemetry;
  std::vector<fs::path> features;
  fs::path checkpoint;
  std::optional<std::size_t> top_k;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Output files are only created once everything they hold is computed.
void write_artifacts(const fs::path& dir,
                     const std::vector<std::pair<std::string, std::string>>& files,
                     RunManifest& manifest) {
  fs::create_directories(dir);
  for (const auto& [name, contents] : files) {
    write_file_atomic(dir / name, contents);
    manifest.artifacts.push_back(dir / name);
  }
}

void write_manifest(const fs::path& dir, RunManifest& manifest, Clock::time_point t0) {
  manifest.duration_seconds = seconds_since(t0);
  write_file_atomic(dir / "manifest.json", manifest.to_json());
}

std::string format_percent(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

int cmd_generate(const Options& o, std::ostream& out) {
  const auto t0 = Clock::now();
  BenchmarkSpec spec;
  if (!o.config.empty()) spec = parse_benchmark_spec(read_file(o.config));
  if (o.seed) spec.seed = *o.seed;
  spec.validate();
  const auto domains = generate_benchmark(spec);

  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& d : domains) {
    const std::string stem = "d" + std::to_string(d.id + 1);
    files.emplace_back(stem + "_train.rnafeat", format_feature_file(d.train));
    files.emplace_back(stem + "_test.rnafeat", format_feature_file(d.test));
  }
  ExperimentConfig resolved;
  resolved.benchmark = spec;
  RunManifest manifest{"generate", version(), format_experiment_config(resolved), {}, 0.0};
  write_artifacts(o.out, files, manifest);
  write_manifest(o.out, manifest, t0);
  if (!o.quiet) {
    out << "wrote " << files.size() << " feature files to " << o.out.string() << "\n";
  }
  return kSuccess;
}

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig c = load_experiment_config(o.config);
  if (o.seed) {
    c.train.seed = *o.seed;
    c.seeds = {*o.seed};
  }
  return c;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto t0 = Clock::now();
  const ExperimentConfig c = load_config(o);
  const auto domains = load_domains(c);
  const DomainPair pair = c.pair(domains.size());
  const RunOutcome run = run_single(c.train, c.setting, domains, pair);

  std::vector<std::pair<std::string, std::string>> files{
      {"checkpoint.bin", serialize_checkpoint(run.train.model)},
      {"telemetry.csv", run.train.telemetry.to_csv()},
  };
  if (c.setting == Setting::uda) {
    files.emplace_back("telemetry_target.csv", run.train.telemetry.target_to_csv());
  }
  RunManifest manifest{"train", version(), format_experiment_config(c), {}, 0.0};
  write_artifacts(o.out, files, manifest);
  write_manifest(o.out, manifest, t0);

  out << "setting=" << to_string(c.setting) << " aux=" << to_string(c.train.aux)
      << " acc=" << format_double(run.accuracy) << "\n";
  if (!o.quiet) {
    out << "pair " << pair.label() << ", final-model acc=" << format_double(run.accuracy_final_model)
        << ", artifacts in " << o.out.string() << "\n";
  }
  return kSuccess;
}

int cmd_matrix(const Options& o, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const ExperimentConfig c = load_config(o);
  const auto domains = load_domains(c);
  const auto pairs = standard_pairs(c.setting, domains.size());
  const ResultsTable table =
      run_experiment_matrix(c, pairs, c.methods, c.seeds, domains, c.threads);

  RunManifest manifest{"matrix", version(), format_experiment_config(c), {}, 0.0};
  write_artifacts(o.out, {{"results.csv", table.to_csv()}, {"results_std.csv", table.stddev_to_csv()}},
                  manifest);
  write_manifest(o.out, manifest, t0);

  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.failed.size(); ++j) {
      if (row.failed[j]) err << "warning: " << row.method << " on " << table.columns[j] << " failed\n";
    }
  }
  if (!o.quiet) {
    out << "method";
    for (const auto& col : table.columns) out << "\t" << col;
    out << "\tmean\n";
    for (const auto& row : table.rows) {
      out << row.method;
      for (double v : row.mean) out << "\t" << format_percent(v);
      out << "\t" << format_percent(row.mean_over_pairs) << "\n";
    }
  }
  return kSuccess;
}

std::string norms_from_telemetry(const fs::path& path) {
  const NormTelemetry t = NormTelemetry::from_csv(read_file(path));
  if (t.empty()) throw ParseError(path.string() + ": telemetry has no records");
  const auto& last = t.records().back();
  std::string csv = "input,iterations,mean_norm_v,mean_norm_a,delta,rho,head_abs_rho_dev,tail_abs_rho_dev\n";
  csv += path.filename().string() + "," + std::to_string(t.records().size()) + "," +
         format_double(last.mean_norm_visual) + "," + format_double(last.mean_norm_audio) + "," +
         format_double(last.delta) + "," + format_double(last.rho) + "," +
         format_double(t.mean_abs_rho_deviation_head(0.1)) + "," +
         format_double(t.mean_abs_rho_deviation_tail(0.1)) + "\n";
  return csv;
}

std::string norms_from_features(const Options& o) {
  std::optional<TwoStreamModel> model;
  if (!o.checkpoint.empty()) model = load_checkpoint(o.checkpoint);
  std::string csv = "input,mean_norm_v,mean_norm_a,delta,rho,k_v,topk_share_v,k_a,topk_share_a\n";
  for (const auto& path : o.features) {
    const MultiModalBatch batch = load_feature_file(path);
    Matrix v = batch.visual;
    Matrix a = batch.audio;
    if (model) {
      v = encode(*model, Modality::visual, v).features;
      a = encode(*model, Modality::audio, a).features;
    }
    const NormStats ns = norm_stats(FeatureBatch{v, Modality::visual, std::nullopt},
                                    FeatureBatch{a, Modality::audio, std::nullopt});
    const std::size_t kv = o.top_k.value_or(std::min<std::size_t>(v.cols(), 300));
    const std::size_t ka = o.top_k.value_or(std::min<std::size_t>(a.cols(), 300));
    csv += path.filename().string() + "," + format_double(ns.mean_norm_visual) + "," +
           format_double(ns.mean_norm_audio) + "," + format_double(ns.delta) + "," +
           format_double(ns.rho) + "," + std::to_string(kv) + "," +
           format_double(top_k_norm_share(v, kv)) + "," + std::to_string(ka) + "," +
           format_double(top_k_norm_share(a, ka)) + "\n";
  }
  return csv;
}

int cmd_norms(const Options& o, std::ostream& out) {
  const auto t0 = Clock::now();
  if (o.telemetry.empty() == o.features.empty()) {
    throw ConfigError("norms: give either --telemetry or --features");
  }
  if (!o.checkpoint.empty() && o.features.empty()) {
    throw ConfigError("norms: --checkpoint applies to --features only");
  }
  if (o.top_k && *o.top_k == 0) throw ConfigError("norms: --top-k must be positive");
  const std::string csv = o.features.empty() ? norms_from_telemetry(o.telemetry) : norms_from_features(o);
  if (!o.out.empty()) {
    RunManifest manifest{"norms", version(), "", {}, 0.0};
    write_artifacts(o.out, {{"norms.csv", csv}}, manifest);
    write_manifest(o.out, manifest, t0);
  }
  if (!o.quiet || o.out.empty()) out << csv;
  return kSuccess;
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = version;
  j["config"] = config;
  j["artifacts"] = nlohmann::json::array();
  for (const auto& p : artifacts) j["artifacts"].push_back(p.string());
  j["duration_seconds"] = duration_seconds;
  return j.dump(2) + "\n";
}

std::string version() { return RNANET_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stream audio-visual training with relative norm alignment", "rnanet"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  Options o;
  std::uint64_t seed = 0;
  std::size_t top_k = 0;
  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
    if (config_required) c->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_flag("--quiet", o.quiet, "only print the summary line");
  };
  auto* gen = app.add_subcommand("generate", "write a synthetic benchmark as feature files");
  common(gen, false);
  gen->add_option("--out", o.out, "output directory")->required();
  auto* train = app.add_subcommand("train", "train one configuration and report target accuracy");
  common(train, true);
  train->add_option("--out", o.out, "output directory")->required();
  auto* matrix = app.add_subcommand("matrix", "run every method on every domain pair");
  common(matrix, true);
  matrix->add_option("--out", o.out, "output directory")->required();
  auto* norms = app.add_subcommand("norms", "report feature norms from telemetry or feature files");
  norms->add_option("--telemetry", o.telemetry, "telemetry CSV")->check(CLI::ExistingFile);
  norms->add_option("--features", o.features, "RNAFEAT files")->check(CLI::ExistingFile);
  norms->add_option("--checkpoint", o.checkpoint, "encode features with this model first")
      ->check(CLI::ExistingFile);
  norms->add_option("--top-k", top_k, "feature dimensions in the top-k share (default min(D, 300))");
  norms->add_option("--out", o.out, "also write norms.csv here");
  norms->add_flag("--quiet", o.quiet, "do not echo the report when --out is given");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigFailure;
  }
  for (auto* sub : {gen, train, matrix}) {
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;
  }
  if (norms->count("--top-k") > 0) o.top_k = top_k;

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (matrix->parsed()) return cmd_matrix(o, out, err);
    return cmd_norms(o, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const DegenerateInputError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    // ConfigError, ParseError and I/O failures alike.
    err << "error: " << e.what() << "\n";
    return kConfigFailure;
  }
}

}  // namespace rnanet::cli
