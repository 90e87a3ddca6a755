// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "rnanet/checkpoint.hpp"
#include "rnanet/config.hpp"
#include "rnanet/experiment.hpp"
#include "rnanet/feature_file.hpp"
#include "rnanet/io.hpp"
#include "rnanet/losses.hpp"
#include "suites.hpp"

namespace fs = std::filesystem;
using namespace rnanet;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void suite_criterion(int criterion, const std::vector<testing::CheckResult>& results, double tol,
                     double runtime, double budget, std::size_t min_instances) {
  bool ok = runtime < budget;
  std::size_t total = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    total += r.instances;
    if (r.failed_to_run || !(r.worst < tol) || r.instances < min_instances) {
      ok = false;
      std::printf("  %s: %zu instances, worst %.3g%s\n", r.name.c_str(), r.instances, r.worst,
                  r.failed_to_run ? " (failed to run)" : "");
    }
    if (r.worst > worst) {
      worst = r.worst;
      worst_name = r.name;
    }
  }
  report(criterion, ok,
         std::to_string(results.size()) + " checks, " + std::to_string(total) + " instances, worst " +
             fmt("%.3g", worst) + " (" + worst_name + ")" + fmt(", %.2fs", runtime));
}

void criterion_3() {
  const FeatureBatch v = testing::visual_batch(Matrix{{3, 4}, {0, 5}});
  const FeatureBatch a = testing::audio_batch(Matrix{{1, 0}, {0, 2}});
  const NormStats s = norm_stats(v, a);
  const LossResult l = rna_loss(v, a);
  const LossResult same = rna_loss(v, testing::audio_batch(v.features));
  const NormStats same_stats = norm_stats(v, testing::audio_batch(v.features));
  const bool ok = std::abs(s.delta - 3.5) < 1e-12 && std::abs(s.rho - 10.0 / 3.0) < 1e-12 &&
                  std::abs(l.value - 49.0 / 9.0) < 1e-12 && same_stats.delta == 0.0 && same.value == 0.0;
  report(3, ok, fmt("delta=%.15g rho=%.15g L=%.15g; identical batches delta=%g", s.delta, s.rho, l.value,
                    same_stats.delta) +
                    fmt(" L=%g", same.value));
}

void criterion_4(const ExperimentConfig& base, std::span<const Domain> domains) {
  const auto t0 = Clock::now();
  TrainConfig t = apply_method(base.train, Method::rna);
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    t.seed = seed;
    const auto r = run_single(t, Setting::dg_single, domains, {{0}, 1});
    const double head = r.train.telemetry.mean_abs_rho_deviation_head(0.1);
    const double tail = r.train.telemetry.mean_abs_rho_deviation_tail(0.1);
    ok = ok && tail < head && tail < 0.1;
    detail += fmt(" seed %.0f: %.3f->%.4f;", double(seed), head, tail);
  }
  const double runtime = since(t0);
  ok = ok && runtime < 300.0;
  report(4, ok, "first/last-decile |rho-1| over " + std::to_string(t.iterations) + " iterations:" + detail +
                    fmt(" %.1fs", runtime));
}

struct Matrices {
  ResultsTable single;
  ResultsTable multi;
  ResultsTable uda;
  double dg_seconds = 0.0;
  double uda_seconds = 0.0;
};

Matrices run_matrices(const ExperimentConfig& base, std::span<const Domain> domains) {
  Matrices m;
  const std::vector<Method> methods{Method::source_only, Method::rna, Method::hna, Method::rna_mid};
  const std::vector<Method> uda_methods{Method::rna};
  auto t0 = Clock::now();
  const auto single = standard_pairs(Setting::dg_single, domains.size());
  ExperimentConfig c = base;
  c.setting = Setting::dg_single;
  m.single = run_experiment_matrix(c, single, methods, base.seeds, domains, base.threads);
  c.setting = Setting::dg_multi;
  const auto multi = standard_pairs(Setting::dg_multi, domains.size());
  m.multi = run_experiment_matrix(c, multi, methods, base.seeds, domains, base.threads);
  m.dg_seconds = since(t0);
  t0 = Clock::now();
  c.setting = Setting::uda;
  m.uda = run_experiment_matrix(c, single, uda_methods, base.seeds, domains, base.threads);
  m.uda_seconds = since(t0);
  return m;
}

bool any_failed(const ResultsRow& r) {
  for (bool f : r.failed) {
    if (f) return true;
  }
  return false;
}

void criteria_5_to_7(const Matrices& m) {
  const double s_src = m.single.row("source-only").mean_over_pairs;
  const double s_rna = m.single.row("rna").mean_over_pairs;
  const double m_src = m.multi.row("source-only").mean_over_pairs;
  const double m_rna = m.multi.row("rna").mean_over_pairs;
  report(5, s_rna - s_src >= 2.0 && m_rna - m_src >= 2.0 && m.dg_seconds < 1800.0,
         fmt("single-source rna %.2f vs source-only %.2f (%+.2f); ", s_rna, s_src, s_rna - s_src) +
             fmt("multi-source rna %.2f vs source-only %.2f (%+.2f); ", m_rna, m_src, m_rna - m_src) +
             fmt("%.0fs", m.dg_seconds));

  const double u_rna = m.uda.row("rna").mean_over_pairs;
  report(6, u_rna - s_rna >= 0.0 && m.uda_seconds < 1800.0,
         fmt("uda rna %.2f vs dg-style rna %.2f (%+.3f); %.0fs", u_rna, s_rna, u_rna - s_rna, m.uda_seconds));

  const double s_hna = m.single.row("hna").mean_over_pairs;
  const double m_hna = m.multi.row("hna").mean_over_pairs;
  const auto& s_mid = m.single.row("rna-mid");
  const auto& m_mid = m.multi.row("rna-mid");
  const bool mid_ok = !any_failed(s_mid) && !any_failed(m_mid);
  report(7, s_rna >= s_hna && m_rna >= m_hna && mid_ok,
         fmt("single rna %.2f vs hna %.2f; multi rna %.2f vs hna %.2f; ", s_rna, s_hna, m_rna, m_hna) +
             fmt("rna-mid %.2f / %.2f", s_mid.mean_over_pairs, m_mid.mean_over_pairs) +
             (mid_ok ? "" : " (rna-mid cells failed)"));
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

void criterion_8() {
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };

  BenchmarkSpec spec;
  spec.num_classes = 4;
  spec.visual_dim = 8;
  spec.audio_dim = 6;
  spec.samples_per_class = 20;
  const auto domains = generate_benchmark(spec);

  // Target-label hygiene.
  TrainConfig t;
  t.model.visual_input = 8;
  t.model.audio_input = 6;
  t.model.num_classes = 4;
  t.model.hidden = 16;
  t.model.feature_dim = 8;
  t.iterations = 100;
  t.batch_size = 16;
  t.checkpoint_interval = 20;
  t.checkpoint_average = 3;
  auto corrupted = domains;
  for (int& y : *corrupted[1].train.labels) y = (y + 3) % 4;
  const auto clean = make_uda_split(domains, 0, 1);
  const auto dirty = make_uda_split(corrupted, 0, 1);
  const auto a = train_uda(t, clean.source, clean.target_train);
  const auto b = train_uda(t, dirty.source, dirty.target_train);
  expect(serialize_checkpoint(a.model) == serialize_checkpoint(b.model) &&
             a.telemetry.to_csv() == b.telemetry.to_csv() &&
             a.telemetry.target_to_csv() == b.telemetry.target_to_csv(),
         "target labels leak into uda training");

  // Lossless round-trips.
  for (const auto& d : domains) {
    const std::string text = format_feature_file(d.test);
    const auto back = parse_feature_file(text, d.test.domain_id);
    expect(back == d.test && format_feature_file(back) == text, "RNAFEAT round-trip");
  }
  const std::string bytes = serialize_checkpoint(a.model);
  const auto model = deserialize_checkpoint(bytes);
  expect(model == a.model && serialize_checkpoint(model) == bytes, "checkpoint round-trip");

  // End-to-end CLI runs.
  const fs::path dir = fs::temp_directory_path() / ("rnanet_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bench = "[benchmark]\nnum_classes = 4\nvisual_dim = 8\naudio_dim = 6\nsamples_per_class = 20\n";
  const std::string run = bench +
                          "[experiment]\nsetting = uda\nsource = 2\ntarget = 3\niterations = 100\n"
                          "batch_size = 16\ncheckpoint_interval = 20\ncheckpoint_average = 3\n"
                          "[model]\nhidden = 16\nfeature_dim = 8\n";
  write_file_atomic(dir / "bench.ini", bench);
  write_file_atomic(dir / "run.ini", run);
  write_file_atomic(dir / "bad.ini", "[benchmark]\nnum_domains = 1\n");
  write_file_atomic(dir / "diverge.ini", run + "[optimizer]\nlearning_rate = 1e6\nmomentum = 0\n");
  const auto p = [&](const char* name) { return (dir / name).string(); };

  expect(cli({"generate", "--config", p("bench.ini"), "--out", p("g1")}) == 0, "generate exit 0");
  expect(cli({"generate", "--config", p("bench.ini"), "--out", p("g2")}) == 0, "generate exit 0");
  for (const char* f : {"d1_train.rnafeat", "d2_test.rnafeat", "d3_train.rnafeat"}) {
    expect(read_file(dir / "g1" / f) == read_file(dir / "g2" / f), std::string("rerun differs: ") + f);
  }
  expect(cli({"train", "--config", p("run.ini"), "--out", p("t1"), "--seed", "5"}) == 0, "train exit 0");
  expect(cli({"train", "--config", p("run.ini"), "--out", p("t2"), "--seed", "5"}) == 0, "train exit 0");
  for (const char* f : {"checkpoint.bin", "telemetry.csv", "telemetry_target.csv"}) {
    expect(read_file(dir / "t1" / f) == read_file(dir / "t2" / f), std::string("rerun differs: ") + f);
  }
  expect(cli({"norms", "--telemetry", p("t1/telemetry.csv")}) == 0, "norms exit 0");
  expect(cli({"generate", "--config", p("bad.ini"), "--out", p("bad")}) == 2, "invalid config exit 2");
  expect(!fs::exists(dir / "bad"), "failed run left output");
  expect(cli({"train", "--config", p("missing.ini"), "--out", p("m")}) == 2, "missing config exit 2");
  expect(cli({"train", "--config", p("diverge.ini"), "--out", p("div")}) == 1, "divergence exit 1");
  expect(!fs::exists(dir / "div"), "diverged run left output");
  expect(cli({"frobnicate"}) == 2, "unknown subcommand exit 2");
  fs::remove_all(dir);

  std::string detail = "label hygiene, RNAFEAT/checkpoint round-trips, byte-identical reruns, exit codes 0/1/2";
  for (const auto& pr : problems) detail += "; " + pr;
  report(8, problems.empty(), detail);
}

}  // namespace

int main() {
  auto t0 = Clock::now();
  const auto grads = testing::gradient_oracle_suite(2026, 100);
  suite_criterion(1, grads, 1e-5, since(t0), 10.0, 100);

  t0 = Clock::now();
  const auto inv = testing::invariance_suite(2026, 100);
  suite_criterion(2, inv, 1e-9, since(t0), 5.0, 100);

  criterion_3();

  const ExperimentConfig base = parse_experiment_config("");
  const auto domains = load_domains(base);
  criterion_4(base, domains);
  criteria_5_to_7(run_matrices(base, domains));
  criterion_8();

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
