// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include <benchmark/benchmark.h>

#include <random>

#include "rnanet/data.hpp"
#include "rnanet/losses.hpp"
#include "rnanet/matrix.hpp"
#include "rnanet/training.hpp"

namespace {

using rnanet::Matrix;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rnanet::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256);

void BM_RnaLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const rnanet::FeatureBatch v{random_matrix(n, 128, 3), rnanet::Modality::visual, std::nullopt};
  const rnanet::FeatureBatch a{random_matrix(n, 128, 4), rnanet::Modality::audio, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(rnanet::rna_loss(v, a));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RnaLoss)->Arg(32)->Arg(128)->Arg(512);

void BM_TrainIterations(benchmark::State& state) {
  rnanet::BenchmarkSpec spec;
  const auto domains = rnanet::generate_benchmark(spec);
  rnanet::TrainConfig config;
  config.model.visual_input = spec.visual_dim;
  config.model.audio_input = spec.audio_dim;
  config.model.num_classes = spec.num_classes;
  config.iterations = 100;
  config.aux = state.range(0) != 0 ? rnanet::AuxLoss::rna : rnanet::AuxLoss::none;
  const std::span<const rnanet::MultiModalBatch> source(&domains[0].train, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rnanet::train_dg(config, source));
  state.SetItemsProcessed(state.iterations() * config.iterations);
}
BENCHMARK(BM_TrainIterations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
