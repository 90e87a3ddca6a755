// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <span>
#include <vector>

namespace rnanet {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

/// SGD with heavy-ball momentum and L2 weight decay:
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - lr * v
/// Velocity buffers are created on the first step and must keep their shapes.
class Sgd {
 public:
  explicit Sgd(SgdConfig config) : config_(config) {}

  /// Throws NumericalError without touching any parameter if a gradient is
  /// non-finite, ConfigError on shape mismatch.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads);

  const SgdConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& velocity() const { return velocity_; }

 private:
  SgdConfig config_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace rnanet
