// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/optim.hpp"

#include <cmath>
#include <string>

#include "rnanet/errors.hpp"

namespace rnanet {

void Sgd::step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) {
    throw ConfigError("Sgd::step: " + std::to_string(params.size()) + " parameters but " +
                      std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size() != grads[p].size()) {
      throw ConfigError("Sgd::step: gradient " + std::to_string(p) + " has " +
                        std::to_string(grads[p].size()) + " entries, parameter has " +
                        std::to_string(params[p].size()));
    }
    for (std::size_t i = 0; i < grads[p].size(); ++i) {
      if (!std::isfinite(grads[p][i])) {
        throw NumericalError("Sgd::step: non-finite gradient in parameter " + std::to_string(p) +
                             " at entry " + std::to_string(i));
      }
    }
  }
  if (velocity_.empty()) {
    velocity_.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) velocity_[p].assign(params[p].size(), 0.0);
  } else if (velocity_.size() != params.size()) {
    throw ConfigError("Sgd::step: parameter list changed between steps");
  }

  const auto [lr, mu, wd] = config_;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& v = velocity_[p];
    if (v.size() != params[p].size()) throw ConfigError("Sgd::step: parameter shape changed");
    auto x = params[p];
    auto g = grads[p];
    for (std::size_t i = 0; i < x.size(); ++i) {
      v[i] = mu * v[i] + g[i] + wd * x[i];
      x[i] -= lr * v[i];
    }
  }
}

}  // namespace rnanet
