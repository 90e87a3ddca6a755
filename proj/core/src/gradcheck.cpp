// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rnanet/errors.hpp"
#include "rnanet/matrix.hpp"

namespace rnanet {

std::vector<double> finite_difference_grad(const ScalarFunction& f, std::span<const double> x,
                                           double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_difference_grad: eps must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = f(probe);
    probe[i] = saved - eps;
    const double down = f(probe);
    probe[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ConfigError("relative_error: length mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  diff = std::sqrt(diff);
  const double scale = std::max(l2_norm(a), l2_norm(b));
  return scale < floor ? diff : diff / scale;
}

}  // namespace rnanet
