// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rnanet {

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient, (f(x + eps e_i) - f(x - eps e_i)) / 2 eps.
std::vector<double> finite_difference_grad(const ScalarFunction& f, std::span<const double> x,
                                           double eps = 1e-6);

/// ||a - b|| / max(||a||, ||b||), or the absolute difference when both norms
/// fall below `floor`.
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-10);

}  // namespace rnanet
