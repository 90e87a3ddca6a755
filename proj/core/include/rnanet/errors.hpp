// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rnanet {

/// Invalid dimensions, out-of-range settings, or a call that does not fit
/// the object's configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input on which a quantity is mathematically undefined (zero mean norm,
/// zero-length rows under a cosine).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content. The message names the line or byte offset.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values reached a loss, gradient, or parameter update.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rnanet
