// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rnanet::cli {

enum ExitCode : int {
  kSuccess = 0,
  kNumericalFailure = 1,
  kConfigFailure = 2,
};

/// What a successful command leaves behind. Every listed path exists.
struct RunManifest {
  std::string command;
  std::string version;
  /// Canonical text of the resolved configuration.
  std::string config;
  std::vector<std::filesystem::path> artifacts;
  double duration_seconds = 0.0;

  std::string to_json() const;
};

std::string version();

/// Full command-line entry point; `args` excludes the program name.
/// Returns the process exit code. Nothing is written on failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rnanet::cli
