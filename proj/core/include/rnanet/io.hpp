// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rnanet {

/// Writes to a sibling temporary file, then renames over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Whole file as bytes. Throws ConfigError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace rnanet
