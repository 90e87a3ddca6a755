// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rnanet/data.hpp"

namespace rnanet {

// RNAFEAT v1 text format:
//
//   RNAFEAT v1 <N> <Dv> <Da> <labeled 0|1>
//   <Dv visual floats> <Da audio floats> [<label>]     (N lines)
//
// Whitespace-separated decimal values, written in shortest round-trip form
// so a save/load cycle is lossless. The domain id is not stored; loaders
// assign it.

std::string format_feature_file(const MultiModalBatch& batch);
/// Throws ParseError naming the line on any malformed content.
MultiModalBatch parse_feature_file(std::string_view text, int domain_id = 0);

void save_feature_file(const MultiModalBatch& batch, const std::filesystem::path& path);
MultiModalBatch load_feature_file(const std::filesystem::path& path, int domain_id = 0);

}  // namespace rnanet
