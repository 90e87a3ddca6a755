// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rnanet/model.hpp"

namespace rnanet {

// Checkpoint layout, all integers little-endian u32, all reals little-endian
// IEEE-754 f64:
//
//   "RNA1"
//   u32 header_count (= 9)
//   u32 visual_input, audio_input, hidden, feature_dim, num_classes,
//       encoder_layers, fusion (0 late, 1 mid), batchnorm (0|1),
//       tensor_count
//   tensor_count parameter tensors in parameter_spans() order, each as its
//       raw f64 values (shapes follow from the header)
//   if batchnorm: for visual then audio, running_mean[D], running_var[D],
//       momentum, epsilon

std::string serialize_checkpoint(const TwoStreamModel& model);
/// Throws ParseError naming the byte offset on malformed input.
TwoStreamModel deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const TwoStreamModel& model, const std::filesystem::path& path);
TwoStreamModel load_checkpoint(const std::filesystem::path& path);

}  // namespace rnanet
