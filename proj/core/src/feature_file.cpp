// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/feature_file.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "rnanet/errors.hpp"
#include "rnanet/io.hpp"

namespace rnanet {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("RNAFEAT line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T v{};
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) {
    fail(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) fail(line, "non-finite value '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

std::string format_feature_file(const MultiModalBatch& batch) {
  batch.validate();
  std::string out = "RNAFEAT v1 " + std::to_string(batch.size()) + " " +
                    std::to_string(batch.visual.cols()) + " " + std::to_string(batch.audio.cols()) +
                    " " + (batch.labeled() ? "1" : "0") + "\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    bool first = true;
    auto emit = [&](const std::string& s) {
      if (!first) out += ' ';
      out += s;
      first = false;
    };
    for (double v : batch.visual.row(i)) emit(format_double(v));
    for (double v : batch.audio.row(i)) emit(format_double(v));
    if (batch.labeled()) emit(std::to_string((*batch.labels)[i]));
    out += '\n';
  }
  return out;
}

MultiModalBatch parse_feature_file(std::string_view text, int domain_id) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty()) fail(1, "empty file, missing header");

  const auto header = split_ws(lines[0]);
  if (header.size() != 6 || header[0] != "RNAFEAT" || header[1] != "v1") {
    fail(1, "malformed header, expected 'RNAFEAT v1 N Dv Da labeled'");
  }
  const auto n = parse_number<std::size_t>(header[2], 1, "sample count");
  const auto dv = parse_number<std::size_t>(header[3], 1, "visual width");
  const auto da = parse_number<std::size_t>(header[4], 1, "audio width");
  const auto labeled_flag = parse_number<int>(header[5], 1, "labeled flag");
  if (labeled_flag != 0 && labeled_flag != 1) fail(1, "labeled flag must be 0 or 1");
  const bool labeled = labeled_flag == 1;
  if (dv == 0 || da == 0) fail(1, "modality widths must be positive");

  std::vector<double> visual;
  std::vector<double> audio;
  std::vector<int> labels;
  visual.reserve(n * dv);
  audio.reserve(n * da);
  std::size_t rows = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto toks = split_ws(lines[li]);
    if (toks.empty()) continue;
    if (rows == n) fail(line_no, "more sample rows than the header's N = " + std::to_string(n));
    const std::size_t expect = dv + da + (labeled ? 1 : 0);
    if (toks.size() != expect) {
      // A row that is exactly one modality's width short is a pairing error.
      if (toks.size() + da == expect || toks.size() + dv == expect) {
        fail(line_no, "modality pairing error: row carries " + std::to_string(toks.size()) +
                          " values, expected visual " + std::to_string(dv) + " + audio " +
                          std::to_string(da));
      }
      fail(line_no, "expected " + std::to_string(expect) + " values, found " +
                        std::to_string(toks.size()));
    }
    for (std::size_t j = 0; j < dv; ++j) visual.push_back(parse_number<double>(toks[j], line_no, "value"));
    for (std::size_t j = 0; j < da; ++j) {
      audio.push_back(parse_number<double>(toks[dv + j], line_no, "value"));
    }
    if (labeled) {
      const int y = parse_number<int>(toks[dv + da], line_no, "label");
      if (y < 0) fail(line_no, "negative label");
      labels.push_back(y);
    }
    ++rows;
  }
  if (rows != n) {
    fail(lines.size(), "truncated: header declares " + std::to_string(n) + " rows, found " +
                           std::to_string(rows));
  }
  MultiModalBatch batch{Matrix(n, dv, std::move(visual)), Matrix(n, da, std::move(audio)),
                        std::nullopt, domain_id};
  if (labeled) batch.labels = std::move(labels);
  return batch;
}

void save_feature_file(const MultiModalBatch& batch, const std::filesystem::path& path) {
  write_file_atomic(path, format_feature_file(batch));
}

MultiModalBatch load_feature_file(const std::filesystem::path& path, int domain_id) {
  return parse_feature_file(read_file(path), domain_id);
}

}  // namespace rnanet
