// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

#include "rnanet/errors.hpp"
#include "rnanet/io.hpp"

namespace rnanet {
namespace {

constexpr std::string_view kMagic = "RNA1";
constexpr std::uint32_t kHeaderCount = 9;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8, "f64");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    const double v = std::bit_cast<double>(bits);
    if (!std::isfinite(v)) fail("non-finite value");
    pos_ += 8;
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n, "bytes");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("checkpoint: " + what + " at byte offset " + std::to_string(pos_));
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) fail(std::string("truncated while reading ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const TwoStreamModel& model) {
  const auto& c = model.config;
  const auto tensors = parameter_spans(model.params);
  std::string out(kMagic);
  put_u32(out, kHeaderCount);
  for (std::size_t v : {c.visual_input, c.audio_input, c.hidden, c.feature_dim, c.num_classes,
                        c.encoder_layers}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u32(out, c.fusion == FusionMode::mid ? 1 : 0);
  put_u32(out, c.batchnorm ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (auto t : tensors) {
    for (double v : t) put_f64(out, v);
  }
  if (c.batchnorm) {
    for (Modality m : {Modality::visual, Modality::audio}) {
      const auto& s = *model.bn_state(m);
      for (double v : s.running_mean) put_f64(out, v);
      for (double v : s.running_var) put_f64(out, v);
      put_f64(out, s.momentum);
      put_f64(out, s.epsilon);
    }
  }
  return out;
}

TwoStreamModel deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) {
    throw ParseError("checkpoint: bad magic at byte offset 0 (expected RNA1)");
  }
  if (r.u32() != kHeaderCount) r.fail("unsupported header count");
  ModelConfig c;
  c.visual_input = r.u32();
  c.audio_input = r.u32();
  c.hidden = r.u32();
  c.feature_dim = r.u32();
  c.num_classes = r.u32();
  c.encoder_layers = r.u32();
  const auto fusion = r.u32();
  const auto bn = r.u32();
  if (fusion > 1 || bn > 1) r.fail("invalid fusion/batchnorm flag");
  c.fusion = fusion == 1 ? FusionMode::mid : FusionMode::late;
  c.batchnorm = bn == 1;
  const auto tensor_count = r.u32();

  TwoStreamModel model;
  try {
    model = make_model(c);
  } catch (const ConfigError& e) {
    r.fail(std::string("invalid dimension header (") + e.what() + ")");
  }
  auto tensors = parameter_spans(model.params);
  if (tensor_count != tensors.size()) r.fail("tensor count does not match header dimensions");
  for (auto t : tensors) {
    for (double& v : t) v = r.f64();
  }
  if (c.batchnorm) {
    for (Modality m : {Modality::visual, Modality::audio}) {
      auto& s = *model.bn_state(m);
      for (double& v : s.running_mean) v = r.f64();
      for (double& v : s.running_var) v = r.f64();
      s.momentum = r.f64();
      s.epsilon = r.f64();
    }
  }
  if (!r.done()) r.fail("trailing bytes");
  return model;
}

void save_checkpoint(const TwoStreamModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(model));
}

TwoStreamModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace rnanet
