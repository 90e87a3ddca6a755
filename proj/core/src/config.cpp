// Copyright 2026 The rnanet Authors
//
// Licensed under the Apache License, Version 2.0

#include "rnanet/config.hpp"

#include <charconv>
#include <cmath>

#include "rnanet/errors.hpp"
#include "rnanet/io.hpp"

namespace rnanet {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string qualified(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

class Reader {
 public:
  explicit Reader(const IniFile& ini) : ini_(ini) {}

  template <typename T>
  void number(std::string_view section, std::string_view key, T& out) {
    auto v = ini_.get(section, key);
    if (!v) return;
    T parsed{};
    auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
    if (ec != std::errc() || end != v->data() + v->size()) {
      throw ConfigError("config: " + qualified(section, key) + " = '" + *v + "' is not a valid number");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(parsed)) throw ConfigError("config: " + qualified(section, key) + " must be finite");
    }
    out = parsed;
  }

  void boolean(std::string_view section, std::string_view key, bool& out) {
    auto v = ini_.get(section, key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      throw ConfigError("config: " + qualified(section, key) + " must be true or false");
    }
  }

  // 1-based domain number in the file, 0-based in memory.
  void domain(std::string_view section, std::string_view key, int& out) {
    int one_based = out + 1;
    number(section, key, one_based);
    if (one_based < 1) throw ConfigError("config: " + qualified(section, key) + " must be >= 1 (D1 is 1)");
    out = one_based - 1;
  }

  std::optional<std::string> text(std::string_view section, std::string_view key) {
    return ini_.get(section, key);
  }

 private:
  const IniFile& ini_;
};

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    auto item = trim(s.substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

void read_benchmark(Reader& r, BenchmarkSpec& b) {
  constexpr std::string_view s = "benchmark";
  r.number(s, "num_domains", b.num_domains);
  r.number(s, "num_classes", b.num_classes);
  r.number(s, "visual_dim", b.visual_dim);
  r.number(s, "audio_dim", b.audio_dim);
  r.number(s, "samples_per_class", b.samples_per_class);
  r.number(s, "prototype_scale", b.prototype_scale);
  r.number(s, "transform_strength", b.transform_strength);
  r.number(s, "visual_shift_scale", b.visual_shift_scale);
  r.number(s, "audio_shift_scale", b.audio_shift_scale);
  r.number(s, "noise_sigma", b.noise_sigma);
  r.number(s, "audio_norm_scale", b.audio_norm_scale);
  r.number(s, "train_fraction", b.train_fraction);
  r.number(s, "class_skew", b.class_skew);
  r.number(s, "seed", b.seed);
}

void reject_unused(const IniFile& ini) {
  auto unused = ini.unused_keys();
  if (!unused.empty()) throw ConfigError("config: unknown key '" + *unused.begin() + "'");
}

void reject_unknown_sections(const IniFile& ini, std::initializer_list<std::string_view> allowed,
                             std::string_view text) {
  // Sections are re-scanned so an empty unknown section is still reported.
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      auto name = trim(line.substr(1, line.size() - 2));
      bool ok = false;
      for (auto a : allowed) ok = ok || name == a;
      if (!ok) throw ConfigError("config: unknown section [" + std::string(name) + "]");
    }
  }
  (void)ini;
}

}  // namespace

IniFile IniFile::parse(std::string_view text) {
  IniFile ini;
  std::string section;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError("config line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      ini.sections_.insert(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    auto [it, inserted] = ini.values_.emplace(qualified(section, key), std::string(value));
    if (!inserted) {
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" + it->first + "'");
    }
  }
  return ini;
}

bool IniFile::has_section(std::string_view section) const { return sections_.contains(section); }

std::optional<std::string> IniFile::get(std::string_view section, std::string_view key) const {
  const auto q = qualified(section, key);
  used_.insert(q);
  auto it = values_.find(q);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> IniFile::unused_keys() const {
  std::set<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.contains(k)) out.insert(k);
  }
  return out;
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  const IniFile ini = IniFile::parse(text);
  reject_unknown_sections(ini, {"benchmark", "data", "experiment", "model", "optimizer", "matrix"},
                          text);
  Reader r(ini);
  ExperimentConfig c;
  read_benchmark(r, c.benchmark);

  if (auto dir = r.text("data", "dir")) {
    std::filesystem::path p(*dir);
    c.data_dir = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  constexpr std::string_view e = "experiment";
  if (auto s = r.text(e, "setting")) c.setting = setting_from_string(*s);
  r.domain(e, "source", c.source);
  r.domain(e, "target", c.target);
  if (auto a = r.text(e, "aux")) c.train.aux = aux_loss_from_string(*a);
  r.number(e, "lambda", c.train.lambda);
  if (auto h = r.text(e, "hna_target"); h && *h != "auto") {
    double v = 0.0;
    r.number(e, "hna_target", v);
    c.train.hna_target = v;
  }
  r.number(e, "iterations", c.train.iterations);
  r.number(e, "batch_size", c.train.batch_size);
  r.number(e, "checkpoint_average", c.train.checkpoint_average);
  r.number(e, "checkpoint_interval", c.train.checkpoint_interval);
  r.number(e, "seed", c.train.seed);
  r.boolean(e, "shuffle_target", c.train.shuffle_target);

  constexpr std::string_view m = "model";
  r.number(m, "hidden", c.train.model.hidden);
  r.number(m, "feature_dim", c.train.model.feature_dim);
  r.number(m, "encoder_layers", c.train.model.encoder_layers);
  if (auto f = r.text(m, "fusion")) c.train.model.fusion = fusion_mode_from_string(*f);
  r.boolean(m, "batchnorm", c.train.model.batchnorm);

  constexpr std::string_view o = "optimizer";
  r.number(o, "learning_rate", c.train.optimizer.learning_rate);
  r.number(o, "momentum", c.train.optimizer.momentum);
  r.number(o, "weight_decay", c.train.optimizer.weight_decay);

  constexpr std::string_view x = "matrix";
  if (auto ms = r.text(x, "methods")) {
    c.methods.clear();
    for (const auto& name : split_list(*ms)) c.methods.push_back(method_from_string(name));
  }
  if (auto ss = r.text(x, "seeds")) {
    c.seeds.clear();
    for (const auto& tok : split_list(*ss)) {
      std::uint64_t v = 0;
      auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || end != tok.data() + tok.size()) {
        throw ConfigError("config: matrix.seeds entry '" + tok + "' is not an unsigned integer");
      }
      c.seeds.push_back(v);
    }
  }
  r.number(x, "threads", c.threads);

  reject_unused(ini);
  c.train.model.num_classes = c.benchmark.num_classes;
  c.train.model.visual_input = c.benchmark.visual_dim;
  c.train.model.audio_input = c.benchmark.audio_dim;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path), path.parent_path());
}

BenchmarkSpec parse_benchmark_spec(std::string_view text) {
  const IniFile ini = IniFile::parse(text);
  Reader r(ini);
  BenchmarkSpec b;
  read_benchmark(r, b);
  b.validate();
  return b;
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::string out;
  auto kv = [&](std::string_view k, const std::string& v) {
    out += std::string(k) + " = " + v + "\n";
  };
  const auto& b = c.benchmark;
  if (c.data_dir) {
    out += "[data]\n";
    kv("dir", c.data_dir->string());
  } else {
    out += "[benchmark]\n";
    kv("num_domains", std::to_string(b.num_domains));
    kv("num_classes", std::to_string(b.num_classes));
    kv("visual_dim", std::to_string(b.visual_dim));
    kv("audio_dim", std::to_string(b.audio_dim));
    kv("samples_per_class", std::to_string(b.samples_per_class));
    kv("prototype_scale", format_double(b.prototype_scale));
    kv("transform_strength", format_double(b.transform_strength));
    kv("visual_shift_scale", format_double(b.visual_shift_scale));
    kv("audio_shift_scale", format_double(b.audio_shift_scale));
    kv("noise_sigma", format_double(b.noise_sigma));
    kv("audio_norm_scale", format_double(b.audio_norm_scale));
    kv("train_fraction", format_double(b.train_fraction));
    kv("class_skew", format_double(b.class_skew));
    kv("seed", std::to_string(b.seed));
  }
  const auto& t = c.train;
  out += "\n[experiment]\n";
  kv("setting", std::string(to_string(c.setting)));
  kv("source", std::to_string(c.source + 1));
  kv("target", std::to_string(c.target + 1));
  kv("aux", std::string(to_string(t.aux)));
  kv("lambda", format_double(t.lambda));
  kv("hna_target", t.hna_target ? format_double(*t.hna_target) : std::string("auto"));
  kv("iterations", std::to_string(t.iterations));
  kv("batch_size", std::to_string(t.batch_size));
  kv("checkpoint_average", std::to_string(t.checkpoint_average));
  kv("checkpoint_interval", std::to_string(t.checkpoint_interval));
  kv("seed", std::to_string(t.seed));
  kv("shuffle_target", t.shuffle_target ? "true" : "false");
  out += "\n[model]\n";
  kv("hidden", std::to_string(t.model.hidden));
  kv("feature_dim", std::to_string(t.model.feature_dim));
  kv("encoder_layers", std::to_string(t.model.encoder_layers));
  kv("fusion", std::string(to_string(t.model.fusion)));
  kv("batchnorm", t.model.batchnorm ? "true" : "false");
  out += "\n[optimizer]\n";
  kv("learning_rate", format_double(t.optimizer.learning_rate));
  kv("momentum", format_double(t.optimizer.momentum));
  kv("weight_decay", format_double(t.optimizer.weight_decay));
  out += "\n[matrix]\n";
  std::string methods;
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    methods += (i ? ", " : "") + std::string(to_string(c.methods[i]));
  }
  kv("methods", methods);
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? ", " : "") + std::to_string(c.seeds[i]);
  kv("seeds", seeds);
  kv("threads", std::to_string(c.threads));
  return out;
}

}  // namespace rnanet
