#pragma once

// JSON loading for model and GPU configs. Bare names (no '/' or
// '.json') resolve against the bundled config directory.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "roundpipe/cost_model.hpp"

#ifndef ROUNDPIPE_CONFIG_DIR
#define ROUNDPIPE_CONFIG_DIR ""
#endif

namespace roundpipe {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace config_io {

inline std::filesystem::path resolve(const std::string& name_or_path,
                                     const char* subdir) {
  namespace fs = std::filesystem;
  fs::path p(name_or_path);
  if (fs::exists(p)) return p;
  if (name_or_path.find('/') == std::string::npos) {
    fs::path bundled =
        fs::path(ROUNDPIPE_CONFIG_DIR) / subdir / (name_or_path + ".json");
    if (fs::exists(bundled)) return bundled;
  }
  throw ConfigError("config not found: " + name_or_path);
}

inline nlohmann::json load_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("parse error in " + p.string() + ": " + e.what());
  }
}

inline ModelConfig load_model(const std::string& name_or_path) {
  const auto j = load_json(resolve(name_or_path, "models"));
  ModelConfig m;
  try {
    m.name = j.value("name", name_or_path);
    m.hidden_dim = j.at("hidden_dim").get<double>();
    m.num_heads = j.at("num_heads").get<int>();
    m.num_kv_heads = j.at("num_kv_heads").get<int>();
    m.intermediate_dim = j.at("intermediate_dim").get<double>();
    m.active_experts = j.value("active_experts", 1);
    m.total_experts = j.value("total_experts", 1);
    m.num_layers = j.at("num_layers").get<int>();
    if (j.contains("head_flops_per_token"))
      m.head_flops_per_token = j["head_flops_per_token"].get<double>();
    if (j.contains("head_param_bytes"))
      m.head_param_bytes = j["head_param_bytes"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad model config " + name_or_path + ": " + e.what());
  }
  m.validate();
  return m;
}

inline GpuSpec load_gpu(const std::string& name_or_path) {
  const auto j = load_json(resolve(name_or_path, "gpus"));
  GpuSpec g;
  try {
    g.name = j.value("name", name_or_path);
    g.peak_fp16_flops = j.at("peak_fp16_flops").get<double>();
    g.memory_bytes = j.at("memory_bytes").get<double>();
    g.link_bandwidth = j.at("link_bandwidth").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad gpu config " + name_or_path + ": " + e.what());
  }
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + ": " + name_or_path);
  }
  return g;
}

}  // namespace config_io
}  // namespace roundpipe
