#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "eval/metrics.hpp"
#include "fpm/fpm.hpp"
#include "model/lcnf.hpp"
#include "model/train.hpp"
#include "sim/dataset.hpp"

namespace lcnf::io {

struct DatasetSplit {
  std::size_t train = 180;
  std::size_t val = 0;
  std::size_t test = 20;
  std::size_t total() const { return train + val + test; }
};

struct StitchConfig {
  std::size_t tile = 64;
  std::size_t overlap = 16;
};

/// Everything a CLI run can be configured with.
struct ExperimentConfig {
  std::string profile = "desk";
  sim::DatasetConfig dataset;
  DatasetSplit split;
  std::size_t sequential_leds = 185;
  model::LcnfConfig model;
  model::TrainOptions training;
  fpm::FpmConfig fpm;
  double fm_threshold_ratio = 1000.0;
  StitchConfig stitch;

  void validate() const;
};

/// Built-in profile defaults ("desk" or "paper").
ExperimentConfig profile_defaults(const std::string& profile);

/// Applies `overrides` on top of the profile named by overrides["profile"]
/// (or `profile` when absent). Unknown keys and type mismatches are
/// ConfigErrors naming the full key path.
ExperimentConfig parse_config(const nlohmann::json& overrides, const std::string& profile = "desk");
ExperimentConfig load_config(const std::string& path, const std::string& profile = "desk");

nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json model_to_json(const model::LcnfConfig& config);
/// Strict: unknown keys are rejected; missing keys keep LcnfConfig defaults.
model::LcnfConfig model_from_json(const nlohmann::json& j);

/// FNV-1a 64 over the canonical (sorted-key) JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace lcnf::io
