#include "io/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "common/error.hpp"

namespace lcnf::io {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (profile != "desk" && profile != "paper") throw ConfigError("profile must be \"desk\" or \"paper\"");
  dataset.validate();
  model.validate();
  fpm.validate();
  if (split.total() == 0) throw ConfigError("dataset split is empty");
  if (sequential_leds < 1) throw ConfigError("illumination.sequential_leds must be >= 1");
  if (!(fm_threshold_ratio > 0.0)) throw ConfigError("metrics.fm_threshold_ratio must be > 0");
  if (stitch.overlap >= stitch.tile) throw ConfigError("stitch.overlap must be smaller than stitch.tile");
  if (model.scale != dataset.scale)
    throw ConfigError("model.scale (" + std::to_string(model.scale) + ") differs from dataset.scale (" +
                      std::to_string(dataset.scale) + ")");
}

ExperimentConfig profile_defaults(const std::string& profile) {
  ExperimentConfig c;
  c.profile = profile;
  if (profile == "desk") {
    c.dataset = sim::DatasetConfig::desk();
    c.model = model::LcnfConfig::desk();
  } else if (profile == "paper") {
    c.dataset.lr_size = 250;
    c.dataset.scale = 6;
    c.model = model::LcnfConfig::paper();
    c.split = {800, 50, 50};
    c.stitch = {250, 25};
  } else {
    throw ConfigError("unknown profile \"" + profile + "\" (expected desk or paper)");
  }
  c.fpm.upsample = c.dataset.scale;
  return c;
}

namespace {

// Field binding: one entry per JSON key, reading and writing the struct.
struct Binding {
  std::function<void(const json&, const std::string&)> read;
  std::function<json()> write;
};
using Section = std::map<std::string, Binding>;

template <class T>
Binding bind(T& field) {
  return {[&field](const json& v, const std::string& path) {
            if constexpr (std::is_same_v<T, bool>) {
              if (!v.is_boolean()) throw ConfigError(path + " must be a boolean");
              field = v.get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
              if (!v.is_number_integer() || v.get<long long>() < 0)
                throw ConfigError(path + " must be a non-negative integer");
              field = static_cast<T>(v.get<long long>());
            } else if constexpr (std::is_floating_point_v<T>) {
              if (!v.is_number()) throw ConfigError(path + " must be a number");
              field = v.get<double>();
            } else {
              if (!v.is_string()) throw ConfigError(path + " must be a string");
              field = v.get<std::string>();
            }
          },
          [&field] { return json(field); }};
}

Section model_section(model::LcnfConfig& n) {
  return {{"encoder_channels", bind(n.encoder_channels)},
          {"residual_blocks", bind(n.residual_blocks)},
          {"res_scale", bind(n.res_scale)},
          {"mlp_hidden", bind(n.mlp_hidden)},
          {"mlp_layers", bind(n.mlp_layers)},
          {"unfold", bind(n.unfold)},
          {"coords_per_step", bind(n.coords_per_step)},
          {"crop", bind(n.crop)},
          {"scale", bind(n.scale)},
          {"batch", bind(n.batch)},
          {"learning_rate", bind(n.learning_rate)},
          {"plateau_factor", bind(n.plateau_factor)},
          {"plateau_patience", bind(n.plateau_patience)},
          {"phase_scale", bind(n.phase.scale)},
          {"phase_offset", bind(n.phase.offset)}};
}

void read_section(Section& section, const json& value, const std::string& key) {
  if (!value.is_object()) throw ConfigError(key + " must be an object");
  for (const auto& [field, v] : value.items()) {
    const auto b = section.find(field);
    if (b == section.end()) throw ConfigError("unknown config key \"" + key + "." + field + "\"");
    b->second.read(v, key + "." + field);
  }
}

std::map<std::string, Section> sections(ExperimentConfig& c) {
  auto& s = c.dataset.system;
  auto& m = c.dataset.multiplex;
  auto& p = c.dataset.preprocess;
  auto& d = c.dataset;
  return {
      {"optics",
       {{"wavelength_um", bind(s.wavelength_um)},
        {"objective_na", bind(s.objective_na)},
        {"magnification", bind(s.magnification)},
        {"camera_pixel_um", bind(s.camera_pixel_um)},
        {"sensor_rows", bind(s.sensor_rows)},
        {"sensor_cols", bind(s.sensor_cols)}}},
      {"illumination",
       {{"max_illum_na", bind(m.max_illum_na)},
        {"arc_count", bind(m.arc_count)},
        {"lattice_spacing_na", bind(m.lattice_spacing_na)},
        {"sequential_leds", bind(c.sequential_leds)}}},
      {"preprocess",
       {{"clip_fraction", bind(p.clip_fraction)},
        {"open_kernel_lr", bind(p.open_kernel_lr)},
        {"open_kernel_hr", bind(p.open_kernel_hr)},
        {"open_kernel_sim", bind(p.open_kernel_sim)},
        {"phase_clip_max", bind(p.phase_clip_max)},
        {"sim_value_threshold", bind(p.sim_value_threshold)},
        {"sim_phase_scale", bind(p.sim_phase_scale)},
        {"sim_phase_offset", bind(p.sim_phase_offset)},
        {"dpc_tau_absorption", bind(p.dpc_tau_absorption)},
        {"dpc_tau_phase", bind(p.dpc_tau_phase)}}},
      {"dataset",
       {{"lr_size", bind(d.lr_size)},
        {"scale", bind(d.scale)},
        {"psd_exponent", bind(d.psd_exponent)},
        {"psd_corner", bind(d.psd_corner)},
        {"train", bind(c.split.train)},
        {"val", bind(c.split.val)},
        {"test", bind(c.split.test)}}},
      {"model", model_section(c.model)},
      {"training", {{"steps", bind(c.training.steps)}, {"epoch_steps", bind(c.training.epoch_steps)}}},
      {"fpm",
       {{"epochs", bind(c.fpm.epochs)},
        {"object_step", bind(c.fpm.object_step)},
        {"pupil_step", bind(c.fpm.pupil_step)},
        {"enable_pupil_recovery", bind(c.fpm.enable_pupil_recovery)},
        {"enable_offsets", bind(c.fpm.enable_offsets)},
        {"upsample", bind(c.fpm.upsample)}}},
      {"metrics", {{"fm_threshold_ratio", bind(c.fm_threshold_ratio)}}},
      {"stitch", {{"tile", bind(c.stitch.tile)}, {"overlap", bind(c.stitch.overlap)}}},
  };
}

}  // namespace

ExperimentConfig parse_config(const json& overrides, const std::string& profile) {
  if (!overrides.is_object()) throw ConfigError("config root must be a JSON object");
  std::string chosen = profile;
  if (overrides.contains("profile")) {
    if (!overrides["profile"].is_string()) throw ConfigError("profile must be a string");
    chosen = overrides["profile"].get<std::string>();
  }
  ExperimentConfig c = profile_defaults(chosen);
  auto secs = sections(c);
  for (const auto& [key, value] : overrides.items()) {
    if (key == "profile") continue;
    const auto sec = secs.find(key);
    if (sec == secs.end()) throw ConfigError("unknown config key \"" + key + "\"");
    read_section(sec->second, value, key);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j, profile);
}

json to_json(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  json j;
  j["profile"] = copy.profile;
  for (auto& [name, section] : sections(copy))
    for (auto& [field, b] : section) j[name][field] = b.write();
  return j;
}

json model_to_json(const model::LcnfConfig& config) {
  model::LcnfConfig copy = config;
  json j;
  for (auto& [field, b] : model_section(copy)) j[field] = b.write();
  return j;
}

model::LcnfConfig model_from_json(const json& j) {
  model::LcnfConfig c;
  auto section = model_section(c);
  read_section(section, j, "model");
  c.validate();
  return c;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(to_json(config).dump()); }

}  // namespace lcnf::io
