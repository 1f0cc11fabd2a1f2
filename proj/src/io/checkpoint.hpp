#pragma once

#include <string>

#include <json.hpp>

#include "model/lcnf.hpp"
#include "nn/optim.hpp"

namespace lcnf::io {

// Layout: "LCNFCKPT", uint32 version, uint64 header bytes, JSON header, then
// little-endian float64 payload: every parameter in header order, followed by
// the Adam first and second moments when the header says they are present.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const model::LcnfModel& model, const nn::AdamState* adam,
                     const std::string& config_hash);

struct LoadedCheckpoint {
  model::LcnfModel model;
  nn::AdamState adam;
  bool has_optimizer = false;
  std::string config_hash;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Header only (no payload validation).
nlohmann::json read_checkpoint_header(const std::string& path);

}  // namespace lcnf::io
