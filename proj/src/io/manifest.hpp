#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace lcnf::io {

struct ArtifactRecord {
  std::string path;  // relative to the manifest's directory
  std::string kind;
};

struct DatasetEntry {
  std::size_t id = 0;
  std::string split;  // train | val | test
  std::uint64_t seed = 0;
  std::string inputs;
  std::string target;
};

struct ExperimentManifest {
  std::string tool_version;
  std::string config_hash;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> commands;
  std::vector<ArtifactRecord> artifacts;
  std::vector<DatasetEntry> dataset;
  std::string status = "pending";  // pending until every artifact is written
};

nlohmann::json to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const nlohmann::json& j);

/// Writes through a temporary file and rename, so readers never see a torn file.
void write_manifest(const std::string& path, const ExperimentManifest& m);
ExperimentManifest read_manifest(const std::string& path);

}  // namespace lcnf::io
