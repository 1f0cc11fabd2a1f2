#include "io/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "common/error.hpp"

namespace lcnf::io {

using nlohmann::json;

json to_json(const ExperimentManifest& m) {
  json j;
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["commands"] = m.commands;
  j["status"] = m.status;
  j["artifacts"] = json::array();
  for (const auto& a : m.artifacts) j["artifacts"].push_back({{"path", a.path}, {"kind", a.kind}});
  j["dataset"] = json::array();
  for (const auto& d : m.dataset)
    j["dataset"].push_back(
        {{"id", d.id}, {"split", d.split}, {"seed", d.seed}, {"inputs", d.inputs}, {"target", d.target}});
  return j;
}

ExperimentManifest manifest_from_json(const json& j) {
  try {
    ExperimentManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = j.value("config", json::object());
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    m.commands = j.value("commands", std::vector<std::string>{});
    m.status = j.value("status", std::string("pending"));
    for (const auto& a : j.value("artifacts", json::array()))
      m.artifacts.push_back({a.at("path").get<std::string>(), a.at("kind").get<std::string>()});
    for (const auto& d : j.value("dataset", json::array()))
      m.dataset.push_back({d.at("id").get<std::size_t>(), d.at("split").get<std::string>(),
                           d.at("seed").get<std::uint64_t>(), d.at("inputs").get<std::string>(),
                           d.at("target").get<std::string>()});
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::string& path, const ExperimentManifest& m) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << to_json(m).dump(2) << "\n";
    if (!out) throw IoError("failed writing " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move " + tmp + " to " + path);
}

ExperimentManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  return manifest_from_json(j);
}

}  // namespace lcnf::io
