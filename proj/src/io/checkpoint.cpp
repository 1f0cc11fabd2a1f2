#include "io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "common/error.hpp"
#include "io/config.hpp"

namespace lcnf::io {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'L', 'C', 'N', 'F', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const std::string& path, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (static_cast<std::size_t>(in.gcount()) != sizeof v)
    throw IoError(path + ": truncated checkpoint while reading " + what);
  return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

struct Opened {
  std::ifstream in;
  json header;
  std::size_t payload_bytes = 0;  // actual bytes after the header
};

Opened open_checkpoint(const std::string& path) {
  Opened o;
  o.in.open(path, std::ios::binary);
  if (!o.in) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  o.in.read(magic, 8);
  if (o.in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) throw IoError(path + ": not an LCNF checkpoint");
  const auto version = get<std::uint32_t>(o.in, path, "version");
  if (version != kCheckpointVersion)
    throw IoError(path + ": checkpoint version " + std::to_string(version) + " unsupported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  const auto len = get<std::uint64_t>(o.in, path, "header length");
  std::string text(len, '\0');
  o.in.read(text.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint64_t>(o.in.gcount()) != len)
    throw IoError(path + ": truncated checkpoint header, expected " + std::to_string(len) + " bytes, got " +
                  std::to_string(o.in.gcount()));
  try {
    o.header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": corrupt checkpoint header: " + e.what());
  }
  const auto here = o.in.tellg();
  o.in.seekg(0, std::ios::end);
  o.payload_bytes = static_cast<std::size_t>(o.in.tellg() - here);
  o.in.seekg(here);
  return o;
}

}  // namespace

void save_checkpoint(const std::string& path, const model::LcnfModel& model, const nn::AdamState* adam,
                     const std::string& config_hash) {
  const auto params = model.named_parameters();
  json header;
  header["format"] = "lcnf-checkpoint";
  header["config_hash"] = config_hash;
  header["model"] = model_to_json(model.config());
  header["parameters"] = json::array();
  for (const auto& p : params) header["parameters"].push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  const bool moments = adam != nullptr && adam->m.size() == params.size();
  header["optimizer"] = {{"type", "adam"},
                         {"lr", adam ? adam->lr : model.config().learning_rate},
                         {"beta1", adam ? adam->beta1 : 0.9},
                         {"beta2", adam ? adam->beta2 : 0.999},
                         {"eps", adam ? adam->eps : 1e-8},
                         {"step", adam ? adam->step : 0},
                         {"moments", moments}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : params) {
    const auto v = p.tensor.values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (moments) {
    for (const auto& m : adam->m) put_doubles(out, m);
    for (const auto& v : adam->v) put_doubles(out, v);
  }
  if (!out) throw IoError("failed writing checkpoint " + path);
}

json read_checkpoint_header(const std::string& path) { return open_checkpoint(path).header; }

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Opened o = open_checkpoint(path);
  const json& h = o.header;
  if (!h.contains("model") || !h.contains("parameters") || !h.contains("optimizer"))
    throw IoError(path + ": checkpoint header lacks model/parameters/optimizer");
  LoadedCheckpoint ck{model::LcnfModel(model_from_json(h["model"]), 0), {}, false, h.value("config_hash", "")};
  auto params = ck.model.named_parameters();
  const auto& listed = h["parameters"];
  if (listed.size() != params.size())
    throw IoError(path + ": checkpoint lists " + std::to_string(listed.size()) + " parameters, model has " +
                  std::to_string(params.size()));
  std::size_t count = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (listed[i]["name"] != params[i].name || listed[i]["shape"].get<nn::Shape>() != params[i].tensor.shape())
      throw IoError(path + ": parameter " + std::to_string(i) + " (" + listed[i]["name"].get<std::string>() +
                    ") does not match the model layout");
    count += params[i].tensor.size();
  }
  const auto& opt = h["optimizer"];
  const bool moments = opt.value("moments", false);
  const std::size_t expected = count * sizeof(double) * (moments ? 3 : 1);
  if (o.payload_bytes != expected)
    throw IoError(path + ": checkpoint payload is " + std::to_string(o.payload_bytes) + " bytes, expected " +
                  std::to_string(expected));
  for (auto& p : params) {
    auto v = p.tensor.values();
    o.in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  ck.adam.lr = opt.value("lr", 1e-4);
  ck.adam.beta1 = opt.value("beta1", 0.9);
  ck.adam.beta2 = opt.value("beta2", 0.999);
  ck.adam.eps = opt.value("eps", 1e-8);
  ck.adam.step = opt.value("step", std::size_t{0});
  if (moments) {
    for (auto* bank : {&ck.adam.m, &ck.adam.v})
      for (const auto& p : params) {
        std::vector<double> buf(p.tensor.size());
        o.in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
        bank->push_back(std::move(buf));
      }
    ck.has_optimizer = true;
  }
  if (!o.in) throw IoError(path + ": failed reading checkpoint payload");
  return ck;
}

}  // namespace lcnf::io
