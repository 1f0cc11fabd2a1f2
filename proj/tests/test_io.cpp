#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "common/error.hpp"
#include "io/checkpoint.hpp"
#include "io/config.hpp"
#include "io/floatmap.hpp"
#include "io/manifest.hpp"
#include "oracles.hpp"

using namespace lcnf;
using namespace lcnf::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lcnf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

// Values exactly representable in the 32-bit container.
RealGrid float_exact(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  RealGrid g = oracle::random_real(rows, cols, seed, -1e3, 1e3);
  for (auto& v : g.vec()) v = static_cast<float>(v);
  return g;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

model::LcnfConfig tiny_model() {
  model::LcnfConfig c;
  c.encoder_channels = 3;
  c.residual_blocks = 1;
  c.mlp_hidden = 8;
  c.mlp_layers = 2;
  return c;
}

}  // namespace

TEST_CASE("float map round-trips a 64x64 image bit-exactly") {
  TempDir d;
  const RealGrid x = float_exact(64, 64, 1);
  write_real(d.file("x.pfm"), x);
  CHECK(read_real(d.file("x.pfm")) == x);
  std::ifstream in(d.file("x.pfm"), std::ios::binary);
  std::string magic;
  in >> magic;
  CHECK(magic == "Pf");
}

TEST_CASE("float map stores rows bottom to top") {
  TempDir d;
  RealGrid x(2, 1);
  x.vec() = {1.0, 2.0};
  write_real(d.file("x.pfm"), x);
  std::ifstream in(d.file("x.pfm"), std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), {});
  float first = 0.0f;
  std::memcpy(&first, data.data() + data.size() - 8, 4);
  CHECK(first == 2.0f);
}

TEST_CASE("complex fields and stacks round-trip every plane") {
  TempDir d;
  ComplexGrid f(5, 7);
  const RealGrid re = float_exact(5, 7, 2), im = float_exact(5, 7, 3);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = {re[i], im[i]};
  write_complex(d.file("f.pfm"), f);
  CHECK(read_complex(d.file("f.pfm")) == f);
  const std::vector<RealGrid> stack{float_exact(4, 3, 4), float_exact(4, 3, 5), float_exact(4, 3, 6)};
  write_float_map(d.file("s.pfm"), stack);
  CHECK(read_float_map(d.file("s.pfm")) == stack);
  CHECK_THROWS_AS(read_real(d.file("s.pfm")), IoError);
  CHECK_THROWS_AS(read_complex(d.file("s.pfm")), IoError);
}

TEST_CASE("truncated float map names expected and actual byte counts") {
  TempDir d;
  write_real(d.file("x.pfm"), float_exact(8, 8, 7));
  fs::resize_file(d.file("x.pfm"), fs::file_size(d.file("x.pfm")) - 10);
  const std::string msg = error_of([&] { read_real(d.file("x.pfm")); });
  CHECK(msg.find("expected 256 bytes") != std::string::npos);
  CHECK(msg.find("got 246") != std::string::npos);
}

TEST_CASE("float map rejects bad magic and big-endian data reads back") {
  TempDir d;
  {
    std::ofstream out(d.file("bad.pfm"), std::ios::binary);
    out << "P6\n1 1\n255\n";
  }
  CHECK(error_of([&] { read_real(d.file("bad.pfm")); }).find("magic") != std::string::npos);
  {
    std::ofstream out(d.file("be.pfm"), std::ios::binary);
    out << "Pf\n1 1\n1.0\n";
    const unsigned char bytes[4] = {0x40, 0x49, 0x0f, 0xdb};  // pi as big-endian float
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
  CHECK(read_real(d.file("be.pfm"))[0] == static_cast<float>(3.14159265358979));
  CHECK_THROWS_AS(read_real(d.file("missing.pfm")), IoError);
}

TEST_CASE("checkpoint restores parameters and optimizer state") {
  TempDir d;
  const auto cfg = tiny_model();
  model::LcnfModel m(cfg, 4);
  nn::AdamState adam;
  adam.step = 17;
  adam.lr = 3e-5;
  for (const auto& p : m.parameters()) {
    adam.m.push_back(std::vector<double>(p.size(), 0.25));
    adam.v.push_back(std::vector<double>(p.size(), 0.5));
  }
  save_checkpoint(d.file("m.ckpt"), m, &adam, "abc");
  const auto loaded = load_checkpoint(d.file("m.ckpt"));
  CHECK(loaded.config_hash == "abc");
  CHECK(loaded.has_optimizer);
  CHECK(loaded.adam.step == 17);
  CHECK(loaded.adam.lr == 3e-5);
  CHECK(loaded.adam.m == adam.m);
  CHECK(loaded.adam.v == adam.v);
  const auto a = m.named_parameters(), b = loaded.model.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(std::equal(a[i].tensor.values().begin(), a[i].tensor.values().end(), b[i].tensor.values().begin()));
  }
  CHECK(read_checkpoint_header(d.file("m.ckpt"))["format"] == "lcnf-checkpoint");

  save_checkpoint(d.file("w.ckpt"), m, nullptr, "abc");
  CHECK_FALSE(load_checkpoint(d.file("w.ckpt")).has_optimizer);
}

TEST_CASE("checkpoint corruption is reported") {
  TempDir d;
  model::LcnfModel m(tiny_model(), 1);
  save_checkpoint(d.file("m.ckpt"), m, nullptr, "h");
  fs::copy_file(d.file("m.ckpt"), d.file("t.ckpt"));
  fs::resize_file(d.file("t.ckpt"), fs::file_size(d.file("t.ckpt")) - 8);
  CHECK(error_of([&] { load_checkpoint(d.file("t.ckpt")); }).find("bytes") != std::string::npos);

  std::fstream f(d.file("m.ckpt"), std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(8);
  const std::uint32_t v = 99;
  f.write(reinterpret_cast<const char*>(&v), 4);
  f.close();
  CHECK(error_of([&] { load_checkpoint(d.file("m.ckpt")); }).find("version 99") != std::string::npos);

  {
    std::ofstream out(d.file("junk.ckpt"), std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_checkpoint(d.file("junk.ckpt")), IoError);
}

TEST_CASE("config rejects unknown keys with their full path") {
  CHECK(error_of([] { parse_config(nlohmann::json::parse(R"({"model": {"widht": 3}})")); }) ==
        "unknown config key \"model.widht\"");
  CHECK(error_of([] { parse_config(nlohmann::json::parse(R"({"optics": {"na": 0.1}})")); }).find("optics.na") !=
        std::string::npos);
  CHECK(error_of([] { parse_config(nlohmann::json::parse(R"({"colour": 1})")); }).find("colour") != std::string::npos);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"model": {"batch": "five"}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"model": {"batch": -1}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"profile": "huge"})")), ConfigError);
}

TEST_CASE("profiles and overrides") {
  const auto desk = parse_config(nlohmann::json::object());
  CHECK(desk.dataset.lr_size == 32);
  CHECK(desk.dataset.scale == 3);
  CHECK(desk.split.total() == 200);
  const auto paper = parse_config(nlohmann::json::parse(R"({"profile": "paper"})"));
  CHECK(paper.dataset.lr_size == 250);
  CHECK(paper.model.mlp_input_dim() == 3460);
  CHECK(paper.split.total() == 900);
  const auto tweaked = parse_config(nlohmann::json::parse(R"({"training": {"steps": 5}, "fpm": {"epochs": 3}})"));
  CHECK(tweaked.training.steps == 5);
  CHECK(tweaked.fpm.epochs == 3);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"model": {"scale": 4}})")), ConfigError);
}

TEST_CASE("config hash covers numeric settings and survives a JSON round trip") {
  const auto a = parse_config(nlohmann::json::object());
  const auto b = parse_config(to_json(a));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  const auto c = parse_config(nlohmann::json::parse(R"({"preprocess": {"dpc_tau_phase": 0.002}})"));
  CHECK(config_hash(c) != config_hash(a));
  // FNV-1a 64 reference value.
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("config files load and report missing files") {
  TempDir d;
  {
    std::ofstream out(d.file("c.json"));
    out << R"({"profile": "paper", "training": {"steps": 9}})";
  }
  const auto c = load_config(d.file("c.json"));
  CHECK(c.profile == "paper");
  CHECK(c.training.steps == 9);
  CHECK_THROWS_AS(load_config(d.file("none.json")), Error);
  {
    std::ofstream out(d.file("broken.json"));
    out << "{";
  }
  CHECK_THROWS_AS(load_config(d.file("broken.json")), ConfigError);
}

TEST_CASE("model config JSON is strict") {
  const auto j = model_to_json(tiny_model());
  CHECK(model_from_json(j).encoder_channels == 3);
  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(model_from_json(bad), ConfigError);
}

TEST_CASE("manifest round trip and atomic write") {
  TempDir d;
  ExperimentManifest m;
  m.tool_version = "0.1.0";
  m.config_hash = "0123456789abcdef";
  m.config = {{"k", 1}};
  m.seeds = {1, 2};
  m.commands = {"lcnf simulate --seed 1"};
  m.artifacts = {{"phase.pfm", "phase"}};
  m.dataset = {{0, "train", 5, "pair_0000_inputs.pfm", "pair_0000_target.pfm"}};
  write_manifest(d.file("m.json"), m);
  const auto r = read_manifest(d.file("m.json"));
  CHECK(to_json(r) == to_json(m));
  CHECK(r.status == "pending");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d.path)) files += e.is_regular_file();
  CHECK(files == 1);
  {
    std::ofstream out(d.file("bad.json"));
    out << R"({"tool_version": 3})";
  }
  CHECK_THROWS_AS(read_manifest(d.file("bad.json")), IoError);
}
