#include "lcnf/lcnf.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/version.hpp"
#include "dpc/dpc.hpp"
#include "eval/metrics.hpp"
#include "eval/stitch.hpp"
#include "fpm/fpm.hpp"
#include "io/checkpoint.hpp"
#include "io/config.hpp"
#include "io/floatmap.hpp"
#include "io/manifest.hpp"
#include "model/train.hpp"
#include "nn/gradcheck.hpp"
#include "sim/dataset.hpp"

using namespace lcnf;

struct lcnf_config {
  io::ExperimentConfig value;
};
struct lcnf_image {
  RealGrid value;
};
struct lcnf_stack {
  std::vector<RealGrid> planes;
};
struct lcnf_dataset {
  std::vector<sim::DatasetPair> pairs;
  std::vector<std::string> splits;
};
struct lcnf_model {
  model::LcnfModel net;
  model::TrainState state;
  std::string config_hash;
};
struct lcnf_manifest {
  io::ExperimentManifest value;
};

namespace {

thread_local std::string g_last_error;

lcnf_status fail(lcnf_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <class Fn>
lcnf_status guarded(Fn&& fn) {
  try {
    fn();
    return LCNF_OK;
  } catch (const Error& e) {
    return fail(static_cast<lcnf_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LCNF_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LCNF_ERROR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ShapeError(std::string(what) + " must not be NULL");
}

lcnf_image* wrap(RealGrid g) { return new lcnf_image{std::move(g)}; }
lcnf_stack* wrap(std::vector<RealGrid> planes) { return new lcnf_stack{std::move(planes)}; }

std::vector<RealGrid> stack_planes(const prep::InputStack& s) { return {s.channels.begin(), s.channels.end()}; }

prep::InputStack to_input_stack(const lcnf_stack& s) {
  if (s.planes.size() != prep::kInputChannels)
    throw ShapeError("network input stack needs 6 planes, got " + std::to_string(s.planes.size()));
  prep::InputStack out;
  for (std::size_t i = 0; i < prep::kInputChannels; ++i) out.channels[i] = s.planes[i];
  return out;
}

sim::ObjectField phantom(const io::ExperimentConfig& c, std::uint64_t seed) {
  return sim::phantom_objects({seed}, c.dataset).front();
}

sim::MeasurementSet multiplexed_set(const io::ExperimentConfig& c, const lcnf_stack& m) {
  const auto patterns = optics::semicircle_and_arc_patterns(c.dataset.system, c.dataset.multiplex);
  if (m.planes.size() != patterns.size())
    throw ShapeError("expected " + std::to_string(patterns.size()) + " multiplexed measurements, got " +
                     std::to_string(m.planes.size()));
  sim::MeasurementSet set;
  set.images = m.planes;
  set.patterns = patterns;
  set.system = c.dataset.system;
  set.pitch_um = c.dataset.system.object_pitch_um();
  return set;
}

}  // namespace

extern "C" {

const char* lcnf_version(void) { return kVersion; }
const char* lcnf_last_error(void) { return g_last_error.c_str(); }

// ---- configuration

lcnf_status lcnf_config_load(const char* path, const char* profile, lcnf_config** out) {
  return guarded([&] {
    require(out, "out");
    const std::string prof = profile ? profile : "desk";
    *out = new lcnf_config{path ? io::load_config(path, prof) : io::parse_config(nlohmann::json::object(), prof)};
  });
}

lcnf_status lcnf_config_parse(const char* json_text, const char* profile, lcnf_config** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    *out = new lcnf_config{io::parse_config(j, profile ? profile : "desk")};
  });
}

lcnf_status lcnf_config_merge(lcnf_config* cfg, const char* json_text) {
  return guarded([&] {
    require(cfg, "cfg");
    require(json_text, "json_text");
    nlohmann::json patch;
    try {
      patch = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    nlohmann::json merged = io::to_json(cfg->value);
    if (patch.contains("profile") && patch["profile"] != merged["profile"])
      throw ConfigError("cannot change the profile of a loaded config");
    merged.merge_patch(patch);
    cfg->value = io::parse_config(merged, cfg->value.profile);
  });
}

void lcnf_config_free(lcnf_config* cfg) { delete cfg; }

lcnf_status lcnf_config_hash(const lcnf_config* cfg, char* buffer, size_t size) {
  return guarded([&] {
    require(cfg, "cfg");
    require(buffer, "buffer");
    const std::string h = io::config_hash(cfg->value);
    if (size < h.size() + 1) throw ShapeError("hash buffer needs " + std::to_string(h.size() + 1) + " bytes");
    std::memcpy(buffer, h.c_str(), h.size() + 1);
  });
}

lcnf_status lcnf_config_json(const lcnf_config* cfg, char* buffer, size_t size, size_t* needed) {
  return guarded([&] {
    require(cfg, "cfg");
    const std::string text = io::to_json(cfg->value).dump(2);
    if (needed) *needed = text.size() + 1;
    if (buffer && size >= text.size() + 1) std::memcpy(buffer, text.c_str(), text.size() + 1);
    else if (buffer) throw ShapeError("config buffer too small");
  });
}

// ---- images and stacks

lcnf_status lcnf_image_create(size_t rows, size_t cols, const double* data, lcnf_image** out) {
  return guarded([&] {
    require(out, "out");
    if (rows == 0 || cols == 0) throw ShapeError("image must be at least 1x1");
    RealGrid g(rows, cols);
    if (data) std::copy(data, data + rows * cols, g.vec().begin());
    *out = wrap(std::move(g));
  });
}

void lcnf_image_free(lcnf_image* image) { delete image; }
size_t lcnf_image_rows(const lcnf_image* image) { return image ? image->value.rows() : 0; }
size_t lcnf_image_cols(const lcnf_image* image) { return image ? image->value.cols() : 0; }
const double* lcnf_image_data(const lcnf_image* image) { return image ? image->value.data() : nullptr; }

lcnf_status lcnf_image_read(const char* path, lcnf_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(io::read_real(path));
  });
}

lcnf_status lcnf_image_write(const lcnf_image* image, const char* path) {
  return guarded([&] {
    require(image, "image");
    require(path, "path");
    io::write_real(path, image->value);
  });
}

lcnf_status lcnf_image_write_preview(const lcnf_image* image, const char* path) {
  return guarded([&] {
    require(image, "image");
    require(path, "path");
    io::write_preview(path, image->value);
  });
}

lcnf_status lcnf_stack_create(const lcnf_image* const* planes, size_t count, lcnf_stack** out) {
  return guarded([&] {
    require(planes, "planes");
    require(out, "out");
    if (count == 0) throw ShapeError("stack needs at least one plane");
    std::vector<RealGrid> v;
    for (size_t i = 0; i < count; ++i) {
      require(planes[i], "plane");
      if (!planes[i]->value.same_shape(planes[0]->value)) throw ShapeError("stack planes differ in shape");
      v.push_back(planes[i]->value);
    }
    *out = wrap(std::move(v));
  });
}

void lcnf_stack_free(lcnf_stack* stack) { delete stack; }
size_t lcnf_stack_planes(const lcnf_stack* stack) { return stack ? stack->planes.size() : 0; }

lcnf_status lcnf_stack_plane(const lcnf_stack* stack, size_t index, lcnf_image** out) {
  return guarded([&] {
    require(stack, "stack");
    require(out, "out");
    if (index >= stack->planes.size())
      throw ShapeError("plane " + std::to_string(index) + " out of range (" + std::to_string(stack->planes.size()) +
                       " planes)");
    *out = wrap(stack->planes[index]);
  });
}

lcnf_status lcnf_stack_read(const char* path, lcnf_stack** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(io::read_float_map(path));
  });
}

lcnf_status lcnf_stack_write(const lcnf_stack* stack, const char* path) {
  return guarded([&] {
    require(stack, "stack");
    require(path, "path");
    io::write_float_map(path, stack->planes);
  });
}

// ---- physics

lcnf_status lcnf_simulate_multiplexed(const lcnf_config* cfg, uint64_t seed, lcnf_image** phase,
                                      lcnf_stack** measurements, lcnf_stack** inputs, lcnf_image** target) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->value;
    const sim::ObjectField obj = phantom(c, seed);
    const auto patterns = optics::semicircle_and_arc_patterns(c.dataset.system, c.dataset.multiplex);
    const sim::MeasurementSet m = sim::simulate_measurements(obj, c.dataset, patterns);
    std::unique_ptr<lcnf_stack> in;
    if (inputs) in.reset(wrap(stack_planes(prep::prepare_network_inputs(m, c.dataset.preprocess))));
    if (phase) *phase = wrap(obj.phase);
    if (measurements) *measurements = wrap(m.images);
    if (inputs) *inputs = in.release();
    if (target) *target = wrap(sim::phase_target(obj, c.dataset.preprocess));
  });
}

lcnf_status lcnf_simulate_sequential(const lcnf_config* cfg, uint64_t seed, lcnf_image** phase,
                                     lcnf_stack** measurements) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->value;
    const sim::ObjectField obj = phantom(c, seed);
    const auto patterns =
        optics::sequential_grid_pattern(c.dataset.system, c.sequential_leds, c.dataset.multiplex.max_illum_na);
    const sim::MeasurementSet m = sim::simulate_measurements(obj, c.dataset, patterns);
    if (phase) *phase = wrap(obj.phase);
    if (measurements) *measurements = wrap(m.images);
  });
}

lcnf_status lcnf_prepare_inputs(const lcnf_config* cfg, const lcnf_stack* measurements, lcnf_stack** inputs) {
  return guarded([&] {
    require(cfg, "cfg");
    require(measurements, "measurements");
    require(inputs, "inputs");
    const auto set = multiplexed_set(cfg->value, *measurements);
    *inputs = wrap(stack_planes(prep::prepare_network_inputs(set, cfg->value.dataset.preprocess)));
  });
}

lcnf_status lcnf_dpc(const lcnf_config* cfg, const lcnf_stack* measurements, lcnf_image** phase) {
  return guarded([&] {
    require(cfg, "cfg");
    require(measurements, "measurements");
    require(phase, "phase");
    const auto& c = cfg->value;
    if (measurements->planes.size() < 2) throw ShapeError("dpc needs the two brightfield measurements");
    const auto patterns = optics::semicircle_and_arc_patterns(c.dataset.system, c.dataset.multiplex);
    const RealGrid& first = measurements->planes[0];
    const optics::Pupil pupil =
        optics::make_pupil(c.dataset.system, {first.rows(), first.cols()}, c.dataset.system.object_pitch_um());
    std::vector<RealGrid> bf;
    for (int i = 0; i < 2; ++i) {
      RealGrid g = prep::mean_normalize(prep::clip_dynamic_range(measurements->planes[i], c.dataset.preprocess.clip_fraction));
      for (auto& v : g.vec()) v -= 1.0;
      bf.push_back(std::move(g));
    }
    const std::vector<dpc::TransferPair> tf{dpc::weak_object_transfer(patterns[0], pupil),
                                            dpc::weak_object_transfer(patterns[1], pupil)};
    *phase = wrap(dpc::dpc_invert(bf, tf, c.dataset.preprocess.dpc_tau_absorption, c.dataset.preprocess.dpc_tau_phase)
                      .phase);
  });
}

lcnf_status lcnf_fpm(const lcnf_config* cfg, const lcnf_stack* measurements, lcnf_stack** field, double* loss,
                     size_t loss_capacity, size_t* loss_count) {
  return guarded([&] {
    require(cfg, "cfg");
    require(measurements, "measurements");
    const auto& c = cfg->value;
    sim::MeasurementSet set;
    set.patterns =
        optics::sequential_grid_pattern(c.dataset.system, c.sequential_leds, c.dataset.multiplex.max_illum_na);
    if (set.patterns.size() != measurements->planes.size())
      throw ShapeError("sequential scan has " + std::to_string(set.patterns.size()) + " LEDs but " +
                       std::to_string(measurements->planes.size()) + " measurements were given");
    set.images = measurements->planes;
    set.system = c.dataset.system;
    set.pitch_um = c.dataset.system.object_pitch_um();
    const fpm::FpmState st = fpm::fpm_reconstruct(set, c.fpm);
    if (field) {
      const ComplexGrid f = st.object_field();
      RealGrid re(f.rows(), f.cols()), im(f.rows(), f.cols());
      for (std::size_t i = 0; i < f.size(); ++i) {
        re[i] = f[i].real();
        im[i] = f[i].imag();
      }
      *field = wrap(std::vector<RealGrid>{std::move(re), std::move(im)});
    }
    if (loss) std::copy_n(st.loss_history.begin(), std::min(loss_capacity, st.loss_history.size()), loss);
    if (loss_count) *loss_count = st.loss_history.size();
  });
}

// ---- datasets

lcnf_status lcnf_dataset_build(const lcnf_config* cfg, uint64_t seed, size_t jobs, lcnf_dataset** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const auto& c = cfg->value;
    std::vector<std::uint64_t> seeds(c.split.total());
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = seed + i;
    auto ds = std::make_unique<lcnf_dataset>();
    ds->pairs = sim::build_dataset(sim::phantom_objects(seeds, c.dataset), c.dataset, jobs);
    for (std::size_t i = 0; i < ds->pairs.size(); ++i) {
      ds->pairs[i].seed = seeds[i];
      ds->splits.push_back(i < c.split.train ? "train" : i < c.split.train + c.split.val ? "val" : "test");
    }
    *out = ds.release();
  });
}

void lcnf_dataset_free(lcnf_dataset* ds) { delete ds; }
size_t lcnf_dataset_size(const lcnf_dataset* ds) { return ds ? ds->pairs.size() : 0; }

lcnf_status lcnf_dataset_save(const lcnf_dataset* ds, const char* dir, lcnf_manifest* manifest,
                              const char* manifest_path) {
  return guarded([&] {
    require(ds, "ds");
    require(dir, "dir");
    require(manifest, "manifest");
    require(manifest_path, "manifest_path");
    char name[64];
    for (std::size_t i = 0; i < ds->pairs.size(); ++i) {
      std::snprintf(name, sizeof name, "pair_%04zu", i);
      const std::string in = std::string(name) + "_inputs.pfm", tg = std::string(name) + "_target.pfm";
      manifest->value.dataset.push_back({i, ds->splits[i], ds->pairs[i].seed, in, tg});
    }
    manifest->value.status = "pending";
    io::write_manifest(manifest_path, manifest->value);
    for (std::size_t i = 0; i < ds->pairs.size(); ++i) {
      const auto& e = manifest->value.dataset[manifest->value.dataset.size() - ds->pairs.size() + i];
      io::write_float_map((std::filesystem::path(dir) / e.inputs).string(), stack_planes(ds->pairs[i].inputs));
      io::write_real((std::filesystem::path(dir) / e.target).string(), ds->pairs[i].target);
    }
  });
}

lcnf_status lcnf_dataset_load(const char* manifest_path, const char* split, lcnf_dataset** out) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(out, "out");
    const io::ExperimentManifest m = io::read_manifest(manifest_path);
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    std::size_t scale = 0;
    if (m.config.contains("dataset") && m.config["dataset"].contains("scale"))
      scale = m.config["dataset"]["scale"].get<std::size_t>();
    auto ds = std::make_unique<lcnf_dataset>();
    for (const auto& e : m.dataset) {
      if (split && e.split != split) continue;
      lcnf_stack s{io::read_float_map((dir / e.inputs).string())};
      sim::DatasetPair p;
      p.inputs = to_input_stack(s);
      p.target = io::read_real((dir / e.target).string());
      p.scale = scale ? scale : p.target.rows() / p.inputs.rows();
      p.seed = e.seed;
      p.validate();
      ds->pairs.push_back(std::move(p));
      ds->splits.push_back(e.split);
    }
    if (ds->pairs.empty())
      throw ConfigError(std::string("manifest ") + manifest_path + " has no pairs" +
                        (split ? std::string(" in split ") + split : std::string()));
    *out = ds.release();
  });
}

lcnf_status lcnf_dataset_pair(const lcnf_dataset* ds, size_t index, lcnf_stack** inputs, lcnf_image** target) {
  return guarded([&] {
    require(ds, "ds");
    if (index >= ds->pairs.size()) throw ShapeError("pair index out of range");
    if (inputs) *inputs = wrap(stack_planes(ds->pairs[index].inputs));
    if (target) *target = wrap(ds->pairs[index].target);
  });
}

// ---- model

lcnf_status lcnf_model_create(const lcnf_config* cfg, uint64_t seed, lcnf_model** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const auto& mc = cfg->value.model;
    *out = new lcnf_model{model::LcnfModel(mc, seed), model::TrainState(mc, seed + 1), io::config_hash(cfg->value)};
  });
}

void lcnf_model_free(lcnf_model* model) { delete model; }

lcnf_status lcnf_model_save(const lcnf_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    io::save_checkpoint(path, model->net, &model->state.adam, model->config_hash);
  });
}

lcnf_status lcnf_model_load(const char* path, lcnf_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    io::LoadedCheckpoint ck = io::load_checkpoint(path);
    model::TrainState st(ck.model.config(), 0);
    if (ck.has_optimizer) st.adam = std::move(ck.adam);
    *out = new lcnf_model{std::move(ck.model), std::move(st), ck.config_hash};
  });
}

lcnf_status lcnf_model_train(lcnf_model* model, const lcnf_dataset* train, size_t steps, size_t epoch_steps,
                             lcnf_step_callback callback, void* user, double* losses) {
  return guarded([&] {
    require(model, "model");
    require(train, "train");
    model::TrainOptions opt{steps, epoch_steps};
    const auto report = model::train(model->net, model->state, train->pairs, opt, [&](std::size_t s, double l, double lr) {
      if (callback) callback(user, s, l, lr);
    });
    if (losses) std::copy(report.step_loss.begin(), report.step_loss.end(), losses);
  });
}

lcnf_status lcnf_model_infer(const lcnf_model* model, const lcnf_stack* inputs, size_t out_rows, size_t out_cols,
                             size_t jobs, int radians, lcnf_image** out) {
  return guarded([&] {
    require(model, "model");
    require(inputs, "inputs");
    require(out, "out");
    RealGrid v = model::infer_grid(model->net, to_input_stack(*inputs), out_rows, out_cols, jobs);
    if (radians) v = model::to_radians(v, model->net.config().phase);
    *out = wrap(std::move(v));
  });
}

lcnf_status lcnf_model_infer_tiled(const lcnf_model* model, const lcnf_stack* inputs, size_t scale, size_t tile,
                                   size_t overlap, size_t jobs, int radians, lcnf_image** out) {
  return guarded([&] {
    require(model, "model");
    require(inputs, "inputs");
    require(out, "out");
    const prep::InputStack in = to_input_stack(*inputs);
    const auto plan = eval::TilePlan::grid(in.rows(), in.cols(), std::min({tile, in.rows(), in.cols()}), overlap);
    RealGrid v = eval::infer_tiled(model->net, in, scale, plan, jobs);
    if (radians) v = model::to_radians(v, model->net.config().phase);
    *out = wrap(std::move(v));
  });
}

// ---- evaluation

lcnf_status lcnf_stitch(const lcnf_image* const* tiles, size_t count, size_t rows, size_t cols, size_t tile,
                        size_t overlap, lcnf_image** out) {
  return guarded([&] {
    require(tiles, "tiles");
    require(out, "out");
    const auto plan = eval::TilePlan::grid(rows, cols, tile, overlap);
    std::vector<RealGrid> t;
    for (size_t i = 0; i < count; ++i) {
      require(tiles[i], "tile");
      t.push_back(tiles[i]->value);
    }
    *out = wrap(eval::stitch_alpha_blend(t, plan));
  });
}

lcnf_status lcnf_metrics_compute(const lcnf_image* pred, const lcnf_image* ref, double fm_threshold_ratio,
                                 lcnf_metrics* out) {
  return guarded([&] {
    require(pred, "pred");
    require(ref, "ref");
    require(out, "out");
    out->mse = eval::mse(pred->value, ref->value);
    out->psnr_db = eval::psnr(pred->value, ref->value);
    out->ssim = eval::ssim(pred->value, ref->value);
    out->fm = eval::frequency_measure(pred->value, fm_threshold_ratio);
  });
}

lcnf_status lcnf_bicubic(const lcnf_image* image, size_t out_rows, size_t out_cols, lcnf_image** out) {
  return guarded([&] {
    require(image, "image");
    require(out, "out");
    *out = wrap(eval::bicubic_resize(image->value, out_rows, out_cols));
  });
}

lcnf_status lcnf_gradcheck(uint64_t seed, size_t configs, double tolerance, lcnf_gradcheck_row* rows, size_t capacity,
                           size_t* count) {
  return guarded([&] {
    const auto results = nn::run_gradchecks(seed, configs, tolerance);
    if (count) *count = results.size();
    for (size_t i = 0; rows && i < std::min(capacity, results.size()); ++i) {
      std::snprintf(rows[i].layer, sizeof rows[i].layer, "%s", results[i].layer.c_str());
      rows[i].max_rel_error = results[i].max_rel_error;
      rows[i].configs = results[i].configs;
      rows[i].passed = results[i].passed ? 1 : 0;
    }
  });
}

// ---- manifests

lcnf_status lcnf_manifest_create(const lcnf_config* cfg, const char* command_line, lcnf_manifest** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    auto m = std::make_unique<lcnf_manifest>();
    m->value.tool_version = kVersion;
    m->value.config_hash = io::config_hash(cfg->value);
    m->value.config = io::to_json(cfg->value);
    if (command_line) m->value.commands.push_back(command_line);
    *out = m.release();
  });
}

void lcnf_manifest_free(lcnf_manifest* manifest) { delete manifest; }

lcnf_status lcnf_manifest_add_seed(lcnf_manifest* manifest, uint64_t seed) {
  return guarded([&] {
    require(manifest, "manifest");
    manifest->value.seeds.push_back(seed);
  });
}

lcnf_status lcnf_manifest_add_artifact(lcnf_manifest* manifest, const char* path, const char* kind) {
  return guarded([&] {
    require(manifest, "manifest");
    require(path, "path");
    for (const auto& a : manifest->value.artifacts)
      if (a.path == path) throw ConfigError(std::string("artifact ") + path + " is already listed");
    manifest->value.artifacts.push_back({path, kind ? kind : ""});
  });
}

lcnf_status lcnf_manifest_write(lcnf_manifest* manifest, const char* path, const char* status) {
  return guarded([&] {
    require(manifest, "manifest");
    require(path, "path");
    const std::string s = status ? status : "pending";
    if (s != "pending" && s != "complete") throw ConfigError("manifest status must be pending or complete");
    manifest->value.status = s;
    io::write_manifest(path, manifest->value);
  });
}

}  // extern "C"
