// Command-line front end over the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcnf/lcnf.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  lcnf_status status;
  std::string message;
};

void check(lcnf_status s) {
  if (s != LCNF_OK) throw Failure{s, lcnf_last_error()};
}

[[noreturn]] void config_error(const std::string& message) { throw Failure{LCNF_ERROR_CONFIG, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<lcnf_config, Deleter<lcnf_config, lcnf_config_free>>;
using Image = std::unique_ptr<lcnf_image, Deleter<lcnf_image, lcnf_image_free>>;
using Stack = std::unique_ptr<lcnf_stack, Deleter<lcnf_stack, lcnf_stack_free>>;
using Dataset = std::unique_ptr<lcnf_dataset, Deleter<lcnf_dataset, lcnf_dataset_free>>;
using Model = std::unique_ptr<lcnf_model, Deleter<lcnf_model, lcnf_model_free>>;
using Manifest = std::unique_ptr<lcnf_manifest, Deleter<lcnf_manifest, lcnf_manifest_free>>;

template <class Handle, class Fn, class... Args>
Handle make(Fn fn, Args&&... args) {
  typename Handle::pointer raw = nullptr;
  check(fn(std::forward<Args>(args)..., &raw));
  return Handle(raw);
}

struct Common {
  std::string config;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> scale;
  std::size_t jobs = 1;
};

const char* kind_name(lcnf_status s) {
  switch (s) {
    case LCNF_ERROR_CONFIG: return "config";
    case LCNF_ERROR_NUMERIC: return "numeric";
    case LCNF_ERROR_IO: return "io";
    case LCNF_ERROR_INVALID: return "invalid";
    default: return "internal";
  }
}

void require_inputs(const std::vector<std::string>& paths) {
  std::vector<std::string> missing;
  for (const auto& p : paths)
    if (!fs::exists(p)) missing.push_back(p);
  if (missing.empty()) return;
  std::string msg = "missing input" + std::string(missing.size() > 1 ? "s" : "") + ":";
  for (const auto& m : missing) msg += " " + m;
  config_error(msg);
}

// One subcommand invocation: resolved config, output directory and manifest.
class Run {
 public:
  Run(const std::string& name, const Common& common, const std::string& command_line, bool needs_seed)
      : name_(name), common_(common) {
    if (needs_seed && !common.seed) config_error(name + " is stochastic and requires --seed");
    if (!common.config.empty()) require_inputs({common.config});
    cfg_ = make<Config>(lcnf_config_load, common.config.empty() ? nullptr : common.config.c_str(),
                        common.profile.c_str());
    if (common.scale) {
      const json patch = {{"dataset", {{"scale", *common.scale}}},
                          {"model", {{"scale", *common.scale}}},
                          {"fpm", {{"upsample", *common.scale}}}};
      check(lcnf_config_merge(cfg_.get(), patch.dump().c_str()));
    }
    dir_ = common.out_dir;
    fs::create_directories(dir_);
    manifest_ = make<Manifest>(lcnf_manifest_create, cfg_.get(), command_line.c_str());
    if (common.seed) check(lcnf_manifest_add_seed(manifest_.get(), *common.seed));
  }

  const lcnf_config* config() const { return cfg_.get(); }
  lcnf_manifest* manifest() { return manifest_.get(); }
  std::string manifest_path() const { return (dir_ / (name_ + ".manifest.json")).string(); }
  std::uint64_t seed() const { return common_.seed.value_or(0); }
  std::size_t jobs() const { return common_.jobs; }
  const std::optional<std::size_t>& scale() const { return common_.scale; }

  // Registers an output and returns its full path.
  std::string output(const std::string& file, const std::string& kind) {
    check(lcnf_manifest_add_artifact(manifest_.get(), file.c_str(), kind.c_str()));
    return (dir_ / file).string();
  }

  void begin() { check(lcnf_manifest_write(manifest_.get(), manifest_path().c_str(), "pending")); }
  void finish() {
    check(lcnf_manifest_write(manifest_.get(), manifest_path().c_str(), "complete"));
    std::cout << manifest_path() << "\n";
  }

 private:
  std::string name_;
  Common common_;
  Config cfg_;
  Manifest manifest_;
  fs::path dir_;
};

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Failure{LCNF_ERROR_IO, "cannot open " + path + " for writing"};
  f << j.dump(2) << "\n";
  if (!f) throw Failure{LCNF_ERROR_IO, "failed writing " + path};
}

// One row per epoch, starting with the objective before the first update.
void write_loss_csv(const std::string& path, const std::vector<double>& loss) {
  std::ofstream f(path);
  if (!f) throw Failure{LCNF_ERROR_IO, "cannot open " + path + " for writing"};
  f << "epoch,objective\n";
  f.precision(17);
  for (std::size_t i = 0; i < loss.size(); ++i) f << i << "," << loss[i] << "\n";
  if (!f) throw Failure{LCNF_ERROR_IO, "failed writing " + path};
}

// Appends to a Dataset,Method,MSE,PSNR,SSIM,FM table, writing the header once.
void append_result_row(const std::string& path, const std::string& dataset, const std::string& method,
                       const lcnf_metrics& m) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw Failure{LCNF_ERROR_IO, "cannot open " + path + " for appending"};
  if (fresh) f << "Dataset,Method,MSE,PSNR,SSIM,FM\n";
  f.precision(10);
  f << dataset << "," << method << "," << m.mse << ",";
  if (std::isfinite(m.psnr_db)) f << m.psnr_db;
  else f << "inf";
  f << "," << m.ssim << "," << m.fm << "\n";
  if (!f) throw Failure{LCNF_ERROR_IO, "failed writing " + path};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplexed FPM simulation and LCNF phase reconstruction"};
  app.set_version_flag("--version", lcnf_version());
  app.require_subcommand(1);

  Common common;
  const char* env_root = std::getenv("LCNF_OUT");
  common.out_dir = env_root ? env_root : "lcnf_out";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file");
    sub->add_option("--profile", common.profile, "Default profile")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--out-dir", common.out_dir, "Output directory (default $LCNF_OUT or ./lcnf_out)");
    sub->add_option("--scale", common.scale, "Upsampling factor")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate one phantom under multiplexed or sequential illumination");
  bool sequential = false;
  simulate->add_flag("--sequential", sequential, "Single-LED scan instead of the five multiplexed patterns");

  auto* dpc = app.add_subcommand("dpc", "DPC phase from multiplexed measurements");
  std::string measurements;
  dpc->add_option("--measurements", measurements, "Measurement stack (float map)")->required();

  auto* fpm = app.add_subcommand("fpm", "Sequential FPM reconstruction");
  fpm->add_option("--measurements", measurements, "Sequential measurement stack (float map)")->required();

  auto* make_dataset = app.add_subcommand("make-dataset", "Simulate a train/val/test set of phantom pairs");

  auto* train = app.add_subcommand("train", "Train an LCNF model");
  std::string dataset_manifest, init_model;
  std::size_t steps = 2000, epoch_steps = 0, log_every = 100;
  train->add_option("--dataset", dataset_manifest, "make-dataset manifest")->required();
  train->add_option("--init", init_model, "Resume from a checkpoint");
  train->add_option("--steps", steps, "Optimizer steps")->check(CLI::PositiveNumber);
  train->add_option("--epoch-steps", epoch_steps, "Steps per epoch (0: train size / batch)");
  train->add_option("--log-every", log_every, "Print the loss every N steps");

  auto* infer = app.add_subcommand("infer", "Decode a phase map from a network input stack");
  std::string model_path, inputs_path;
  std::size_t tile = 0, overlap = 0;
  bool radians = false;
  infer->add_option("--model", model_path, "Checkpoint")->required();
  infer->add_option("--inputs", inputs_path, "6-plane input stack")->required();
  infer->add_option("--tile", tile, "Tile size in input pixels (0: whole image)");
  infer->add_option("--overlap", overlap, "Tile overlap in input pixels");
  infer->add_flag("--radians", radians, "Map the output to radians");

  auto* stitch = app.add_subcommand("stitch", "Alpha-blend row-major tiles into one image");
  std::vector<std::string> tiles;
  std::size_t rows = 0, cols = 0;
  stitch->add_option("--tiles", tiles, "Tile float maps, row-major")->required();
  stitch->add_option("--rows", rows, "Output rows")->required();
  stitch->add_option("--cols", cols, "Output columns")->required();
  stitch->add_option("--tile", tile, "Tile size")->required();
  stitch->add_option("--overlap", overlap, "Tile overlap")->required();

  auto* metrics = app.add_subcommand("metrics", "MSE, PSNR, SSIM and FM of a prediction against a reference");
  std::string pred, ref;
  std::optional<double> fm_ratio;
  metrics->add_option("--pred", pred, "Predicted image")->required();
  metrics->add_option("--ref", ref, "Reference image")->required();
  metrics->add_option("--fm-ratio", fm_ratio, "FM threshold ratio (default from config)");
  std::string dataset_label = "phantom", method_label = "LCNF";
  metrics->add_option("--dataset-label", dataset_label, "Dataset column of results.csv");
  metrics->add_option("--method", method_label, "Method column of results.csv");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every layer");
  std::size_t configs = 10;
  double tolerance = 1e-5;
  gradcheck->add_option("--configs", configs, "Random configurations per layer");
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

  for (auto* sub : {simulate, dpc, fpm, make_dataset, train, infer, stitch, metrics, gradcheck}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return LCNF_ERROR_CONFIG;
  }

  const std::string command_line = join_args(argc, argv);
  try {
    if (simulate->parsed()) {
      Run run("simulate", common, command_line, true);
      if (sequential) {
        const auto phase_path = run.output("phase.pfm", "phase");
        const auto meas_path = run.output("sequential_measurements.pfm", "measurements");
        run.begin();
        lcnf_image* phase = nullptr;
        lcnf_stack* meas = nullptr;
        check(lcnf_simulate_sequential(run.config(), run.seed(), &phase, &meas));
        Image p(phase);
        Stack m(meas);
        check(lcnf_image_write(p.get(), phase_path.c_str()));
        check(lcnf_stack_write(m.get(), meas_path.c_str()));
      } else {
        const auto phase_path = run.output("phase.pfm", "phase");
        const auto preview_path = run.output("phase.pgm", "preview");
        const auto meas_path = run.output("measurements.pfm", "measurements");
        const auto inputs_out = run.output("inputs.pfm", "inputs");
        const auto target_path = run.output("target.pfm", "target");
        run.begin();
        lcnf_image *phase = nullptr, *target = nullptr;
        lcnf_stack *meas = nullptr, *in = nullptr;
        check(lcnf_simulate_multiplexed(run.config(), run.seed(), &phase, &meas, &in, &target));
        Image p(phase), t(target);
        Stack m(meas), i(in);
        check(lcnf_image_write(p.get(), phase_path.c_str()));
        check(lcnf_image_write_preview(p.get(), preview_path.c_str()));
        check(lcnf_stack_write(m.get(), meas_path.c_str()));
        check(lcnf_stack_write(i.get(), inputs_out.c_str()));
        check(lcnf_image_write(t.get(), target_path.c_str()));
      }
      run.finish();
    } else if (dpc->parsed()) {
      require_inputs({measurements});
      Run run("dpc", common, command_line, false);
      const auto out_path = run.output("dpc_phase.pfm", "phase");
      const auto preview_path = run.output("dpc_phase.pgm", "preview");
      run.begin();
      auto m = make<Stack>(lcnf_stack_read, measurements.c_str());
      auto phase = make<Image>(lcnf_dpc, run.config(), m.get());
      check(lcnf_image_write(phase.get(), out_path.c_str()));
      check(lcnf_image_write_preview(phase.get(), preview_path.c_str()));
      run.finish();
    } else if (fpm->parsed()) {
      require_inputs({measurements});
      Run run("fpm", common, command_line, false);
      const auto field_path = run.output("fpm_field.pfm", "field");
      const auto loss_path = run.output("fpm_loss.csv", "loss");
      run.begin();
      auto m = make<Stack>(lcnf_stack_read, measurements.c_str());
      lcnf_stack* field = nullptr;
      std::vector<double> loss(4096);
      std::size_t count = 0;
      check(lcnf_fpm(run.config(), m.get(), &field, loss.data(), loss.size(), &count));
      Stack f(field);
      loss.resize(std::min(count, loss.size()));
      check(lcnf_stack_write(f.get(), field_path.c_str()));
      write_loss_csv(loss_path, loss);
      run.finish();
    } else if (make_dataset->parsed()) {
      Run run("make-dataset", common, command_line, true);
      run.begin();
      auto ds = make<Dataset>(lcnf_dataset_build, run.config(), run.seed(), run.jobs());
      check(lcnf_dataset_save(ds.get(), common.out_dir.c_str(), run.manifest(), run.manifest_path().c_str()));
      run.finish();
    } else if (train->parsed()) {
      require_inputs(init_model.empty() ? std::vector<std::string>{dataset_manifest}
                                        : std::vector<std::string>{dataset_manifest, init_model});
      Run run("train", common, command_line, true);
      const auto model_out = run.output("model.ckpt", "checkpoint");
      const auto loss_path = run.output("train_loss.json", "loss");
      run.begin();
      auto ds = make<Dataset>(lcnf_dataset_load, dataset_manifest.c_str(), "train");
      Model model = init_model.empty() ? make<Model>(lcnf_model_create, run.config(), run.seed())
                                       : make<Model>(lcnf_model_load, init_model.c_str());
      std::vector<double> losses(steps);
      auto log = [](void* user, std::size_t step, double loss, double lr) {
        const std::size_t every = *static_cast<std::size_t*>(user);
        if (every && step % every == 0) std::fprintf(stderr, "step %zu loss %.6f lr %.3g\n", step, loss, lr);
      };
      check(lcnf_model_train(model.get(), ds.get(), steps, epoch_steps, log, &log_every, losses.data()));
      check(lcnf_model_save(model.get(), model_out.c_str()));
      write_json(loss_path, json{{"loss", losses}});
      run.finish();
    } else if (infer->parsed()) {
      require_inputs({model_path, inputs_path});
      Run run("infer", common, command_line, false);
      const auto out_path = run.output("prediction.pfm", "phase");
      const auto preview_path = run.output("prediction.pgm", "preview");
      run.begin();
      auto model = make<Model>(lcnf_model_load, model_path.c_str());
      auto in = make<Stack>(lcnf_stack_read, inputs_path.c_str());
      auto plane = make<Image>(lcnf_stack_plane, in.get(), std::size_t{0});
      const std::size_t s = run.scale().value_or(0);
      if (s == 0) config_error("infer requires --scale");
      Image out;
      if (tile == 0) {
        out = make<Image>(lcnf_model_infer, model.get(), in.get(), lcnf_image_rows(plane.get()) * s,
                          lcnf_image_cols(plane.get()) * s, run.jobs(), radians ? 1 : 0);
      } else {
        out = make<Image>(lcnf_model_infer_tiled, model.get(), in.get(), s, tile, overlap, run.jobs(), radians ? 1 : 0);
      }
      check(lcnf_image_write(out.get(), out_path.c_str()));
      check(lcnf_image_write_preview(out.get(), preview_path.c_str()));
      run.finish();
    } else if (stitch->parsed()) {
      require_inputs(tiles);
      Run run("stitch", common, command_line, false);
      const auto out_path = run.output("stitched.pfm", "phase");
      run.begin();
      std::vector<Image> owned;
      std::vector<const lcnf_image*> raw;
      for (const auto& t : tiles) {
        owned.push_back(make<Image>(lcnf_image_read, t.c_str()));
        raw.push_back(owned.back().get());
      }
      auto out = make<Image>(lcnf_stitch, raw.data(), raw.size(), rows, cols, tile, overlap);
      check(lcnf_image_write(out.get(), out_path.c_str()));
      run.finish();
    } else if (metrics->parsed()) {
      require_inputs({pred, ref});
      Run run("metrics", common, command_line, false);
      const auto report_path = run.output("metrics.json", "report");
      const auto table_path = run.output("results.csv", "table");
      run.begin();
      auto p = make<Image>(lcnf_image_read, pred.c_str());
      auto r = make<Image>(lcnf_image_read, ref.c_str());
      double ratio = 1000.0;
      if (fm_ratio) {
        ratio = *fm_ratio;
      } else {
        std::size_t needed = 0;
        check(lcnf_config_json(run.config(), nullptr, 0, &needed));
        std::string text(needed, '\0');
        check(lcnf_config_json(run.config(), text.data(), text.size(), &needed));
        ratio = json::parse(text.c_str())["metrics"]["fm_threshold_ratio"].get<double>();
      }
      lcnf_metrics m{};
      check(lcnf_metrics_compute(p.get(), r.get(), ratio, &m));
      char hash[17];
      check(lcnf_config_hash(run.config(), hash, sizeof hash));
      const json report = {{"mse", m.mse},         {"psnr_db", finite_or_null(m.psnr_db)},
                           {"ssim", m.ssim},       {"fm", m.fm},
                           {"pred", pred},         {"ref", ref},
                           {"units", "normalized"}, {"config_hash", hash}};
      write_json(report_path, report);
      append_result_row(table_path, dataset_label, method_label, m);
      std::cout << report.dump() << "\n";
      run.finish();
    } else if (gradcheck->parsed()) {
      Run run("gradcheck", common, command_line, false);
      const auto report_path = run.output("gradcheck.json", "report");
      run.begin();
      std::size_t count = 0;
      check(lcnf_gradcheck(run.seed(), configs, tolerance, nullptr, 0, &count));
      std::vector<lcnf_gradcheck_row> results(count);
      check(lcnf_gradcheck(run.seed(), configs, tolerance, results.data(), results.size(), &count));
      json rows_json = json::array();
      bool all = true;
      for (const auto& r : results) {
        std::printf("%-20s max_rel_error %.3e  %s\n", r.layer, r.max_rel_error, r.passed ? "ok" : "FAIL");
        rows_json.push_back({{"layer", r.layer}, {"max_rel_error", r.max_rel_error}, {"configs", r.configs},
                             {"passed", r.passed != 0}});
        all = all && r.passed;
      }
      write_json(report_path, json{{"tolerance", tolerance}, {"results", rows_json}, {"passed", all}});
      run.finish();
      if (!all) {
        std::cerr << json{{"error", {{"kind", "numeric"}, {"message", "gradient check failed"}}}}.dump() << "\n";
        return LCNF_ERROR_NUMERIC;
      }
    }
  } catch (const Failure& f) {
    std::cerr << json{{"error", {{"kind", kind_name(f.status)}, {"message", f.message}}}}.dump() << "\n";
    return f.status;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return LCNF_ERROR_INTERNAL;
  }
  return 0;
}
