#include "sim/dataset.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "sim/phantom.hpp"

namespace lcnf::sim {

void DatasetPair::validate() const {
  if (scale < 1) throw ShapeError("dataset pair scale must be >= 1");
  const std::size_t r = inputs.rows(), c = inputs.cols();
  for (const auto& ch : inputs.channels)
    if (ch.rows() != r || ch.cols() != c) throw ShapeError("input channels differ in shape");
  if (target.rows() != r * scale || target.cols() != c * scale)
    throw ShapeError("target " + std::to_string(target.rows()) + "x" + std::to_string(target.cols()) +
                     " is not " + std::to_string(scale) + "x the input " + std::to_string(r) + "x" +
                     std::to_string(c));
}

void DatasetConfig::validate() const {
  system.validate();
  preprocess.validate();
  if (lr_size < 4) throw ConfigError("lr_size must be >= 4");
  if (scale < 1) throw ConfigError("scale must be >= 1");
  if (!(psd_corner > 0.0)) throw ConfigError("psd_corner must be > 0");
  if (preprocess.open_kernel_lr > lr_size) throw ConfigError("open_kernel_lr exceeds the measurement size");
  if (preprocess.open_kernel_sim > hr_size()) throw ConfigError("open_kernel_sim exceeds the target size");
}

DatasetConfig DatasetConfig::desk() {
  DatasetConfig c;
  c.system.sensor_rows = c.lr_size;
  c.system.sensor_cols = c.lr_size;
  // measurement background kernel scaled from 250 px patches
  c.preprocess.open_kernel_lr = prep::scale_kernel(c.preprocess.open_kernel_lr, 250, c.lr_size);
  return c;
}

std::vector<ObjectField> phantom_objects(const std::vector<std::uint64_t>& seeds, const DatasetConfig& config) {
  config.validate();
  const std::size_t n = config.hr_size();
  const auto& pc = config.preprocess;
  std::vector<RealGrid> images;
  images.reserve(seeds.size());
  for (auto seed : seeds) {
    const RealGrid tex = generate_texture_image(seed, {n, n});
    const RealGrid bg = prep::morphological_open(tex, pc.open_kernel_sim);
    RealGrid g(n, n);
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] = std::clamp(tex[k] - bg[k], 0.0, pc.sim_value_threshold) / pc.sim_value_threshold;
    images.push_back(std::move(g));
  }
  const RealGrid ref = prep::power_law_psd(n, n, config.psd_exponent, config.psd_corner);
  const std::vector<RealGrid> matched = prep::psd_match(images, ref);
  std::vector<ObjectField> objects;
  objects.reserve(matched.size());
  for (const auto& g : matched) objects.push_back(object_from_normalized(g, pc, config.hr_pitch_um()));
  return objects;
}

ObjectField object_from_normalized(const RealGrid& g, const prep::PreprocessConfig& config, double pitch_um) {
  ObjectField o;
  o.pitch_um = pitch_um;
  o.phase = g;
  for (auto& v : o.phase.vec()) v = config.sim_phase_scale * v + config.sim_phase_offset;
  o.absorption = RealGrid(g.rows(), g.cols());
  return o;
}

RealGrid phase_target(const ObjectField& object, const prep::PreprocessConfig& config) {
  RealGrid t = object.phase;
  for (auto& v : t.vec()) v = (v - config.sim_phase_offset) / config.sim_phase_scale;
  return t;
}

MeasurementSet simulate_measurements(const ObjectField& object, const DatasetConfig& config,
                                     const std::vector<optics::IlluminationPattern>& patterns) {
  object.validate();
  const optics::Pupil pupil = optics::make_pupil(config.system, object.shape(), object.pitch_um);
  const ComplexGrid t = object.transmittance();
  MeasurementSet m;
  m.system = config.system;
  m.pitch_um = object.pitch_um * static_cast<double>(config.scale);
  m.patterns = patterns;
  for (const auto& p : patterns) {
    RealGrid lr = downsample_intensity(simulate_multiplexed(t, object.pitch_um, p, pupil), config.scale);
    const double inv = 1.0 / static_cast<double>(p.leds.size());
    for (auto& v : lr.vec()) v *= inv;
    m.images.push_back(std::move(lr));
  }
  return m;
}

std::vector<DatasetPair> build_dataset(const std::vector<ObjectField>& objects, const DatasetConfig& config,
                                       std::size_t jobs) {
  config.validate();
  const auto patterns = optics::semicircle_and_arc_patterns(config.system, config.multiplex);
  std::vector<DatasetPair> pairs(objects.size());
  parallel_for(objects.size(), jobs, [&](std::size_t i) {
    try {
      const auto& obj = objects[i];
      if (obj.phase.rows() != config.hr_size() || obj.phase.cols() != config.hr_size())
        throw ShapeError("object is " + std::to_string(obj.phase.rows()) + "x" + std::to_string(obj.phase.cols()) +
                         ", expected " + std::to_string(config.hr_size()) + " square");
      DatasetPair p;
      p.inputs = prep::prepare_network_inputs(simulate_measurements(obj, config, patterns), config.preprocess);
      p.target = phase_target(obj, config.preprocess);
      p.scale = config.scale;
      p.seed = i;
      pairs[i] = std::move(p);
    } catch (const Error& e) {
      throw Error(e.kind(), "object " + std::to_string(i) + ": " + e.what());
    }
  });
  return pairs;
}

}  // namespace lcnf::sim
