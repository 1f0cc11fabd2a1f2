#pragma once

#include <cstdint>
#include <vector>

#include "optics/optics.hpp"
#include "preprocess/preprocess.hpp"
#include "sim/forward.hpp"

namespace lcnf::sim {

/// One training example: six low-resolution channels and the normalized
/// high-resolution phase target, `scale` times larger per axis.
struct DatasetPair {
  prep::InputStack inputs;
  RealGrid target;
  std::size_t scale = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DatasetConfig {
  optics::OpticalSystem system;
  optics::MultiplexConfig multiplex;
  prep::PreprocessConfig preprocess;
  std::size_t lr_size = 32;
  std::size_t scale = 3;
  // Power-law reference spectrum for the simulated phase targets.
  double psd_exponent = 2.0;
  double psd_corner = 0.05;  // cycles per pixel

  double hr_pitch_um() const { return system.object_pitch_um() / static_cast<double>(scale); }
  std::size_t hr_size() const { return lr_size * scale; }
  void validate() const;

  /// 32x32 inputs, 3x targets, paper optics.
  static DatasetConfig desk();
};

/// Phase-only objects from procedural texture images: top-hat background
/// removal, clipping at the value threshold, PSD matching across the set,
/// then psi = sim_phase_scale * g + sim_phase_offset.
std::vector<ObjectField> phantom_objects(const std::vector<std::uint64_t>& seeds, const DatasetConfig& config);

/// Phase-only object from a normalized image g in [0, 1].
ObjectField object_from_normalized(const RealGrid& g, const prep::PreprocessConfig& config, double pitch_um);

/// (psi - sim_phase_offset) / sim_phase_scale, the inverse of the mapping above.
RealGrid phase_target(const ObjectField& object, const prep::PreprocessConfig& config);

/// The five multiplexed measurements of `object`, block-mean downsampled and
/// divided by each pattern's LED count.
MeasurementSet simulate_measurements(const ObjectField& object, const DatasetConfig& config,
                                     const std::vector<optics::IlluminationPattern>& patterns);

/// Simulate, downsample, preprocess and pair each object with its target.
/// Failures name the offending object index.
std::vector<DatasetPair> build_dataset(const std::vector<ObjectField>& objects, const DatasetConfig& config,
                                       std::size_t jobs = 1);

}  // namespace lcnf::sim
