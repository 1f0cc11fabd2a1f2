#pragma once

#include <cstddef>
#include <vector>

#include "common/grid.hpp"
#include "optics/optics.hpp"
#include "sim/forward.hpp"

namespace lcnf::fpm {

struct FpmConfig {
  std::size_t epochs = 50;
  double object_step = 1.0;  // alpha
  double pupil_step = 1.0;   // beta
  bool enable_pupil_recovery = true;
  bool enable_offsets = false;
  std::size_t upsample = 2;  // high-resolution grid = upsample x measurement grid

  void validate() const;
};

struct FpmState {
  ComplexGrid object_spectrum;  // centered, high-resolution grid
  ComplexGrid pupil;            // centered, measurement grid
  std::vector<double> offsets;  // one per measurement, in measurement order
  std::vector<double> loss_history;  // [initial, after epoch 1, ...]
  double hr_pitch_um = 1.0;

  /// High-resolution complex transmittance estimate.
  ComplexGrid object_field() const;
};

/// Sequential amplitude-replacement reconstruction with optional pupil
/// recovery and darkfield background offsets. `measurements` must contain
/// single-LED patterns; they are visited center-out.
FpmState fpm_reconstruct(const sim::MeasurementSet& measurements, const FpmConfig& config);

/// sum_i || sqrt(I_i) - |F^-1[O(u - u_i) P(u)]| - b_i ||^2
double fpm_objective(const FpmState& state, const sim::MeasurementSet& measurements);

/// Low-resolution amplitude predicted by `state` for LED `led`.
RealGrid predicted_amplitude(const FpmState& state, const sim::MeasurementSet& measurements, const optics::Led& led);

/// Objective NA plus the largest illumination NA across `patterns`.
double synthetic_na(const optics::OpticalSystem& system, const std::vector<optics::IlluminationPattern>& patterns);

}  // namespace lcnf::fpm
