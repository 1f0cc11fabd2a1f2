#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "common/grid.hpp"
#include "optics/optics.hpp"

namespace lcnf::sim {

/// Thin object with transmittance exp(-absorption + i*phase).
struct ObjectField {
  RealGrid absorption;
  RealGrid phase;
  double pitch_um = 1.0;

  optics::Shape shape() const { return {phase.rows(), phase.cols()}; }
  ComplexGrid transmittance() const;
  void validate() const;
};

struct MeasurementSet {
  std::vector<RealGrid> images;
  std::vector<optics::IlluminationPattern> patterns;
  optics::OpticalSystem system;
  double pitch_um = 1.0;  // sampling pitch of `images`

  void validate() const;
};

/// |F^-1[O(u - u_i) P(u)]|^2 on the object grid (no downsampling).
RealGrid simulate_single_led(const ComplexGrid& transmittance, double pitch_um, const optics::Led& led,
                             const optics::Pupil& pupil);
RealGrid simulate_single_led(const ObjectField& object, const optics::Led& led, const optics::Pupil& pupil);

/// Sum of single-LED intensities, accumulated in pattern order.
RealGrid simulate_multiplexed(const ComplexGrid& transmittance, double pitch_um,
                              const optics::IlluminationPattern& pattern, const optics::Pupil& pupil);
RealGrid simulate_multiplexed(const ObjectField& object, const optics::IlluminationPattern& pattern,
                              const optics::Pupil& pupil);

/// Block-mean pooling by an integer factor.
RealGrid downsample_intensity(const RealGrid& hr, std::size_t factor);

/// Keeps every `factor`-th sample starting at 0 (no pooling).
RealGrid decimate(const RealGrid& hr, std::size_t factor);

/// Poisson shot noise at `photons` expected counts per unit intensity.
RealGrid add_shot_noise(const RealGrid& intensity, double photons, std::uint64_t seed);

}  // namespace lcnf::sim
