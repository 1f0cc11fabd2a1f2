#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "common/grid.hpp"

namespace lcnf::optics {

/// Complex field sampled on a square-pixel grid.
struct ComplexField2D {
  ComplexGrid data;
  double pitch_um = 1.0;
};

struct OpticalSystem {
  double wavelength_um = 0.63;
  double objective_na = 0.1;
  double magnification = 4.0;
  double camera_pixel_um = 6.5;
  std::size_t sensor_rows = 2160;
  std::size_t sensor_cols = 2560;

  /// Object-plane sampling of the camera.
  double object_pitch_um() const { return camera_pixel_um / magnification; }
  /// Pupil radius NA/lambda in 1/um.
  double cutoff_freq() const { return objective_na / wavelength_um; }

  void validate() const;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool operator==(const Shape&) const = default;
};

/// Per-axis DC-centered frequency samples: axis[k] = (k - n/2) / (n * pitch).
struct FrequencyAxes {
  std::vector<double> uy;  // along rows
  std::vector<double> ux;  // along cols
  double dy = 0.0;         // spacing 1/(rows*pitch)
  double dx = 0.0;
};

FrequencyAxes make_frequency_axes(Shape shape, double pitch_um);

/// Complex pupil on a centered frequency grid.
struct Pupil {
  ComplexGrid mask;
  double cutoff_freq = 0.0;
  double pitch_um = 1.0;  // real-space pitch of the grid the pupil lives on
};

Pupil make_pupil(const OpticalSystem& system, Shape shape, double pitch_um);

/// One LED expressed by its illumination spatial frequency (sin(theta)/lambda).
struct Led {
  double uy = 0.0;
  double ux = 0.0;
  double norm() const;
};

enum class PatternKind { Brightfield, Darkfield };

struct IlluminationPattern {
  std::vector<Led> leds;
  PatternKind kind = PatternKind::Brightfield;
  std::string name;
};

/// Classifies a LED set; throws if it mixes brightfield and darkfield LEDs.
PatternKind classify(const std::vector<Led>& leds, const OpticalSystem& system);

/// Square LED lattice with spacing `spacing_na` (in NA units) truncated to
/// |u|*lambda <= max_na, ordered center-out (ties by row, then column).
std::vector<Led> led_lattice(const OpticalSystem& system, double spacing_na, double max_na);

struct MultiplexConfig {
  double max_illum_na = 0.41;
  std::size_t arc_count = 3;
  /// Lattice pitch of the LED board in NA units. 0.41/8 puts 197 LEDs inside
  /// the 0.41 NA disk, enough to host the 185-LED sequential scan.
  double lattice_spacing_na = 0.41 / 8.0;
};

/// Two complementary brightfield half-disks followed by `arc_count`
/// darkfield arcs of 360/arc_count degrees each.
std::vector<IlluminationPattern> semicircle_and_arc_patterns(const OpticalSystem& system,
                                                             const MultiplexConfig& config);

/// `led_count` single-LED patterns, center-out, all within max_illum_na.
std::vector<IlluminationPattern> sequential_grid_pattern(const OpticalSystem& system,
                                                         std::size_t led_count,
                                                         double max_illum_na = 0.41);

/// Integer frequency-pixel offset of a LED on a grid (rounded).
struct PixelShift {
  long dy = 0;
  long dx = 0;
};
PixelShift led_pixel_shift(const Led& led, const FrequencyAxes& axes);

}  // namespace lcnf::optics
