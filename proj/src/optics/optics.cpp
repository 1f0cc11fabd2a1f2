#include "optics/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lcnf::optics {

void OpticalSystem::validate() const {
  if (!(wavelength_um > 0.0)) throw ConfigError("wavelength_um must be > 0");
  if (!(objective_na > 0.0 && objective_na < 1.0)) throw ConfigError("objective_na must lie in (0, 1)");
  if (!(magnification > 0.0)) throw ConfigError("magnification must be > 0");
  if (!(camera_pixel_um > 0.0)) throw ConfigError("camera_pixel_um must be > 0");
  if (sensor_rows == 0 || sensor_cols == 0) throw ConfigError("sensor shape must be non-empty");
}

FrequencyAxes make_frequency_axes(Shape shape, double pitch_um) {
  if (!(pitch_um > 0.0)) throw ConfigError("pitch must be > 0, got " + std::to_string(pitch_um));
  if (shape.rows < 2 || shape.cols < 2) throw ConfigError("frequency grid must be at least 2x2");
  FrequencyAxes axes;
  axes.dy = 1.0 / (static_cast<double>(shape.rows) * pitch_um);
  axes.dx = 1.0 / (static_cast<double>(shape.cols) * pitch_um);
  axes.uy.resize(shape.rows);
  axes.ux.resize(shape.cols);
  const long hr = static_cast<long>(shape.rows / 2), hc = static_cast<long>(shape.cols / 2);
  for (std::size_t k = 0; k < shape.rows; ++k) axes.uy[k] = static_cast<double>(static_cast<long>(k) - hr) * axes.dy;
  for (std::size_t k = 0; k < shape.cols; ++k) axes.ux[k] = static_cast<double>(static_cast<long>(k) - hc) * axes.dx;
  return axes;
}

Pupil make_pupil(const OpticalSystem& system, Shape shape, double pitch_um) {
  system.validate();
  const FrequencyAxes axes = make_frequency_axes(shape, pitch_um);
  const double cutoff = system.cutoff_freq();
  const double nyquist = 0.5 / pitch_um;
  if (nyquist < cutoff) {
    std::ostringstream msg;
    msg << "grid pitch " << pitch_um << " um cannot hold pupil cutoff " << cutoff
        << " 1/um; pitch must be <= " << 0.5 / cutoff << " um";
    throw ConfigError(msg.str());
  }
  Pupil p;
  p.cutoff_freq = cutoff;
  p.pitch_um = pitch_um;
  p.mask = ComplexGrid(shape.rows, shape.cols);
  // Compare squared radii in pixel units so the disk is exactly centrosymmetric.
  for (std::size_t r = 0; r < shape.rows; ++r)
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const double u2 = axes.uy[r] * axes.uy[r] + axes.ux[c] * axes.ux[c];
      if (u2 <= cutoff * cutoff) p.mask(r, c) = 1.0;
    }
  return p;
}

double Led::norm() const { return std::hypot(uy, ux); }

PatternKind classify(const std::vector<Led>& leds, const OpticalSystem& system) {
  if (leds.empty()) throw ConfigError("empty illumination pattern");
  std::size_t bf = 0;
  for (const Led& l : leds)
    if (l.norm() * system.wavelength_um <= system.objective_na) ++bf;
  if (bf == leds.size()) return PatternKind::Brightfield;
  if (bf == 0) return PatternKind::Darkfield;
  throw ConfigError("illumination pattern mixes brightfield and darkfield LEDs");
}

std::vector<Led> led_lattice(const OpticalSystem& system, double spacing_na, double max_na) {
  if (!(spacing_na > 0.0)) throw ConfigError("LED lattice spacing must be > 0");
  if (!(max_na >= 0.0) || max_na > 0.41 + 1e-12)
    throw ConfigError("maximum illumination NA must lie in [0, 0.41]");
  const long k = static_cast<long>(std::floor(max_na / spacing_na + 1e-9));
  struct Site {
    long i, j;
    double r2;
  };
  std::vector<Site> sites;
  for (long i = -k; i <= k; ++i)
    for (long j = -k; j <= k; ++j) {
      const double na = spacing_na * std::hypot(static_cast<double>(i), static_cast<double>(j));
      if (na <= max_na + 1e-12) sites.push_back({i, j, static_cast<double>(i * i + j * j)});
    }
  std::stable_sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
    if (a.r2 != b.r2) return a.r2 < b.r2;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<Led> leds;
  leds.reserve(sites.size());
  const double scale = spacing_na / system.wavelength_um;
  for (const Site& s : sites) leds.push_back({scale * static_cast<double>(s.i), scale * static_cast<double>(s.j)});
  return leds;
}

std::vector<IlluminationPattern> semicircle_and_arc_patterns(const OpticalSystem& system,
                                                             const MultiplexConfig& config) {
  system.validate();
  if (config.arc_count == 0) throw ConfigError("arc_count must be >= 1");
  if (!(config.max_illum_na > system.objective_na))
    throw ConfigError("max_illum_na must exceed the objective NA for darkfield arcs");

  const std::vector<Led> lattice = led_lattice(system, config.lattice_spacing_na, config.max_illum_na);
  IlluminationPattern top{{}, PatternKind::Brightfield, "bf_top"};
  IlluminationPattern bottom{{}, PatternKind::Brightfield, "bf_bottom"};
  std::vector<IlluminationPattern> arcs(config.arc_count);
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    arcs[a].kind = PatternKind::Darkfield;
    arcs[a].name = "df_arc" + std::to_string(a + 1);
  }

  const double two_pi = 2.0 * std::numbers::pi;
  for (const Led& led : lattice) {
    const double na = led.norm() * system.wavelength_um;
    if (na <= system.objective_na) {
      // Upper half-plane (uy > 0, or uy == 0 with ux >= 0) holds the on-axis LED.
      const bool upper = led.uy > 0.0 || (led.uy == 0.0 && led.ux >= 0.0);
      (upper ? top : bottom).leds.push_back(led);
    } else {
      double angle = std::atan2(led.uy, led.ux);
      if (angle < 0.0) angle += two_pi;
      auto sector = static_cast<std::size_t>(angle / (two_pi / static_cast<double>(config.arc_count)));
      sector = std::min(sector, config.arc_count - 1);
      arcs[sector].leds.push_back(led);
    }
  }
  if (top.leds.empty() || bottom.leds.empty())
    throw ConfigError("LED lattice too coarse: a brightfield semicircle is empty");
  for (const auto& arc : arcs)
    if (arc.leds.empty()) throw ConfigError("LED lattice too coarse: darkfield arc " + arc.name + " is empty");

  std::vector<IlluminationPattern> out;
  out.reserve(2 + arcs.size());
  out.push_back(std::move(top));
  out.push_back(std::move(bottom));
  for (auto& a : arcs) out.push_back(std::move(a));
  return out;
}

std::vector<IlluminationPattern> sequential_grid_pattern(const OpticalSystem& system, std::size_t led_count,
                                                         double max_illum_na) {
  system.validate();
  if (led_count == 0) throw ConfigError("led_count must be >= 1");
  // Coarsest lattice (spacing max_na/k) that still fits led_count LEDs.
  std::vector<Led> lattice;
  if (max_illum_na == 0.0) {
    if (led_count > 1) throw ConfigError("only one LED fits at zero illumination NA");
    lattice.push_back({0.0, 0.0});
  } else {
    for (long k = 1;; ++k) {
      lattice = led_lattice(system, max_illum_na / static_cast<double>(k), max_illum_na);
      if (lattice.size() >= led_count) break;
    }
  }
  std::vector<IlluminationPattern> out;
  out.reserve(led_count);
  for (std::size_t i = 0; i < led_count; ++i) {
    IlluminationPattern p;
    p.leds = {lattice[i]};
    p.kind = classify(p.leds, system);
    p.name = "led" + std::to_string(i);
    out.push_back(std::move(p));
  }
  return out;
}

PixelShift led_pixel_shift(const Led& led, const FrequencyAxes& axes) {
  return {std::lround(led.uy / axes.dy), std::lround(led.ux / axes.dx)};
}

}  // namespace lcnf::optics
