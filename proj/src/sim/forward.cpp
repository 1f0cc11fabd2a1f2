#include "sim/forward.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "optics/fft.hpp"

namespace lcnf::sim {

ComplexGrid ObjectField::transmittance() const {
  validate();
  ComplexGrid o(phase.rows(), phase.cols());
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::exp(cdouble(-absorption[i], phase[i]));
  return o;
}

void ObjectField::validate() const {
  require_same_shape(absorption, phase, "ObjectField");
  if (phase.empty()) throw ShapeError("ObjectField is empty");
  if (!(pitch_um > 0.0)) throw ConfigError("ObjectField pitch must be > 0");
  for (double m : absorption.vec())
    if (m < 0.0) throw ConfigError("absorption must be >= 0");
}

void MeasurementSet::validate() const {
  if (images.size() != patterns.size())
    throw ShapeError("measurement count " + std::to_string(images.size()) + " != pattern count " +
                     std::to_string(patterns.size()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    require_same_shape(images[i], images.front(), "MeasurementSet");
    for (double v : images[i].vec())
      if (!(v >= 0.0)) throw NumericError("measurement " + std::to_string(i) + " has a negative or NaN pixel");
  }
}

namespace {

RealGrid intensity_from_spectrum(const ComplexGrid& spec, const optics::FrequencyAxes& axes, double pitch_um,
                                 const optics::Led& led, const optics::Pupil& pupil) {
  const std::size_t rows = spec.rows(), cols = spec.cols();
  const auto shift = optics::led_pixel_shift(led, axes);
  // field spectrum E(k) = O(k - s) P(k); every pupil pixel must read inside the grid
  ComplexGrid field_spec(rows, cols);
  const long R = static_cast<long>(rows), C = static_cast<long>(cols);
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      const cdouble p = pupil.mask(r, c);
      if (p == cdouble(0.0)) continue;
      const long sr = r - shift.dy, sc = c - shift.dx;
      if (sr < 0 || sr >= R || sc < 0 || sc >= C) {
        std::ostringstream msg;
        msg << "LED (uy=" << led.uy << ", ux=" << led.ux << ") 1/um shifts the spectrum beyond the grid; "
            << "object pitch " << pitch_um << " um is too coarse";
        throw ConfigError(msg.str());
      }
      field_spec(r, c) = spec(sr, sc) * p;
    }
  const ComplexGrid field = optics::inverse_spectrum(field_spec);
  RealGrid out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(field[i]);
  return out;
}

}  // namespace

RealGrid simulate_single_led(const ComplexGrid& transmittance, double pitch_um, const optics::Led& led,
                             const optics::Pupil& pupil) {
  require_same_shape(transmittance, pupil.mask, "simulate_single_led");
  const auto axes = optics::make_frequency_axes({transmittance.rows(), transmittance.cols()}, pitch_um);
  return intensity_from_spectrum(optics::spectrum(transmittance), axes, pitch_um, led, pupil);
}

RealGrid simulate_single_led(const ObjectField& object, const optics::Led& led, const optics::Pupil& pupil) {
  return simulate_single_led(object.transmittance(), object.pitch_um, led, pupil);
}

RealGrid simulate_multiplexed(const ComplexGrid& transmittance, double pitch_um,
                              const optics::IlluminationPattern& pattern, const optics::Pupil& pupil) {
  if (pattern.leds.empty()) throw ConfigError("cannot simulate an empty illumination pattern");
  require_same_shape(transmittance, pupil.mask, "simulate_multiplexed");
  const auto axes = optics::make_frequency_axes({transmittance.rows(), transmittance.cols()}, pitch_um);
  const ComplexGrid spec = optics::spectrum(transmittance);
  RealGrid sum(transmittance.rows(), transmittance.cols());
  for (const auto& led : pattern.leds) {
    const RealGrid single = intensity_from_spectrum(spec, axes, pitch_um, led, pupil);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += single[i];
  }
  return sum;
}

RealGrid simulate_multiplexed(const ObjectField& object, const optics::IlluminationPattern& pattern,
                              const optics::Pupil& pupil) {
  return simulate_multiplexed(object.transmittance(), object.pitch_um, pattern, pupil);
}

RealGrid downsample_intensity(const RealGrid& hr, std::size_t factor) {
  if (factor == 0 || hr.rows() % factor != 0 || hr.cols() % factor != 0)
    throw ConfigError("downsample factor " + std::to_string(factor) + " does not divide " +
                      std::to_string(hr.rows()) + "x" + std::to_string(hr.cols()));
  RealGrid out(hr.rows() / factor, hr.cols() / factor);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t r = 0; r < hr.rows(); ++r)
    for (std::size_t c = 0; c < hr.cols(); ++c) out(r / factor, c / factor) += hr(r, c);
  for (auto& v : out.vec()) v *= inv;
  return out;
}

RealGrid decimate(const RealGrid& hr, std::size_t factor) {
  if (factor == 0 || hr.rows() % factor != 0 || hr.cols() % factor != 0)
    throw ConfigError("decimation factor " + std::to_string(factor) + " does not divide the grid");
  RealGrid out(hr.rows() / factor, hr.cols() / factor);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = hr(r * factor, c * factor);
  return out;
}

RealGrid add_shot_noise(const RealGrid& intensity, double photons, std::uint64_t seed) {
  if (!(photons > 0.0)) throw ConfigError("photon count must be > 0");
  std::mt19937_64 rng(seed);
  RealGrid out(intensity.rows(), intensity.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::poisson_distribution<long long> d(std::max(0.0, intensity[i]) * photons);
    out[i] = static_cast<double>(d(rng)) / photons;
  }
  return out;
}

}  // namespace lcnf::sim
