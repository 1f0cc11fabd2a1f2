#include "fpm/fpm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "optics/fft.hpp"

namespace lcnf::fpm {

void FpmConfig::validate() const {
  if (epochs < 1) throw ConfigError("fpm epochs must be >= 1");
  if (!(object_step > 0.0 && object_step <= 2.0)) throw ConfigError("fpm object_step must lie in (0, 2]");
  if (!(pupil_step > 0.0 && pupil_step <= 2.0)) throw ConfigError("fpm pupil_step must lie in (0, 2]");
  if (upsample < 1) throw ConfigError("fpm upsample must be >= 1");
}

namespace {

constexpr double kEps = 1e-12;

// Geometry shared by reconstruction and objective evaluation.
struct Geometry {
  std::size_t n_rows, n_cols;  // measurement grid
  std::size_t N_rows, N_cols;  // high-resolution grid
  double scale;                // n^2 / N^2 crop normalization
  std::vector<optics::PixelShift> shifts;

  // High-resolution index read by measurement-grid pixel (r, c) for LED i.
  long hr_row(std::size_t i, std::size_t r) const {
    return static_cast<long>(N_rows / 2) - shifts[i].dy + static_cast<long>(r) - static_cast<long>(n_rows / 2);
  }
  long hr_col(std::size_t i, std::size_t c) const {
    return static_cast<long>(N_cols / 2) - shifts[i].dx + static_cast<long>(c) - static_cast<long>(n_cols / 2);
  }
};

Geometry make_geometry(const sim::MeasurementSet& m, std::size_t N_rows, std::size_t N_cols) {
  m.validate();
  if (m.images.empty()) throw ConfigError("fpm needs at least one measurement");
  Geometry g;
  g.n_rows = m.images[0].rows();
  g.n_cols = m.images[0].cols();
  g.N_rows = N_rows;
  g.N_cols = N_cols;
  g.scale = static_cast<double>(g.n_rows * g.n_cols) / static_cast<double>(N_rows * N_cols);
  const double hr_pitch = m.pitch_um * static_cast<double>(g.n_rows) / static_cast<double>(N_rows);
  const auto axes = optics::make_frequency_axes({N_rows, N_cols}, hr_pitch);
  for (std::size_t i = 0; i < m.patterns.size(); ++i) {
    if (m.patterns[i].leds.size() != 1)
      throw ConfigError("fpm expects sequential single-LED measurements; pattern " + std::to_string(i) + " has " +
                        std::to_string(m.patterns[i].leds.size()) + " LEDs");
    g.shifts.push_back(optics::led_pixel_shift(m.patterns[i].leds[0], axes));
    const long r0 = g.hr_row(i, 0), r1 = g.hr_row(i, g.n_rows - 1);
    const long c0 = g.hr_col(i, 0), c1 = g.hr_col(i, g.n_cols - 1);
    if (r0 < 0 || c0 < 0 || r1 >= static_cast<long>(N_rows) || c1 >= static_cast<long>(N_cols)) {
      std::ostringstream msg;
      msg << "LED " << i << " (uy=" << m.patterns[i].leds[0].uy << ", ux=" << m.patterns[i].leds[0].ux
          << ") lies outside the high-resolution grid support; increase upsample";
      throw ConfigError(msg.str());
    }
  }
  return g;
}

ComplexGrid crop(const ComplexGrid& O, const Geometry& g, std::size_t i) {
  ComplexGrid w(g.n_rows, g.n_cols);
  for (std::size_t r = 0; r < g.n_rows; ++r)
    for (std::size_t c = 0; c < g.n_cols; ++c) w(r, c) = O(g.hr_row(i, r), g.hr_col(i, c));
  return w;
}

ComplexGrid low_res_field(const ComplexGrid& window, const ComplexGrid& pupil, double scale) {
  ComplexGrid psi(window.rows(), window.cols());
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = scale * window[k] * pupil[k];
  return optics::inverse_spectrum(psi);
}

double residual_sq(const RealGrid& sqrt_i, const ComplexGrid& g, double b) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = sqrt_i[k] - std::abs(g[k]) - b;
    s += d * d;
  }
  return s;
}

double objective(const FpmState& state, const std::vector<RealGrid>& amps, const Geometry& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i)
    total += residual_sq(amps[i], low_res_field(crop(state.object_spectrum, g, i), state.pupil, g.scale),
                         state.offsets[i]);
  return total;
}

std::vector<RealGrid> amplitudes(const sim::MeasurementSet& m) {
  std::vector<RealGrid> out;
  for (const auto& img : m.images) {
    RealGrid a = img;
    for (auto& v : a.vec()) v = std::sqrt(std::max(0.0, v));
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

ComplexGrid FpmState::object_field() const { return optics::inverse_spectrum(object_spectrum); }

FpmState fpm_reconstruct(const sim::MeasurementSet& measurements, const FpmConfig& config) {
  config.validate();
  measurements.system.validate();
  const std::size_t n_rows = measurements.images.at(0).rows(), n_cols = measurements.images.at(0).cols();
  const Geometry g = make_geometry(measurements, n_rows * config.upsample, n_cols * config.upsample);
  const std::vector<RealGrid> amps = amplitudes(measurements);
  const std::size_t count = amps.size();

  FpmState state;
  state.hr_pitch_um = measurements.pitch_um / static_cast<double>(config.upsample);
  const optics::Pupil ideal = optics::make_pupil(measurements.system, {n_rows, n_cols}, measurements.pitch_um);
  state.pupil = ideal.mask;
  state.offsets.assign(count, 0.0);

  // Initial object: mean brightfield amplitude, Fourier-upsampled.
  {
    RealGrid mean_amp(n_rows, n_cols);
    std::size_t used = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (measurements.patterns[i].kind != optics::PatternKind::Brightfield) continue;
      for (std::size_t k = 0; k < mean_amp.size(); ++k) mean_amp[k] += amps[i][k];
      ++used;
    }
    if (used == 0) throw ConfigError("fpm initialization needs at least one brightfield measurement");
    for (auto& v : mean_amp.vec()) v /= static_cast<double>(used);
    const ComplexGrid low = optics::spectrum(mean_amp);
    state.object_spectrum = ComplexGrid(g.N_rows, g.N_cols);
    const long off_r = static_cast<long>(g.N_rows / 2) - static_cast<long>(n_rows / 2);
    const long off_c = static_cast<long>(g.N_cols / 2) - static_cast<long>(n_cols / 2);
    for (std::size_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < n_cols; ++c) state.object_spectrum(r + off_r, c + off_c) = low(r, c) / g.scale;
  }

  // Center-out visiting order.
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return measurements.patterns[a].leds[0].norm() < measurements.patterns[b].leds[0].norm();
  });

  auto enforce_support = [&](ComplexGrid& P) {
    for (std::size_t k = 0; k < P.size(); ++k)
      if (ideal.mask[k] == cdouble(0.0)) P[k] = 0.0;
  };

  state.loss_history.push_back(objective(state, amps, g));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i : order) {
      const ComplexGrid window = crop(state.object_spectrum, g, i);
      const ComplexGrid field = low_res_field(window, state.pupil, g.scale);
      ComplexGrid diff(n_rows, n_cols);
      for (std::size_t k = 0; k < diff.size(); ++k) {
        const double target = std::max(0.0, amps[i][k] - state.offsets[i]);
        diff[k] = target * field[k] / (std::abs(field[k]) + kEps) - field[k];
      }
      const ComplexGrid delta = optics::spectrum(diff);

      double max_p = 0.0, max_o = 0.0;
      for (const auto& v : state.pupil.vec()) max_p = std::max(max_p, std::norm(v));
      for (const auto& v : window.vec()) max_o = std::max(max_o, std::norm(g.scale * v));
      if (max_p <= 0.0) throw NumericError("pupil collapsed to zero during fpm reconstruction");

      for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c) {
          const cdouble d = delta(r, c);
          state.object_spectrum(g.hr_row(i, r), g.hr_col(i, c)) +=
              config.object_step * std::conj(state.pupil(r, c)) * d / (g.scale * max_p);
        }
      if (config.enable_pupil_recovery && max_o > 0.0) {
        for (std::size_t k = 0; k < state.pupil.size(); ++k)
          state.pupil[k] += config.pupil_step * std::conj(g.scale * window[k]) * delta[k] / max_o;
        enforce_support(state.pupil);
      }
    }

    if (config.enable_offsets) {
      for (std::size_t i = 0; i < count; ++i) {
        if (measurements.patterns[i].kind != optics::PatternKind::Darkfield) continue;
        const ComplexGrid field = low_res_field(crop(state.object_spectrum, g, i), state.pupil, g.scale);
        double s = 0.0;
        for (std::size_t k = 0; k < field.size(); ++k) s += amps[i][k] - std::abs(field[k]);
        state.offsets[i] = std::max(0.0, s / static_cast<double>(field.size()));
      }
    }

    const double loss = objective(state, amps, g);
    if (!std::isfinite(loss)) throw NumericError("fpm objective diverged at epoch " + std::to_string(epoch + 1));
    state.loss_history.push_back(loss);
  }
  return state;
}

double fpm_objective(const FpmState& state, const sim::MeasurementSet& measurements) {
  const Geometry g = make_geometry(measurements, state.object_spectrum.rows(), state.object_spectrum.cols());
  if (state.offsets.size() != measurements.images.size())
    throw ShapeError("fpm state has " + std::to_string(state.offsets.size()) + " offsets for " +
                     std::to_string(measurements.images.size()) + " measurements");
  require_same_shape(state.pupil, measurements.images[0], "fpm_objective pupil");
  return objective(state, amplitudes(measurements), g);
}

RealGrid predicted_amplitude(const FpmState& state, const sim::MeasurementSet& measurements, const optics::Led& led) {
  sim::MeasurementSet single = measurements;
  single.images = {measurements.images.at(0)};
  single.patterns = {optics::IlluminationPattern{{led}, optics::PatternKind::Brightfield, "probe"}};
  const Geometry g = make_geometry(single, state.object_spectrum.rows(), state.object_spectrum.cols());
  const ComplexGrid f = low_res_field(crop(state.object_spectrum, g, 0), state.pupil, g.scale);
  RealGrid out(f.rows(), f.cols());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::abs(f[k]);
  return out;
}

double synthetic_na(const optics::OpticalSystem& system, const std::vector<optics::IlluminationPattern>& patterns) {
  double max_illum = 0.0;
  for (const auto& p : patterns)
    for (const auto& led : p.leds) max_illum = std::max(max_illum, led.norm() * system.wavelength_um);
  return system.objective_na + max_illum;
}

}  // namespace lcnf::fpm
