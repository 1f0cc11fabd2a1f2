#include "preprocess/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dpc/dpc.hpp"
#include "optics/fft.hpp"

namespace lcnf::prep {

void PreprocessConfig::validate() const {
  if (!(clip_fraction >= 0.0 && clip_fraction < 0.5)) throw ConfigError("clip_fraction must lie in [0, 0.5)");
  for (std::size_t k : {open_kernel_lr, open_kernel_hr, open_kernel_sim})
    if (k < 3 || k % 2 == 0) throw ConfigError("morphological kernels must be odd and >= 3, got " + std::to_string(k));
  if (!(phase_clip_max > 0.0)) throw ConfigError("phase_clip_max must be > 0");
  if (!(sim_value_threshold > 0.0)) throw ConfigError("sim_value_threshold must be > 0");
  if (!(sim_phase_scale > 0.0)) throw ConfigError("sim_phase_scale must be > 0");
  if (!(dpc_tau_absorption > 0.0) || !(dpc_tau_phase > 0.0)) throw ConfigError("DPC regularization must be > 0");
}

std::size_t scale_kernel(std::size_t kernel, std::size_t ref_extent, std::size_t new_extent) {
  const double scaled = static_cast<double>(kernel) * static_cast<double>(new_extent) / static_cast<double>(ref_extent);
  // nearest odd integer, at least 3
  auto k = static_cast<std::size_t>(std::max(1.0, 2.0 * std::round((scaled - 1.0) / 2.0) + 1.0));
  return std::max<std::size_t>(k, 3);
}

RealGrid clip_dynamic_range(const RealGrid& image, double fraction) {
  if (!(fraction >= 0.0 && fraction < 0.5)) throw ConfigError("clip fraction must lie in [0, 0.5)");
  if (fraction == 0.0 || image.empty()) return image;
  std::vector<double> sorted = image.vec();
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(sorted.size())));
  const double lo = sorted[k], hi = sorted[sorted.size() - 1 - k];
  RealGrid out = image;
  for (auto& v : out.vec()) v = std::clamp(v, lo, hi);
  return out;
}

namespace {

// Sliding min/max along one axis over the window [i-h, i+h] clipped to the grid.
template <class Pick>
RealGrid filter_axis(const RealGrid& in, std::size_t half, bool along_rows, Pick pick) {
  RealGrid out(in.rows(), in.cols());
  const std::size_t n_line = along_rows ? in.cols() : in.rows();
  const std::size_t len = along_rows ? in.rows() : in.cols();
  for (std::size_t line = 0; line < n_line; ++line)
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t a = i >= half ? i - half : 0, b = std::min(len - 1, i + half);
      double acc = along_rows ? in(a, line) : in(line, a);
      for (std::size_t j = a + 1; j <= b; ++j) acc = pick(acc, along_rows ? in(j, line) : in(line, j));
      (along_rows ? out(i, line) : out(line, i)) = acc;
    }
  return out;
}

RealGrid erode(const RealGrid& in, std::size_t half) {
  auto mn = [](double a, double b) { return std::min(a, b); };
  return filter_axis(filter_axis(in, half, false, mn), half, true, mn);
}

RealGrid dilate(const RealGrid& in, std::size_t half) {
  auto mx = [](double a, double b) { return std::max(a, b); };
  return filter_axis(filter_axis(in, half, false, mx), half, true, mx);
}

double wrap(double v) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(v, two_pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

}  // namespace

RealGrid morphological_open(const RealGrid& image, std::size_t kernel) {
  if (kernel < 3 || kernel % 2 == 0) throw ConfigError("opening kernel must be odd and >= 3, got " + std::to_string(kernel));
  if (kernel > image.rows() || kernel > image.cols())
    throw ConfigError("opening kernel " + std::to_string(kernel) + " exceeds image " + std::to_string(image.rows()) +
                      "x" + std::to_string(image.cols()));
  const std::size_t half = kernel / 2;
  return dilate(erode(image, half), half);
}

RealGrid wrap_phase(const RealGrid& phase) {
  RealGrid out = phase;
  for (auto& v : out.vec()) v = wrap(v);
  return out;
}

RealGrid unwrap_phase(const RealGrid& wrapped) {
  const std::size_t M = wrapped.rows(), N = wrapped.cols();
  if (M < 2 || N < 2) return wrapped;
  RealGrid dx(M, N), dy(M, N);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j + 1 < N; ++j) dx(i, j) = wrap(wrapped(i, j + 1) - wrapped(i, j));
  for (std::size_t i = 0; i + 1 < M; ++i)
    for (std::size_t j = 0; j < N; ++j) dy(i, j) = wrap(wrapped(i + 1, j) - wrapped(i, j));

  RealGrid rho(M, N);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double v = dx(i, j) + dy(i, j);
      if (j > 0) v -= dx(i, j - 1);
      if (i > 0) v -= dy(i - 1, j);
      rho(i, j) = v;
    }

  RealGrid coeff = optics::dct2(rho);
  for (std::size_t k = 0; k < M; ++k)
    for (std::size_t l = 0; l < N; ++l) {
      const double denom = 2.0 * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(M)) +
                           2.0 * std::cos(std::numbers::pi * static_cast<double>(l) / static_cast<double>(N)) - 4.0;
      coeff(k, l) = (k == 0 && l == 0) ? 0.0 : coeff(k, l) / denom;
    }
  RealGrid phi = optics::dct3(coeff);
  const double norm = 1.0 / (4.0 * static_cast<double>(M * N));
  for (auto& v : phi.vec()) v *= norm;
  return phi;
}

RealGrid normalize_phase_target(const RealGrid& phase, double clip_max) {
  if (!(clip_max > 0.0)) throw ConfigError("phase clip maximum must be > 0");
  RealGrid out = phase;
  for (auto& v : out.vec()) v = std::clamp(v, 0.0, clip_max) / clip_max;
  return out;
}

RealGrid ensemble_psd(const std::vector<RealGrid>& images) {
  if (images.empty()) throw ConfigError("ensemble PSD of an empty set");
  RealGrid psd(images.front().rows(), images.front().cols());
  for (const auto& img : images) {
    require_same_shape(img, psd, "ensemble_psd");
    const ComplexGrid s = optics::spectrum(img);
    for (std::size_t i = 0; i < psd.size(); ++i) psd[i] += std::norm(s[i]);
  }
  for (auto& v : psd.vec()) v /= static_cast<double>(images.size());
  return psd;
}

std::vector<RealGrid> psd_match(const std::vector<RealGrid>& images, const RealGrid& reference_psd) {
  const RealGrid source = ensemble_psd(images);
  require_same_shape(source, reference_psd, "psd_match");
  RealGrid gain(source.rows(), source.cols());
  for (std::size_t r = 0; r < source.rows(); ++r)
    for (std::size_t c = 0; c < source.cols(); ++c) {
      const double ref = reference_psd(r, c), src = source(r, c);
      if (ref < 0.0) throw ConfigError("reference PSD must be non-negative");
      if (src <= 0.0) {
        if (ref > 0.0) {
          std::ostringstream msg;
          msg << "source PSD is zero at frequency (" << static_cast<long>(r) - static_cast<long>(source.rows() / 2)
              << ", " << static_cast<long>(c) - static_cast<long>(source.cols() / 2)
              << ") where the reference is non-zero";
          throw ConfigError(msg.str());
        }
        continue;
      }
      gain(r, c) = std::sqrt(ref / src);
    }

  std::vector<RealGrid> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    ComplexGrid s = optics::spectrum(img);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= gain[i];
    RealGrid x = real_part(optics::inverse_spectrum(s));
    const double lo = std::min(0.0, min_value(x));
    for (auto& v : x.vec()) v -= lo;
    const double hi = max_value(x);
    if (hi > 0.0)
      for (auto& v : x.vec()) v = std::clamp(v / hi, 0.0, 1.0);
    out.push_back(std::move(x));
  }
  return out;
}

RealGrid power_law_psd(std::size_t rows, std::size_t cols, double exponent, double f0) {
  if (!(f0 > 0.0)) throw ConfigError("power-law corner frequency must be > 0");
  RealGrid psd(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double fy = (static_cast<double>(r) - static_cast<double>(rows / 2)) / static_cast<double>(rows);
      const double fx = (static_cast<double>(c) - static_cast<double>(cols / 2)) / static_cast<double>(cols);
      const double f2 = (fy * fy + fx * fx) / (f0 * f0);
      psd(r, c) = std::pow(1.0 + f2, -0.5 * exponent);
    }
  return psd;
}

RealGrid mean_normalize(const RealGrid& image) {
  const double m = mean(image);
  if (!(m > 0.0)) throw NumericError("cannot mean-normalize an image with non-positive mean");
  RealGrid out = image;
  for (auto& v : out.vec()) v /= m;
  return out;
}

InputStack prepare_network_inputs(const sim::MeasurementSet& measurements, const PreprocessConfig& config) {
  config.validate();
  measurements.validate();
  if (measurements.images.size() != 5)
    throw ShapeError("expected 5 multiplexed measurements (2 BF + 3 DF), got " +
                     std::to_string(measurements.images.size()));
  for (std::size_t i = 0; i < 5; ++i) {
    const auto expected = i < 2 ? optics::PatternKind::Brightfield : optics::PatternKind::Darkfield;
    if (measurements.patterns[i].kind != expected)
      throw ConfigError("measurement " + std::to_string(i) + " has the wrong illumination kind for its channel");
  }

  InputStack stack;
  std::array<RealGrid, 2> bf_centered;
  for (std::size_t i = 0; i < 5; ++i) {
    const RealGrid normalized = mean_normalize(clip_dynamic_range(measurements.images[i], config.clip_fraction));
    const RealGrid background = morphological_open(normalized, config.open_kernel_lr);
    RealGrid channel = normalized;
    for (std::size_t p = 0; p < channel.size(); ++p) channel[p] -= background[p];
    stack.channels[i] = std::move(channel);
    if (i < 2) {
      bf_centered[i] = normalized;
      for (auto& v : bf_centered[i].vec()) v -= 1.0;
    }
  }

  const auto& img = measurements.images.front();
  const optics::Pupil pupil = optics::make_pupil(measurements.system, {img.rows(), img.cols()}, measurements.pitch_um);
  const std::vector<dpc::TransferPair> transfers = {dpc::weak_object_transfer(measurements.patterns[0], pupil),
                                                    dpc::weak_object_transfer(measurements.patterns[1], pupil)};
  stack.channels[5] = dpc::dpc_invert({bf_centered[0], bf_centered[1]}, transfers, config.dpc_tau_absorption,
                                      config.dpc_tau_phase)
                          .phase;
  return stack;
}

}  // namespace lcnf::prep
