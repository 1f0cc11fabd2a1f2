#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// tests. Everything here is written directly from definitions, without the
// library's FFT wrappers or window helpers.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "common/grid.hpp"

namespace oracle {

using lcnf::cdouble;
using lcnf::ComplexGrid;
using lcnf::RealGrid;

inline ComplexGrid random_complex(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexGrid g(rows, cols);
  for (auto& v : g.vec()) v = {n(rng), n(rng)};
  return g;
}

inline RealGrid random_real(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealGrid g(rows, cols);
  for (auto& v : g.vec()) v = u(rng);
  return g;
}

// Signed frequency index of centered bin k.
inline double centered(std::size_t k, std::size_t n) { return static_cast<double>(k) - static_cast<double>(n / 2); }

// X[k] = sum_x f[x] exp(-2 pi i (k - n/2) x / n), DC at n/2.
inline ComplexGrid centered_dft(const ComplexGrid& f) {
  const std::size_t R = f.rows(), C = f.cols();
  ComplexGrid out(R, C);
  for (std::size_t kr = 0; kr < R; ++kr)
    for (std::size_t kc = 0; kc < C; ++kc) {
      cdouble s = 0.0;
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          const double ph = -2.0 * std::numbers::pi *
                            (centered(kr, R) * static_cast<double>(r) / R + centered(kc, C) * static_cast<double>(c) / C);
          s += f(r, c) * std::polar(1.0, ph);
        }
      out(kr, kc) = s;
    }
  return out;
}

inline ComplexGrid centered_idft(const ComplexGrid& F) {
  const std::size_t R = F.rows(), C = F.cols();
  ComplexGrid out(R, C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      cdouble s = 0.0;
      for (std::size_t kr = 0; kr < R; ++kr)
        for (std::size_t kc = 0; kc < C; ++kc) {
          const double ph = 2.0 * std::numbers::pi *
                            (centered(kr, R) * static_cast<double>(r) / R + centered(kc, C) * static_cast<double>(c) / C);
          s += F(kr, kc) * std::polar(1.0, ph);
        }
      out(r, c) = s / static_cast<double>(R * C);
    }
  return out;
}

// Tilted plane-wave illumination: the object is multiplied by
// exp(2 pi i (sy r / R + sx c / C)), filtered by the pupil, and detected.
inline RealGrid tilted_intensity(const ComplexGrid& object, long sy, long sx, const ComplexGrid& pupil) {
  const std::size_t R = object.rows(), C = object.cols();
  ComplexGrid tilted(R, C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      tilted(r, c) = object(r, c) * std::polar(1.0, 2.0 * std::numbers::pi *
                                                        (static_cast<double>(sy) * r / R + static_cast<double>(sx) * c / C));
  ComplexGrid spec = centered_dft(tilted);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= pupil[i];
  const ComplexGrid field = centered_idft(spec);
  RealGrid out(R, C);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(field[i]);
  return out;
}

inline double max_abs_diff(const RealGrid& a, const RealGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const RealGrid& a) {
  double m = 0.0;
  for (double v : a.vec()) m = std::max(m, std::abs(v));
  return m;
}

// SSIM from the textbook formula: for every fully contained window, weighted
// local means, variances and covariance, then the mean of the SSIM map.
inline double ssim(const RealGrid& x, const RealGrid& y, std::size_t win = 11, double sigma = 1.5) {
  double lo = y[0], hi = y[0];
  for (double v : y.vec()) lo = std::min(lo, v), hi = std::max(hi, v);
  const double L = hi > lo ? hi - lo : 1.0;
  const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  std::vector<double> w(win * win);
  double wsum = 0.0;
  const double mid = (static_cast<double>(win) - 1.0) / 2.0;
  for (std::size_t i = 0; i < win; ++i)
    for (std::size_t j = 0; j < win; ++j) {
      const double d2 = (i - mid) * (i - mid) + (j - mid) * (j - mid);
      wsum += w[i * win + j] = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  for (auto& v : w) v /= wsum;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + win <= x.rows(); ++r)
    for (std::size_t c = 0; c + win <= x.cols(); ++c) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < win; ++i)
        for (std::size_t j = 0; j < win; ++j) {
          mx += w[i * win + j] * x(r + i, c + j);
          my += w[i * win + j] * y(r + i, c + j);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (std::size_t i = 0; i < win; ++i)
        for (std::size_t j = 0; j < win; ++j) {
          const double dx = x(r + i, c + j) - mx, dy = y(r + i, c + j) - my;
          vx += w[i * win + j] * dx * dx;
          vy += w[i * win + j] * dy * dy;
          cxy += w[i * win + j] * dx * dy;
        }
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

// Smooth random field: a few low-frequency cosines.
inline RealGrid smooth_field(std::size_t rows, std::size_t cols, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealGrid g(rows, cols);
  for (int t = 0; t < 4; ++t) {
    const double fy = u(rng) * 2.0, fx = u(rng) * 2.0, ph = u(rng) * 2.0 * std::numbers::pi;
    const double a = amplitude * (0.5 + u(rng));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        g(r, c) += a * std::cos(2.0 * std::numbers::pi * (fy * r / rows + fx * c / cols) + ph);
  }
  return g;
}

}  // namespace oracle
