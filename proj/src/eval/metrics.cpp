#include "eval/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "optics/fft.hpp"

namespace lcnf::eval {
namespace {

double dynamic_range(const RealGrid& ref) {
  const double r = max_value(ref) - min_value(ref);
  return r > 0.0 ? r : 1.0;
}

// Valid-mode separable correlation with a 1-D kernel.
RealGrid filter_valid(const RealGrid& in, const std::vector<double>& k) {
  const std::size_t n = k.size(), rows = in.rows() - n + 1, cols = in.cols() - n + 1;
  RealGrid tmp(in.rows(), cols), out(rows, cols);
  for (std::size_t r = 0; r < in.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * in(r, c + i);
      tmp(r, c) = s;
    }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * tmp(r + i, c);
      out(r, c) = s;
    }
  return out;
}

std::vector<double> gaussian_1d(const SsimOptions& o) {
  std::vector<double> k(o.window);
  const double mid = (static_cast<double>(o.window) - 1.0) / 2.0;
  double s = 0.0;
  for (std::size_t i = 0; i < o.window; ++i) {
    const double d = static_cast<double>(i) - mid;
    s += k[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
  }
  for (auto& v : k) v /= s;
  return k;
}

double cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace

double mse(const RealGrid& pred, const RealGrid& ref) {
  require_same_shape(pred, ref, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - ref[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double psnr(const RealGrid& pred, const RealGrid& ref) {
  const double m = mse(pred, ref);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  const double range = dynamic_range(ref);
  return 10.0 * std::log10(range * range / m);
}

RealGrid ssim_window(const SsimOptions& options) {
  const auto k = gaussian_1d(options);
  RealGrid w(options.window, options.window);
  for (std::size_t r = 0; r < options.window; ++r)
    for (std::size_t c = 0; c < options.window; ++c) w(r, c) = k[r] * k[c];
  return w;
}

double ssim(const RealGrid& pred, const RealGrid& ref, const SsimOptions& o) {
  require_same_shape(pred, ref, "ssim");
  if (o.window < 1 || o.window % 2 == 0) throw ConfigError("ssim window must be odd");
  if (pred.rows() < o.window || pred.cols() < o.window)
    throw ShapeError("ssim needs images of at least " + std::to_string(o.window) + "x" + std::to_string(o.window));
  const auto k = gaussian_1d(o);
  const double L = dynamic_range(ref);
  const double c1 = (o.k1 * L) * (o.k1 * L), c2 = (o.k2 * L) * (o.k2 * L);
  RealGrid xx(pred.rows(), pred.cols()), yy = xx, xy = xx;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    xx[i] = pred[i] * pred[i];
    yy[i] = ref[i] * ref[i];
    xy[i] = pred[i] * ref[i];
  }
  const RealGrid mx = filter_valid(pred, k), my = filter_valid(ref, k);
  const RealGrid sxx = filter_valid(xx, k), syy = filter_valid(yy, k), sxy = filter_valid(xy, k);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double frequency_measure(const RealGrid& image, double threshold_ratio) {
  if (!(threshold_ratio > 0.0)) throw ConfigError("fm threshold ratio must be > 0");
  const ComplexGrid spec = optics::spectrum(image);
  double peak = 0.0;
  for (const auto& v : spec.vec()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  const double thr = peak / threshold_ratio;
  std::size_t count = 0;
  for (const auto& v : spec.vec()) count += std::abs(v) > thr;
  return static_cast<double>(count) / static_cast<double>(spec.size());
}

MetricReport evaluate(const RealGrid& pred, const RealGrid& ref) {
  MetricReport r;
  r.mse = mse(pred, ref);
  r.psnr_db = psnr(pred, ref);
  r.ssim = ssim(pred, ref);
  r.fm = frequency_measure(pred);
  return r;
}

RealGrid bicubic_resize(const RealGrid& image, std::size_t out_rows, std::size_t out_cols) {
  if (image.size() == 0 || out_rows == 0 || out_cols == 0) throw ShapeError("bicubic_resize on an empty grid");
  const long R = static_cast<long>(image.rows()), C = static_cast<long>(image.cols());
  const double sy = static_cast<double>(image.rows()) / static_cast<double>(out_rows);
  const double sx = static_cast<double>(image.cols()) / static_cast<double>(out_cols);
  // Precompute taps per output column / row.
  struct Taps {
    std::array<long, 4> idx;
    std::array<double, 4> w;
  };
  auto taps = [](std::size_t n, double s, long limit) {
    std::vector<Taps> t(n);
    for (std::size_t o = 0; o < n; ++o) {
      const double src = (static_cast<double>(o) + 0.5) * s - 0.5;
      const long base = static_cast<long>(std::floor(src));
      for (int k = 0; k < 4; ++k) {
        const long i = base - 1 + k;
        t[o].idx[k] = std::clamp<long>(i, 0, limit - 1);
        t[o].w[k] = cubic(src - static_cast<double>(i));
      }
    }
    return t;
  };
  const auto ty = taps(out_rows, sy, R), tx = taps(out_cols, sx, C);
  RealGrid tmp(image.rows(), out_cols), out(out_rows, out_cols);
  for (long r = 0; r < R; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += tx[c].w[k] * image(r, tx[c].idx[k]);
      tmp(r, c) = s;
    }
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += ty[r].w[k] * tmp(ty[r].idx[k], c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace lcnf::eval
