#pragma once

#include <string>

#include "common/grid.hpp"

namespace lcnf::eval {

double mse(const RealGrid& pred, const RealGrid& ref);

/// 10 log10(range^2 / mse), range = max(ref) - min(ref) (1 for a constant
/// reference). Identical inputs give +infinity.
double psnr(const RealGrid& pred, const RealGrid& ref);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Gaussian-window SSIM averaged over all fully contained windows. The
/// dynamic range is that of `ref` (1 for a constant reference).
double ssim(const RealGrid& pred, const RealGrid& ref, const SsimOptions& options = {});

/// Normalized window weights used by `ssim`.
RealGrid ssim_window(const SsimOptions& options);

/// Fraction of centered-spectrum magnitudes above max / threshold_ratio.
double frequency_measure(const RealGrid& image, double threshold_ratio = 1000.0);

struct MetricReport {
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double fm = 0.0;
  std::string dataset;
  std::string method;
  std::string pred_id;
  std::string ref_id;
  std::string config_hash;
  std::string units = "normalized";
};

MetricReport evaluate(const RealGrid& pred, const RealGrid& ref);

/// Keys cubic convolution (a = -0.5), pixel-center aligned, replicate borders.
RealGrid bicubic_resize(const RealGrid& image, std::size_t out_rows, std::size_t out_cols);

}  // namespace lcnf::eval
