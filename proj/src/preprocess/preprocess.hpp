#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "common/grid.hpp"
#include "sim/forward.hpp"

namespace lcnf::prep {

struct PreprocessConfig {
  double clip_fraction = 0.001;
  std::size_t open_kernel_lr = 31;   // measurement background, paper-scale 250 px inputs
  std::size_t open_kernel_hr = 51;   // high-resolution phase background
  std::size_t open_kernel_sim = 21;  // natural-image background
  double phase_clip_max = 12.0;
  double sim_value_threshold = 0.6;
  double sim_phase_scale = 9.0;
  double sim_phase_offset = -2.5;
  double dpc_tau_absorption = 1e-3;
  double dpc_tau_phase = 1e-3;

  void validate() const;
};

/// Odd kernel >= 3 nearest to `kernel * new_extent / ref_extent`.
std::size_t scale_kernel(std::size_t kernel, std::size_t ref_extent, std::size_t new_extent);

/// Clamps to the nearest-rank [fraction, 1 - fraction] quantiles.
RealGrid clip_dynamic_range(const RealGrid& image, double fraction);

/// Grayscale opening (erosion then dilation) with a kernel x kernel square
/// and replicate borders. Output never exceeds the input.
RealGrid morphological_open(const RealGrid& image, std::size_t kernel);

/// Unweighted least-squares unwrapping (Neumann Poisson solve via DCT).
RealGrid unwrap_phase(const RealGrid& wrapped);

/// Wraps into (-pi, pi].
RealGrid wrap_phase(const RealGrid& phase);

/// clamp(phase, 0, clip_max) / clip_max.
RealGrid normalize_phase_target(const RealGrid& phase, double clip_max);

/// Ensemble power spectral density |F(x)|^2 averaged over `images` (DC-centered).
RealGrid ensemble_psd(const std::vector<RealGrid>& images);

/// Reshapes each image's spectrum by sqrt(reference / source ensemble PSD),
/// then rescales into [0, 1] (divide by max; images with negative values are
/// first shifted so their minimum is 0).
std::vector<RealGrid> psd_match(const std::vector<RealGrid>& images, const RealGrid& reference_psd);

/// Isotropic power-law reference PSD 1/(1 + (f/f0)^2)^(exponent/2) on a
/// DC-centered grid; f in cycles/pixel.
RealGrid power_law_psd(std::size_t rows, std::size_t cols, double exponent, double f0);

inline constexpr std::size_t kInputChannels = 6;

/// Six-channel network input: BF1, BF2, DF1, DF2, DF3, DPC.
struct InputStack {
  std::array<RealGrid, kInputChannels> channels;
  std::size_t rows() const { return channels[0].rows(); }
  std::size_t cols() const { return channels[0].cols(); }
};

/// clip -> divide by mean -> subtract morphological-open background for the
/// five intensities; DPC channel from the two clipped, mean-normalized BF
/// images. `measurements` must hold 2 brightfield then 3 darkfield images.
InputStack prepare_network_inputs(const sim::MeasurementSet& measurements, const PreprocessConfig& config);

/// Step 1-2 of the above, exposed for testing.
RealGrid mean_normalize(const RealGrid& image);

}  // namespace lcnf::prep
