#include "doctest.h"

#include <numbers>

#include "common/error.hpp"
#include "optics/optics.hpp"
#include "oracles.hpp"
#include "preprocess/preprocess.hpp"
#include "sim/forward.hpp"

using namespace lcnf;

namespace {

// Min (erode) or max (dilate) over a k x k window with replicate borders.
RealGrid rank_filter(const RealGrid& x, std::size_t k, bool take_min) {
  const long h = static_cast<long>(k / 2), R = static_cast<long>(x.rows()), C = static_cast<long>(x.cols());
  RealGrid out(x.rows(), x.cols());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double v = take_min ? 1e300 : -1e300;
      for (long dr = -h; dr <= h; ++dr)
        for (long dc = -h; dc <= h; ++dc) {
          const double s = x(std::clamp(r + dr, 0L, R - 1), std::clamp(c + dc, 0L, C - 1));
          v = take_min ? std::min(v, s) : std::max(v, s);
        }
      out(r, c) = v;
    }
  return out;
}

}  // namespace

TEST_CASE("scale_kernel rounds to the nearest odd size of at least 3") {
  CHECK(prep::scale_kernel(31, 250, 32) == 3);
  CHECK(prep::scale_kernel(51, 250, 250) == 51);
  CHECK(prep::scale_kernel(31, 250, 500) == 63);
  CHECK(prep::scale_kernel(21, 1500, 10) == 3);
  for (std::size_t n = 10; n < 400; n += 7) CHECK(prep::scale_kernel(31, 250, n) % 2 == 1);
}

TEST_CASE("clip_dynamic_range clamps to nearest-rank quantiles") {
  RealGrid x(10, 10);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const RealGrid y = prep::clip_dynamic_range(x, 0.05);
  CHECK(min_value(y) == doctest::Approx(4.0).epsilon(0.26));
  CHECK(max_value(y) == doctest::Approx(95.0).epsilon(0.02));
  CHECK(y(5, 5) == x(5, 5));
  CHECK_THROWS_AS(prep::clip_dynamic_range(x, 0.6), ConfigError);
}

TEST_CASE("morphological opening matches erosion then dilation") {
  const RealGrid x = oracle::random_real(17, 23, 5);
  for (std::size_t k : {3, 5, 9}) {
    const RealGrid fast = prep::morphological_open(x, k);
    const RealGrid slow = rank_filter(rank_filter(x, k, true), k, false);
    CHECK(fast == slow);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(fast[i] <= x[i]);
    CHECK(prep::morphological_open(fast, k) == fast);
  }
  CHECK_THROWS_AS(prep::morphological_open(x, 4), ConfigError);
}

TEST_CASE("opening removes features narrower than the kernel") {
  RealGrid x(21, 21, 1.0);
  x(10, 10) = 5.0;
  const RealGrid y = prep::morphological_open(x, 3);
  CHECK(y(10, 10) == 1.0);
}

TEST_CASE("wrap_phase lands in (-pi, pi]") {
  RealGrid x(1, 5);
  x.vec() = {std::numbers::pi, -std::numbers::pi, 3 * std::numbers::pi, 0.5, -7.0};
  const RealGrid w = prep::wrap_phase(x);
  for (double v : w.vec()) {
    CHECK(v > -std::numbers::pi);
    CHECK(v <= std::numbers::pi);
  }
  CHECK(w[0] == doctest::Approx(std::numbers::pi));
  CHECK(w[1] == doctest::Approx(std::numbers::pi));
  CHECK(w[4] == doctest::Approx(-7.0 + 2 * std::numbers::pi));
}

TEST_CASE("unwrapping restores smooth phase up to a constant") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RealGrid truth = oracle::smooth_field(48, 40, seed, 4.0);
    const RealGrid u = prep::unwrap_phase(prep::wrap_phase(truth));
    const double offset = mean(truth) - mean(u);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(u[i] + offset - truth[i]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("normalize_phase_target clamps then scales") {
  RealGrid x(1, 4);
  x.vec() = {-1.0, 0.0, 6.0, 20.0};
  const RealGrid y = prep::normalize_phase_target(x, 12.0);
  CHECK(y.vec() == std::vector<double>{0.0, 0.0, 0.5, 1.0});
}

TEST_CASE("power-law PSD is one at DC and falls off radially") {
  const RealGrid p = prep::power_law_psd(32, 32, 2.0, 0.05);
  CHECK(p(16, 16) == doctest::Approx(1.0));
  for (std::size_t c = 17; c < 32; ++c) CHECK(p(16, c) < p(16, c - 1));
  CHECK(p(16, 20) == doctest::Approx(p(20, 16)));
  CHECK(p(16, 20) == doctest::Approx(1.0 / (1.0 + std::pow(4.0 / 32 / 0.05, 2))));
}

TEST_CASE("psd_match output lies in [0, 1] and follows the reference spectrum") {
  std::vector<RealGrid> imgs;
  for (std::uint64_t s = 0; s < 4; ++s) imgs.push_back(oracle::random_real(32, 32, s));
  const RealGrid ref = prep::power_law_psd(32, 32, 2.0, 0.05);
  const auto out = prep::psd_match(imgs, ref);
  REQUIRE(out.size() == 4);
  for (const auto& g : out) {
    CHECK(min_value(g) >= 0.0);
    CHECK(max_value(g) == doctest::Approx(1.0));
  }
  // White noise in, low-pass out: neighboring pixels become correlated.
  double corr = 0.0;
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c + 1 < 32; ++c) corr += (out[0](r, c) - 0.5) * (out[0](r, c + 1) - 0.5);
  CHECK(corr > 0.0);
}

TEST_CASE("mean_normalize divides by the mean") {
  const RealGrid x = oracle::random_real(8, 8, 2, 1.0, 3.0);
  CHECK(mean(prep::mean_normalize(x)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(prep::mean_normalize(RealGrid(4, 4, 0.0)), NumericError);
}

TEST_CASE("network inputs are six equally shaped channels") {
  sim::ObjectField obj;
  obj.pitch_um = 1.625 / 3.0;
  obj.phase = oracle::smooth_field(96, 96, 3, 1.0);
  obj.absorption = RealGrid(96, 96);
  const optics::OpticalSystem sys;
  const auto patterns = optics::semicircle_and_arc_patterns(sys, {});
  const auto pupil = optics::make_pupil(sys, {96, 96}, obj.pitch_um);
  sim::MeasurementSet m;
  m.system = sys;
  m.pitch_um = 1.625;
  m.patterns = patterns;
  for (const auto& p : patterns) m.images.push_back(sim::downsample_intensity(sim::simulate_multiplexed(obj, p, pupil), 3));
  prep::PreprocessConfig cfg;
  cfg.open_kernel_lr = 3;
  const auto stack = prep::prepare_network_inputs(m, cfg);
  for (const auto& ch : stack.channels) {
    CHECK(ch.rows() == 32);
    CHECK(ch.cols() == 32);
  }
  // Top-hat residuals are non-negative.
  for (std::size_t i = 0; i < 5; ++i) CHECK(min_value(stack.channels[i]) >= 0.0);

  auto swapped = m;
  std::swap(swapped.images[1], swapped.images[2]);
  std::swap(swapped.patterns[1], swapped.patterns[2]);
  CHECK_THROWS_AS(prep::prepare_network_inputs(swapped, cfg), ConfigError);
  auto short_set = m;
  short_set.images.pop_back();
  short_set.patterns.pop_back();
  CHECK_THROWS_AS(prep::prepare_network_inputs(short_set, cfg), ShapeError);
}
