#include "doctest.h"

#include <set>

#include "common/error.hpp"
#include "optics/fft.hpp"
#include "optics/optics.hpp"
#include "oracles.hpp"
#include "sim/dataset.hpp"
#include "sim/forward.hpp"
#include "sim/phantom.hpp"

using namespace lcnf;

namespace {

double rel_error(const ComplexGrid& a, const ComplexGrid& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

// 8x8 grid at the camera pitch: the pupil spans a radius of two frequency pixels.
constexpr double kPitch = 1.625;

}  // namespace

TEST_CASE("centered spectrum matches the direct DFT") {
  for (auto [r, c] : {std::pair{8, 8}, std::pair{6, 10}, std::pair{5, 7}}) {
    const auto f = oracle::random_complex(r, c, 11 + r);
    CHECK(rel_error(optics::spectrum(f), oracle::centered_dft(f)) < 1e-12);
    CHECK(rel_error(optics::inverse_spectrum(optics::spectrum(f)), f) < 1e-12);
  }
}

TEST_CASE("fftshift and ifftshift are inverse on odd sizes") {
  const auto f = oracle::random_complex(5, 7, 3);
  CHECK(optics::ifftshift(optics::fftshift(f)) == f);
}

TEST_CASE("dct3 of dct2 scales by 4 rows cols") {
  const auto x = oracle::random_real(6, 9, 4);
  const RealGrid y = optics::dct3(optics::dct2(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(4.0 * 54 * x[i]).epsilon(1e-12));
}

TEST_CASE("frequency axes put DC at n/2") {
  const auto ax = optics::make_frequency_axes({8, 10}, 0.5);
  CHECK(ax.uy[4] == 0.0);
  CHECK(ax.ux[5] == 0.0);
  CHECK(ax.dy == doctest::Approx(1.0 / 4.0));
  CHECK(ax.dx == doctest::Approx(1.0 / 5.0));
  CHECK(ax.uy[0] == doctest::Approx(-4 * ax.dy));
}

TEST_CASE("pupil is a centrosymmetric disk and rejects coarse grids") {
  const optics::OpticalSystem sys;
  const auto p = optics::make_pupil(sys, {64, 64}, 0.5);
  const auto ax = optics::make_frequency_axes({64, 64}, 0.5);
  std::size_t inside = 0;
  for (std::size_t r = 1; r < 64; ++r)
    for (std::size_t c = 1; c < 64; ++c) {
      CHECK(p.mask(r, c) == p.mask(64 - r, 64 - c));
      const double u = std::hypot(ax.uy[r], ax.ux[c]);
      if (std::abs(u - sys.cutoff_freq()) > 1e-9) CHECK((p.mask(r, c) == cdouble(1.0)) == (u < sys.cutoff_freq()));
      inside += p.mask(r, c) != cdouble(0.0);
    }
  CHECK(inside > 0);
  CHECK_THROWS_AS(optics::make_pupil(sys, {8, 8}, 4.0), ConfigError);
}

TEST_CASE("LED lattice is ordered center-out inside the NA disk") {
  const optics::OpticalSystem sys;
  const auto leds = optics::led_lattice(sys, 0.41 / 8.0, 0.41);
  CHECK(leds.size() == 197);
  CHECK(leds.front().norm() == 0.0);
  for (std::size_t i = 1; i < leds.size(); ++i) {
    CHECK(leds[i].norm() >= leds[i - 1].norm() - 1e-15);
    CHECK(leds[i].norm() * sys.wavelength_um <= 0.41 + 1e-12);
  }
}

TEST_CASE("multiplexed patterns split brightfield into complementary halves") {
  const optics::OpticalSystem sys;
  const optics::MultiplexConfig mc;
  const auto pats = optics::semicircle_and_arc_patterns(sys, mc);
  REQUIRE(pats.size() == 5);
  CHECK(pats[0].kind == optics::PatternKind::Brightfield);
  CHECK(pats[1].kind == optics::PatternKind::Brightfield);
  for (int i = 2; i < 5; ++i) CHECK(pats[i].kind == optics::PatternKind::Darkfield);

  const auto lattice = optics::led_lattice(sys, mc.lattice_spacing_na, mc.max_illum_na);
  std::set<std::pair<double, double>> bf, df;
  for (int i = 0; i < 2; ++i)
    for (const auto& l : pats[i].leds) CHECK(bf.insert({l.uy, l.ux}).second);
  for (int i = 2; i < 5; ++i)
    for (const auto& l : pats[i].leds) CHECK(df.insert({l.uy, l.ux}).second);
  std::size_t bf_expected = 0;
  for (const auto& l : lattice) bf_expected += l.norm() <= sys.cutoff_freq() + 1e-12;
  CHECK(bf.size() == bf_expected);
  CHECK(bf.size() + df.size() == lattice.size());
}

TEST_CASE("classify rejects mixed brightfield and darkfield LEDs") {
  const optics::OpticalSystem sys;
  const std::vector<optics::Led> mixed{{0.0, 0.0}, {0.0, 0.5}};
  CHECK_THROWS_AS(optics::classify(mixed, sys), ConfigError);
  CHECK(optics::classify({{0.0, 0.5}}, sys) == optics::PatternKind::Darkfield);
}

TEST_CASE("sequential scan has the requested single-LED patterns") {
  const optics::OpticalSystem sys;
  const auto pats = optics::sequential_grid_pattern(sys, 185);
  REQUIRE(pats.size() == 185);
  for (const auto& p : pats) CHECK(p.leds.size() == 1);
  CHECK(pats.front().leds[0].norm() == 0.0);
  // More LEDs than the board lattice holds switch to a finer lattice.
  const auto dense = optics::sequential_grid_pattern(sys, 1000);
  CHECK(dense.size() == 1000);
  for (const auto& p : dense) CHECK(p.leds[0].norm() * sys.wavelength_um <= 0.41 + 1e-12);
  CHECK_THROWS_AS(optics::sequential_grid_pattern(sys, 0), ConfigError);
}

TEST_CASE("single-LED image matches the tilted-illumination direct-DFT oracle") {
  const optics::OpticalSystem sys;
  const auto pupil = optics::make_pupil(sys, {8, 8}, kPitch);
  const auto ax = optics::make_frequency_axes({8, 8}, kPitch);
  const auto obj = oracle::random_complex(8, 8, 21);
  for (auto [sy, sx] : {std::pair{0L, 0L}, std::pair{1L, 0L}, std::pair{-1L, 1L}}) {
    const optics::Led led{sy * ax.dy, sx * ax.dx};
    const RealGrid fast = sim::simulate_single_led(obj, kPitch, led, pupil);
    const RealGrid slow = oracle::tilted_intensity(obj, sy, sx, pupil.mask);
    CHECK(oracle::max_abs_diff(fast, slow) / oracle::max_abs(slow) < 1e-10);
  }
}

TEST_CASE("multiplexed image is the sum of single-LED images") {
  const optics::OpticalSystem sys;
  const auto pupil = optics::make_pupil(sys, {8, 8}, kPitch);
  const auto ax = optics::make_frequency_axes({8, 8}, kPitch);
  const auto obj = oracle::random_complex(8, 8, 5);
  optics::IlluminationPattern pat;
  pat.leds = {{0.0, 0.0}, {ax.dy, 0.0}, {0.0, -ax.dx}};
  RealGrid sum(8, 8);
  for (const auto& l : pat.leds) {
    const RealGrid s = sim::simulate_single_led(obj, kPitch, l, pupil);
    for (std::size_t i = 0; i < s.size(); ++i) sum[i] += s[i];
  }
  CHECK(oracle::max_abs_diff(sim::simulate_multiplexed(obj, kPitch, pat, pupil), sum) <= 1e-12 * oracle::max_abs(sum));
  CHECK_THROWS_AS(sim::simulate_multiplexed(obj, kPitch, optics::IlluminationPattern{}, pupil), ConfigError);
}

TEST_CASE("LED beyond the grid is a config error") {
  const optics::OpticalSystem sys;
  const auto pupil = optics::make_pupil(sys, {8, 8}, kPitch);
  CHECK_THROWS_AS(sim::simulate_single_led(oracle::random_complex(8, 8, 1), kPitch, {0.0, 0.3}, pupil), ConfigError);
}

TEST_CASE("downsample averages blocks and decimate keeps the first sample") {
  RealGrid hr(4, 6);
  for (std::size_t i = 0; i < hr.size(); ++i) hr[i] = static_cast<double>(i);
  const RealGrid d = sim::downsample_intensity(hr, 2);
  REQUIRE(d.rows() == 2);
  REQUIRE(d.cols() == 3);
  CHECK(d(0, 0) == doctest::Approx((0 + 1 + 6 + 7) / 4.0));
  CHECK(d(1, 2) == doctest::Approx((16 + 17 + 22 + 23) / 4.0));
  const RealGrid k = sim::decimate(hr, 2);
  CHECK(k(1, 1) == hr(2, 2));
  CHECK_THROWS(sim::downsample_intensity(hr, 4));
}

TEST_CASE("shot noise is seeded and unbiased") {
  const RealGrid flat(64, 64, 1.0);
  const RealGrid a = sim::add_shot_noise(flat, 1000.0, 3), b = sim::add_shot_noise(flat, 1000.0, 3);
  CHECK(a == b);
  CHECK(mean(a) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(a != sim::add_shot_noise(flat, 1000.0, 4));
}

TEST_CASE("phantom spans its phase range and is reproducible") {
  const auto a = sim::generate_phantom(9, {48, 40}, {-2.5, 6.5}, 0.5);
  const auto b = sim::generate_phantom(9, {48, 40}, {-2.5, 6.5}, 0.5);
  CHECK(a.phase == b.phase);
  CHECK(a.absorption == b.absorption);
  CHECK(min_value(a.phase) == doctest::Approx(-2.5));
  CHECK(max_value(a.phase) == doctest::Approx(6.5));
  CHECK(max_value(a.absorption) <= 0.1);
  CHECK(min_value(a.absorption) >= 0.0);
  CHECK(sim::generate_phantom(10, {48, 40}, {-2.5, 6.5}).phase != a.phase);
}

TEST_CASE("dataset pairs have LR inputs, HR targets, and do not depend on jobs") {
  auto cfg = sim::DatasetConfig::desk();
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto objs = sim::phantom_objects(seeds, cfg);
  REQUIRE(objs.size() == 3);
  CHECK(objs[0].phase.rows() == 96);
  const auto one = sim::build_dataset(objs, cfg, 1);
  const auto two = sim::build_dataset(objs, cfg, 2);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].inputs.rows() == 32);
    CHECK(one[i].target.rows() == 96);
    CHECK(min_value(one[i].target) >= 0.0);
    CHECK(max_value(one[i].target) <= 1.0);
    for (std::size_t c = 0; c < prep::kInputChannels; ++c) CHECK(one[i].inputs.channels[c] == two[i].inputs.channels[c]);
    CHECK(one[i].target == two[i].target);
  }
}
