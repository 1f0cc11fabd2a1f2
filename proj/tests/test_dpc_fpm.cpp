#include "doctest.h"

#include "common/error.hpp"
#include "dpc/dpc.hpp"
#include "fpm/fpm.hpp"
#include "optics/fft.hpp"
#include "optics/optics.hpp"
#include "oracles.hpp"
#include "sim/forward.hpp"

using namespace lcnf;

namespace {

struct DpcSetup {
  optics::OpticalSystem sys;
  optics::Pupil pupil;
  std::vector<optics::IlluminationPattern> patterns;
  std::vector<dpc::TransferPair> transfers;

  explicit DpcSetup(std::size_t n, double lattice_spacing_na = 0.41 / 8.0, double pitch = 1.625) {
    pupil = optics::make_pupil(sys, {n, n}, pitch);
    optics::MultiplexConfig mc;
    mc.lattice_spacing_na = lattice_spacing_na;
    patterns = optics::semicircle_and_arc_patterns(sys, mc);
    transfers = {dpc::weak_object_transfer(patterns[0], pupil), dpc::weak_object_transfer(patterns[1], pupil)};
  }
};

// h(-u) == conj(h(u)) away from the unpaired first row and column.
bool hermitian(const ComplexGrid& h) {
  const std::size_t n = h.rows();
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t c = 1; c < n; ++c)
      if (std::abs(h(r, c) - std::conj(h(n - r, n - c))) > 1e-12) return false;
  return true;
}

// Truth restricted to the 2 NA brightfield band.
RealGrid band_limit(const RealGrid& x, const optics::OpticalSystem& sys, double pitch) {
  ComplexGrid s = optics::spectrum(x);
  const auto ax = optics::make_frequency_axes({x.rows(), x.cols()}, pitch);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (std::hypot(ax.uy[r], ax.ux[c]) > 2.0 * sys.cutoff_freq()) s(r, c) = 0.0;
  return real_part(optics::inverse_spectrum(s));
}

}  // namespace

TEST_CASE("weak-object transfer functions are Hermitian with unit background") {
  DpcSetup s(32);
  for (const auto& t : s.transfers) {
    CHECK(hermitian(t.h_abs));
    CHECK(hermitian(t.h_ph));
    // Absorption transfer at DC is -2; phase transfer vanishes there.
    CHECK(t.h_abs(16, 16).real() == doctest::Approx(-2.0));
    CHECK(std::abs(t.h_ph(16, 16)) < 1e-12);
  }
  // Complementary halves give opposite phase transfer.
  double worst = 0.0;
  for (std::size_t k = 0; k < s.transfers[0].h_ph.size(); ++k)
    worst = std::max(worst, std::abs(s.transfers[0].h_ph[k] + s.transfers[1].h_ph[k]));
  CHECK(worst < 0.5);
}

TEST_CASE("DPC inverts its own linear forward model") {
  // Nine brightfield LEDs leave a null band where both phase transfers
  // vanish; the truth is projected onto the recoverable frequencies.
  DpcSetup s(32);
  ComplexGrid psi = optics::spectrum(oracle::random_real(32, 32, 4, -0.05, 0.05));
  for (std::size_t k = 0; k < psi.size(); ++k)
    if (std::abs(s.transfers[0].h_ph[k]) < 0.1 || (k / 32 == 0 || k % 32 == 0)) psi[k] = 0.0;
  const RealGrid phase = real_part(optics::inverse_spectrum(psi));
  const ComplexGrid zero(32, 32);
  std::vector<RealGrid> images;
  for (const auto& t : s.transfers)
    images.push_back(real_part(optics::inverse_spectrum(dpc::weak_object_forward(t, zero, psi))));
  const auto out = dpc::dpc_invert(images, s.transfers, 1e-6, 1e-6);
  CHECK(pearson(out.phase, phase) > 0.9999);
}

TEST_CASE("DPC recovers a weak simulated phase object") {
  DpcSetup s(64, 0.01, 0.8);
  sim::ObjectField obj;
  obj.pitch_um = 0.8;
  obj.phase = band_limit(oracle::random_real(64, 64, 8, 0.0, 0.3), s.sys, obj.pitch_um);
  obj.absorption = RealGrid(64, 64);
  std::vector<RealGrid> bf;
  for (int i = 0; i < 2; ++i) {
    RealGrid img = sim::simulate_multiplexed(obj, s.patterns[i], s.pupil);
    const double m = mean(img);
    for (auto& v : img.vec()) v = v / m - 1.0;
    bf.push_back(std::move(img));
  }
  const auto out = dpc::dpc_invert(bf, s.transfers, 1e-3, 1e-3);
  CHECK(pearson(out.phase, band_limit(obj.phase, s.sys, obj.pitch_um)) > 0.95);
}

TEST_CASE("DPC argument errors") {
  DpcSetup s(16);
  const RealGrid img(16, 16);
  CHECK_THROWS_AS(dpc::dpc_invert({img, img}, s.transfers, 0.0, 1e-3), ConfigError);
  CHECK_THROWS_AS(dpc::dpc_invert({img}, {s.transfers[0]}, 1e-3, 1e-3), ConfigError);
  CHECK_THROWS_AS(dpc::dpc_invert({img, img, img}, s.transfers, 1e-3, 1e-3), ShapeError);
  CHECK_THROWS_AS(dpc::dpc_invert({RealGrid(8, 8), RealGrid(8, 8)}, s.transfers, 1e-3, 1e-3), ShapeError);
  CHECK_THROWS_AS(dpc::weak_object_transfer(optics::IlluminationPattern{}, s.pupil), ConfigError);
  optics::IlluminationPattern dark;
  dark.leds = {{0.0, 0.3 / s.sys.wavelength_um}};
  dark.kind = optics::PatternKind::Darkfield;
  CHECK_THROWS_AS(dpc::weak_object_transfer(dark, s.pupil), ConfigError);
}

namespace {

// 32x32 object, 9 LEDs up to 0.1 NA, measured on a 16x16 grid.
sim::MeasurementSet small_fpm_problem(const sim::ObjectField& obj) {
  sim::MeasurementSet m;
  m.system = optics::OpticalSystem{};
  m.pitch_um = 2.0 * obj.pitch_um;
  m.patterns = optics::sequential_grid_pattern(m.system, 9, 0.1);
  const auto pupil = optics::make_pupil(m.system, {32, 32}, obj.pitch_um);
  for (const auto& p : m.patterns) m.images.push_back(sim::decimate(sim::simulate_single_led(obj, p.leds[0], pupil), 2));
  return m;
}

sim::ObjectField small_object() {
  sim::ObjectField obj;
  obj.phase = oracle::smooth_field(32, 32, 12, 0.3);
  obj.absorption = RealGrid(32, 32, 0.05);
  obj.pitch_um = 0.8125;
  return obj;
}

}  // namespace

TEST_CASE("synthetic NA adds the largest illumination NA") {
  const optics::OpticalSystem sys;
  const auto pats = optics::sequential_grid_pattern(sys, 25, 0.2);
  double widest = 0.0;
  for (const auto& p : pats) widest = std::max(widest, p.leds[0].norm() * sys.wavelength_um);
  CHECK(widest <= 0.2 + 1e-12);
  CHECK(fpm::synthetic_na(sys, pats) == doctest::Approx(0.1 + widest).epsilon(1e-12));
}

TEST_CASE("FPM objective vanishes at the true object") {
  const auto obj = small_object();
  const auto m = small_fpm_problem(obj);
  fpm::FpmState truth;
  truth.object_spectrum = optics::spectrum(obj.transmittance());
  truth.pupil = optics::make_pupil(m.system, {16, 16}, m.pitch_um).mask;
  truth.offsets.assign(m.images.size(), 0.0);
  truth.hr_pitch_um = obj.pitch_um;
  CHECK(fpm::fpm_objective(truth, m) < 1e-20);
  const RealGrid a = fpm::predicted_amplitude(truth, m, m.patterns[3].leds[0]);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] * a[k] == doctest::Approx(m.images[3][k]).epsilon(1e-9));
}

TEST_CASE("FPM reconstruction lowers the objective") {
  const auto m = small_fpm_problem(small_object());
  fpm::FpmConfig cfg;
  cfg.epochs = 10;
  const auto st = fpm::fpm_reconstruct(m, cfg);
  REQUIRE(st.loss_history.size() == 11);
  CHECK(st.loss_history.back() < 0.1 * st.loss_history.front());
  CHECK(st.object_field().rows() == 32);
  CHECK(fpm::fpm_objective(st, m) == doctest::Approx(st.loss_history.back()).epsilon(1e-9));
}

TEST_CASE("FPM configuration is validated") {
  fpm::FpmConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.object_step = 2.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.upsample = 1;
  // The 0.1 NA scan needs a finer grid than the measurement grid.
  auto m = small_fpm_problem(small_object());
  m.patterns = optics::sequential_grid_pattern(m.system, 9, 0.41);
  CHECK_THROWS_AS(fpm::fpm_reconstruct(m, cfg), ConfigError);
}
