#include "dpc/dpc.hpp"

#include "optics/fft.hpp"

namespace lcnf::dpc {

TransferPair weak_object_transfer(const optics::IlluminationPattern& pattern, const optics::Pupil& pupil) {
  if (pattern.leds.empty()) throw ConfigError("weak-object model requires brightfield source (empty pattern)");
  const ComplexGrid& P = pupil.mask;
  const long R = static_cast<long>(P.rows()), C = static_cast<long>(P.cols());
  const long cr = R / 2, cc = C / 2;
  const auto axes = optics::make_frequency_axes({P.rows(), P.cols()}, pupil.pitch_um);
  auto at = [&](long r, long c) -> cdouble {
    return (r < 0 || r >= R || c < 0 || c >= C) ? cdouble(0.0) : P(r, c);
  };

  ComplexGrid g(P.rows(), P.cols()), g_conj_neg(P.rows(), P.cols());
  double dc = 0.0;
  for (const auto& led : pattern.leds) {
    const auto s = optics::led_pixel_shift(led, axes);
    const cdouble p_led = at(cr + s.dy, cc + s.dx);
    dc += std::norm(p_led);
    if (p_led == cdouble(0.0)) continue;
    for (long r = 0; r < R; ++r)
      for (long c = 0; c < C; ++c) {
        const long dr = r - cr, dcol = c - cc;
        g(r, c) += p_led * std::conj(at(cr + s.dy - dr, cc + s.dx - dcol));        // G(u)
        g_conj_neg(r, c) += std::conj(p_led) * at(cr + s.dy + dr, cc + s.dx + dcol);  // G*(-u)
      }
  }
  if (dc <= 0.0) throw ConfigError("weak-object model requires brightfield source");

  TransferPair t;
  t.h_abs = ComplexGrid(P.rows(), P.cols());
  t.h_ph = ComplexGrid(P.rows(), P.cols());
  const cdouble i_unit(0.0, 1.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    t.h_abs[k] = -(g[k] + g_conj_neg[k]) / dc;
    t.h_ph[k] = i_unit * (g_conj_neg[k] - g[k]) / dc;
  }
  t.background = 1.0;
  return t;
}

DpcResult dpc_invert(const std::vector<RealGrid>& bf_images, const std::vector<TransferPair>& transfers,
                     double tau_absorption, double tau_phase) {
  if (!(tau_absorption > 0.0) || !(tau_phase > 0.0)) throw ConfigError("DPC regularization tau must be > 0");
  if (bf_images.size() != transfers.size())
    throw ShapeError("DPC needs one transfer pair per brightfield image");
  if (bf_images.size() < 2) throw ConfigError("DPC needs at least two brightfield images");
  for (std::size_t j = 0; j < bf_images.size(); ++j) {
    require_same_shape(bf_images[j], bf_images[0], "dpc_invert images");
    require_same_shape(transfers[j].h_abs, bf_images[0], "dpc_invert transfer");
  }

  std::vector<ComplexGrid> spectra;
  spectra.reserve(bf_images.size());
  for (const auto& img : bf_images) spectra.push_back(optics::spectrum(img));

  const std::size_t rows = bf_images[0].rows(), cols = bf_images[0].cols();
  ComplexGrid m_hat(rows, cols), psi_hat(rows, cols);
  for (std::size_t k = 0; k < rows * cols; ++k) {
    // [a11 a12; a21 a22] [M; Psi] = [b1; b2]
    double a11 = tau_absorption, a22 = tau_phase;
    cdouble a12 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t j = 0; j < spectra.size(); ++j) {
      const cdouble ha = transfers[j].h_abs[k], hp = transfers[j].h_ph[k], y = spectra[j][k];
      a11 += std::norm(ha);
      a22 += std::norm(hp);
      a12 += std::conj(ha) * hp;
      b1 += std::conj(ha) * y;
      b2 += std::conj(hp) * y;
    }
    const cdouble det = a11 * a22 - std::norm(a12);
    m_hat[k] = (a22 * b1 - a12 * b2) / det;
    psi_hat[k] = (a11 * b2 - std::conj(a12) * b1) / det;
  }
  return {real_part(optics::inverse_spectrum(psi_hat)), real_part(optics::inverse_spectrum(m_hat))};
}

ComplexGrid weak_object_forward(const TransferPair& transfer, const ComplexGrid& absorption_spectrum,
                                const ComplexGrid& phase_spectrum) {
  require_same_shape(transfer.h_abs, absorption_spectrum, "weak_object_forward");
  require_same_shape(transfer.h_ph, phase_spectrum, "weak_object_forward");
  ComplexGrid out(phase_spectrum.rows(), phase_spectrum.cols());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = transfer.h_abs[k] * absorption_spectrum[k] + transfer.h_ph[k] * phase_spectrum[k];
  return out;
}

}  // namespace lcnf::dpc
