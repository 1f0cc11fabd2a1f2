#pragma once

#include <vector>

#include "common/grid.hpp"
#include "optics/optics.hpp"

namespace lcnf::dpc {

/// Weak-object transfer functions of one illumination pattern on a centered
/// frequency grid, normalized by the brightfield background.
struct TransferPair {
  ComplexGrid h_abs;
  ComplexGrid h_ph;
  double background = 1.0;
};

/// With G(u) = sum_i P(u_i) P*(u_i - u) and DC = sum_i |P(u_i)|^2:
///   h_abs = -(G(u) + G*(-u)) / DC,   h_ph = i (G*(-u) - G(u)) / DC.
/// The phase sign matches the simulator's O(u - u_i) illumination shift.
TransferPair weak_object_transfer(const optics::IlluminationPattern& pattern, const optics::Pupil& pupil);

struct DpcResult {
  RealGrid phase;
  RealGrid absorption;
};

/// Joint Tikhonov solve per frequency for absorption and phase from
/// background-subtracted normalized brightfield images (I / mean - 1).
DpcResult dpc_invert(const std::vector<RealGrid>& bf_images, const std::vector<TransferPair>& transfers,
                     double tau_absorption, double tau_phase);

/// Forward linear model: spectrum of the predicted normalized image for given
/// absorption/phase spectra (centered).
ComplexGrid weak_object_forward(const TransferPair& transfer, const ComplexGrid& absorption_spectrum,
                                const ComplexGrid& phase_spectrum);

}  // namespace lcnf::dpc
