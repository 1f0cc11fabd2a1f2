#pragma once

#include <cstdint>

#include "sim/forward.hpp"

namespace lcnf::sim {

struct PhaseRange {
  double lo = -2.5;
  double hi = 6.5;
};

/// Procedural cell-like object: smooth elliptical blobs with small inclusions
/// plus band-limited texture. Phase spans exactly [range.lo, range.hi];
/// absorption stays <= 0.1. Bit-identical for equal seeds.
ObjectField generate_phantom(std::uint64_t seed, optics::Shape shape, PhaseRange range, double pitch_um = 1.0);

/// The same structure normalized to [0, 1], used as a natural-image stand-in.
RealGrid generate_texture_image(std::uint64_t seed, optics::Shape shape);

}  // namespace lcnf::sim
