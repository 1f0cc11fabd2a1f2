#pragma once

#include <string>
#include <vector>

#include "common/grid.hpp"

namespace lcnf::io {

// Single planes use the portable float-map layout ("Pf", bottom row first).
// Multi-plane data (complex fields, channel stacks) use the same layout with
// magic "Pm" and a plane count after the dimensions; planes follow one after
// another. A negative scale field marks little-endian 32-bit floats.

void write_float_map(const std::string& path, const std::vector<RealGrid>& planes);
std::vector<RealGrid> read_float_map(const std::string& path);

void write_real(const std::string& path, const RealGrid& image);
RealGrid read_real(const std::string& path);

/// Two planes: real, imaginary.
void write_complex(const std::string& path, const ComplexGrid& field);
ComplexGrid read_complex(const std::string& path);

/// 8-bit grayscale PGM, min-max scaled.
void write_preview(const std::string& path, const RealGrid& image);

}  // namespace lcnf::io
