#include "model/coords.hpp"

#include <algorithm>
#include <cmath>

namespace lcnf::model {

double latent_center(std::size_t index, std::size_t extent) {
  return -static_cast<double>(extent) + 1.0 + 2.0 * static_cast<double>(index);
}

double pixel_center(std::size_t index, std::size_t count, std::size_t extent) {
  const double e = static_cast<double>(extent);
  return -e + (static_cast<double>(index) + 0.5) * (2.0 * e / static_cast<double>(count));
}

std::size_t nearest_index(double c, std::size_t extent) {
  const double k = std::ceil((c + static_cast<double>(extent) - 1.0) / 2.0 - 0.5);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(extent - 1)));
}

LatentSelection select_latent(double y, double x, std::size_t rows, std::size_t cols) {
  LatentSelection s;
  s.row = nearest_index(y, rows);
  s.col = nearest_index(x, cols);
  s.dy = y - latent_center(s.row, rows);
  s.dx = x - latent_center(s.col, cols);
  return s;
}

namespace {

struct Bracket {
  long lo;                 // padded index, may be -1 or extent - 1
  double d_lo, d_hi;       // c - v_lo, c - v_hi
};

Bracket bracket(double c, std::size_t extent) {
  const double e = static_cast<double>(extent);
  const double k = std::clamp(std::floor((c + e - 1.0) / 2.0), -1.0, e - 1.0);
  const double v = -e + 1.0 + 2.0 * k;
  return {static_cast<long>(k), c - v, c - v - 2.0};
}

std::size_t clamp_cell(long i, std::size_t extent) {
  return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(extent) - 1));
}

}  // namespace

std::array<EnsembleTerm, 4> ensemble_terms(double y, double x, std::size_t rows, std::size_t cols) {
  const Bracket by = bracket(y, rows), bx = bracket(x, cols);
  std::array<EnsembleTerm, 4> t;
  double total = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      EnsembleTerm& e = t[a * 2 + b];
      e.row = clamp_cell(by.lo + a, rows);
      e.col = clamp_cell(bx.lo + b, cols);
      e.dy = a ? by.d_hi : by.d_lo;
      e.dx = b ? bx.d_hi : bx.d_lo;
      // area to the diagonally opposite center
      e.weight = std::abs((a ? by.d_lo : by.d_hi) * (b ? bx.d_lo : bx.d_hi));
      total += e.weight;
    }
  for (auto& e : t) e.weight /= total;
  return t;
}

}  // namespace lcnf::model
