#pragma once

#include <array>
#include <cstddef>

namespace lcnf::model {

// Latent coordinates: a grid with `extent` cells along an axis spans
// [-extent, extent]; cell i is centered at -extent + 1 + 2i (spacing 2).

double latent_center(std::size_t index, std::size_t extent);

/// Center of output pixel `index` when `count` pixels tile [-extent, extent].
double pixel_center(std::size_t index, std::size_t count, std::size_t extent);

/// Index of the nearest center; midpoints resolve to the lower index.
std::size_t nearest_index(double c, std::size_t extent);

struct LatentSelection {
  std::size_t row = 0, col = 0;
  double dy = 0.0, dx = 0.0;  // c - v
};

LatentSelection select_latent(double y, double x, std::size_t rows, std::size_t cols);

/// One of the four latent vectors blended by the local ensemble.
struct EnsembleTerm {
  std::size_t row = 0, col = 0;  // feature cell after one-cell mirror padding
  double dy = 0.0, dx = 0.0;     // offset from the (possibly padded) center
  double weight = 0.0;           // S_t / S
};

/// Terms ordered 00, 01, 10, 11 (row offset, col offset). Each weight is the
/// area spanned by the query and the diagonally opposite center, over the
/// sum of the four areas.
std::array<EnsembleTerm, 4> ensemble_terms(double y, double x, std::size_t rows, std::size_t cols);

}  // namespace lcnf::model
