#pragma once

#include <cstddef>
#include <vector>

#include "common/grid.hpp"
#include "model/lcnf.hpp"

namespace lcnf::eval {

struct TileOrigin {
  std::size_t row = 0, col = 0;
};

/// Square tiles laid on a regular lattice with stride tile_size - overlap;
/// the last tile on each axis is pulled back to end at the region border.
struct TilePlan {
  std::size_t rows = 0, cols = 0;  // output region
  std::size_t tile_size = 0;
  std::size_t overlap = 0;
  std::vector<std::size_t> axis_rows, axis_cols;  // lattice positions
  std::vector<TileOrigin> origins;                // tiles actually used
  double fov_diameter = 0.0;                      // > 0: circular field of view

  static TilePlan grid(std::size_t rows, std::size_t cols, std::size_t tile_size, std::size_t overlap);
  /// Tiles of a square region of side ceil(diameter) that touch the centered disk.
  static TilePlan circular(double diameter, std::size_t tile_size, std::size_t overlap);

  /// The same layout with every length multiplied by `factor`.
  TilePlan scaled(std::size_t factor) const;

  bool in_fov(std::size_t r, std::size_t c) const;
  void validate() const;
};

/// Per-tile separable ramp weight (before normalization).
RealGrid tile_weight(const TilePlan& plan, const TileOrigin& origin);

/// Sum over tiles of the normalized weights; 1 wherever covered.
RealGrid normalized_weight_sum(const TilePlan& plan);

/// Weighted mean of overlapping tiles. Throws listing uncovered pixels inside
/// the field of view; pixels outside a circular field of view are 0.
RealGrid stitch_alpha_blend(const std::vector<RealGrid>& tiles, const TilePlan& plan);

/// Patch-wise inference: LR tiles of `plan`, each decoded at `scale`, then
/// blended on the scaled plan.
RealGrid infer_tiled(const model::LcnfModel& model, const prep::InputStack& inputs, std::size_t scale,
                     const TilePlan& lr_plan, std::size_t jobs = 1);

}  // namespace lcnf::eval
