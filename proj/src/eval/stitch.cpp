#include "eval/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/error.hpp"
#include "common/parallel.hpp"

namespace lcnf::eval {
namespace {

std::vector<std::size_t> axis_positions(std::size_t extent, std::size_t tile, std::size_t overlap) {
  std::vector<std::size_t> pos{0};
  const std::size_t stride = tile - overlap;
  while (pos.back() + tile < extent) pos.push_back(std::min(pos.back() + stride, extent - tile));
  return pos;
}

// Overlap with the previous / next lattice position on one axis.
std::pair<std::size_t, std::size_t> side_overlaps(const std::vector<std::size_t>& axis, std::size_t pos,
                                                  std::size_t tile) {
  const auto it = std::find(axis.begin(), axis.end(), pos);
  const std::size_t i = static_cast<std::size_t>(it - axis.begin());
  std::size_t before = 0, after = 0;
  if (i > 0 && axis[i - 1] + tile > pos) before = axis[i - 1] + tile - pos;
  if (i + 1 < axis.size() && pos + tile > axis[i + 1]) after = pos + tile - axis[i + 1];
  return {before, after};
}

std::vector<double> ramp(std::size_t tile, std::size_t before, std::size_t after) {
  std::vector<double> w(tile, 1.0);
  for (std::size_t p = 0; p < tile; ++p) {
    if (before > 0) w[p] = std::min(w[p], static_cast<double>(p + 1) / static_cast<double>(before + 1));
    if (after > 0) w[p] = std::min(w[p], static_cast<double>(tile - p) / static_cast<double>(after + 1));
  }
  return w;
}

}  // namespace

TilePlan TilePlan::grid(std::size_t rows, std::size_t cols, std::size_t tile_size, std::size_t overlap) {
  TilePlan p;
  p.rows = rows;
  p.cols = cols;
  p.tile_size = tile_size;
  p.overlap = overlap;
  p.validate();
  p.axis_rows = axis_positions(rows, tile_size, overlap);
  p.axis_cols = axis_positions(cols, tile_size, overlap);
  for (auto r : p.axis_rows)
    for (auto c : p.axis_cols) p.origins.push_back({r, c});
  return p;
}

TilePlan TilePlan::circular(double diameter, std::size_t tile_size, std::size_t overlap) {
  if (!(diameter > 0.0)) throw ConfigError("field-of-view diameter must be > 0");
  const auto side = static_cast<std::size_t>(std::ceil(diameter));
  TilePlan p = grid(side, side, tile_size, overlap);
  p.fov_diameter = diameter;
  const double c = static_cast<double>(side) / 2.0, rad = diameter / 2.0;
  std::erase_if(p.origins, [&](const TileOrigin& o) {
    // nearest point of the tile to the disk center
    const double ny = std::clamp(c, static_cast<double>(o.row), static_cast<double>(o.row + tile_size));
    const double nx = std::clamp(c, static_cast<double>(o.col), static_cast<double>(o.col + tile_size));
    return std::hypot(ny - c, nx - c) > rad;
  });
  return p;
}

TilePlan TilePlan::scaled(std::size_t factor) const {
  if (factor < 1) throw ConfigError("scale factor must be >= 1");
  TilePlan p = *this;
  p.rows *= factor;
  p.cols *= factor;
  p.tile_size *= factor;
  p.overlap *= factor;
  p.fov_diameter *= static_cast<double>(factor);
  for (auto& v : p.axis_rows) v *= factor;
  for (auto& v : p.axis_cols) v *= factor;
  for (auto& o : p.origins) {
    o.row *= factor;
    o.col *= factor;
  }
  return p;
}

bool TilePlan::in_fov(std::size_t r, std::size_t c) const {
  if (fov_diameter <= 0.0) return true;
  const double cy = static_cast<double>(rows) / 2.0, cx = static_cast<double>(cols) / 2.0;
  return std::hypot(static_cast<double>(r) + 0.5 - cy, static_cast<double>(c) + 0.5 - cx) <= fov_diameter / 2.0;
}

void TilePlan::validate() const {
  if (tile_size < 1) throw ConfigError("tile size must be >= 1");
  if (overlap >= tile_size) throw ConfigError("overlap must be smaller than the tile size");
  if (tile_size > rows || tile_size > cols)
    throw ConfigError("tile size " + std::to_string(tile_size) + " exceeds the region " + std::to_string(rows) + "x" +
                      std::to_string(cols));
}

RealGrid tile_weight(const TilePlan& plan, const TileOrigin& o) {
  const auto [top, bottom] = side_overlaps(plan.axis_rows, o.row, plan.tile_size);
  const auto [left, right] = side_overlaps(plan.axis_cols, o.col, plan.tile_size);
  const auto wy = ramp(plan.tile_size, top, bottom), wx = ramp(plan.tile_size, left, right);
  RealGrid w(plan.tile_size, plan.tile_size);
  for (std::size_t r = 0; r < plan.tile_size; ++r)
    for (std::size_t c = 0; c < plan.tile_size; ++c) w(r, c) = wy[r] * wx[c];
  return w;
}

namespace {

RealGrid weight_total(const TilePlan& plan) {
  RealGrid total(plan.rows, plan.cols);
  for (const auto& o : plan.origins) {
    const RealGrid w = tile_weight(plan, o);
    for (std::size_t r = 0; r < plan.tile_size; ++r)
      for (std::size_t c = 0; c < plan.tile_size; ++c) total(o.row + r, o.col + c) += w(r, c);
  }
  return total;
}

void check_coverage(const TilePlan& plan, const RealGrid& total) {
  std::size_t missing = 0;
  std::ostringstream first;
  for (std::size_t r = 0; r < plan.rows; ++r)
    for (std::size_t c = 0; c < plan.cols; ++c)
      if (plan.in_fov(r, c) && total(r, c) <= 0.0) {
        if (missing < 8) first << " (" << r << "," << c << ")";
        ++missing;
      }
  if (missing > 0)
    throw ConfigError("tile plan leaves " + std::to_string(missing) + " pixels uncovered, e.g." + first.str());
}

}  // namespace

RealGrid normalized_weight_sum(const TilePlan& plan) {
  const RealGrid total = weight_total(plan);
  check_coverage(plan, total);
  RealGrid sum(plan.rows, plan.cols);
  for (const auto& o : plan.origins) {
    const RealGrid w = tile_weight(plan, o);
    for (std::size_t r = 0; r < plan.tile_size; ++r)
      for (std::size_t c = 0; c < plan.tile_size; ++c) sum(o.row + r, o.col + c) += w(r, c) / total(o.row + r, o.col + c);
  }
  return sum;
}

RealGrid stitch_alpha_blend(const std::vector<RealGrid>& tiles, const TilePlan& plan) {
  if (tiles.size() != plan.origins.size())
    throw ShapeError("got " + std::to_string(tiles.size()) + " tiles for a plan with " +
                     std::to_string(plan.origins.size()));
  for (const auto& t : tiles)
    if (t.rows() != plan.tile_size || t.cols() != plan.tile_size)
      throw ShapeError("tile is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ", plan expects " +
                       std::to_string(plan.tile_size));
  check_coverage(plan, weight_total(plan));
  // Running weighted mean: a pixel where every tile agrees keeps that value exactly.
  RealGrid out(plan.rows, plan.cols), seen(plan.rows, plan.cols);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const TileOrigin& o = plan.origins[k];
    const RealGrid w = tile_weight(plan, o);
    for (std::size_t r = 0; r < plan.tile_size; ++r)
      for (std::size_t c = 0; c < plan.tile_size; ++c) {
        double& acc = seen(o.row + r, o.col + c);
        double& v = out(o.row + r, o.col + c);
        acc += w(r, c);
        v += (w(r, c) / acc) * (tiles[k](r, c) - v);
      }
  }
  if (plan.fov_diameter > 0.0)
    for (std::size_t r = 0; r < plan.rows; ++r)
      for (std::size_t c = 0; c < plan.cols; ++c)
        if (!plan.in_fov(r, c)) out(r, c) = 0.0;
  return out;
}

RealGrid infer_tiled(const model::LcnfModel& model, const prep::InputStack& inputs, std::size_t scale,
                     const TilePlan& lr_plan, std::size_t jobs) {
  if (lr_plan.rows != inputs.rows() || lr_plan.cols != inputs.cols())
    throw ShapeError("tile plan region does not match the input extent");
  const TilePlan hr_plan = lr_plan.scaled(scale);
  std::vector<RealGrid> tiles(lr_plan.origins.size());
  const std::size_t t = lr_plan.tile_size;
  parallel_for(tiles.size(), jobs, [&](std::size_t k) {
    const auto& o = lr_plan.origins[k];
    prep::InputStack local;
    for (std::size_t ch = 0; ch < prep::kInputChannels; ++ch) {
      RealGrid g(t, t);
      for (std::size_t r = 0; r < t; ++r)
        for (std::size_t c = 0; c < t; ++c) g(r, c) = inputs.channels[ch](o.row + r, o.col + c);
      local.channels[ch] = std::move(g);
    }
    tiles[k] = model::infer_grid(model, local, t * scale, t * scale);
  });
  return stitch_alpha_blend(tiles, hr_plan);
}

}  // namespace lcnf::eval
