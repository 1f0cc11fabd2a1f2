#include "sim/phantom.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace lcnf::sim {
namespace {

// Separable Gaussian blur with wrap-around borders.
RealGrid blur(const RealGrid& in, double sigma) {
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double ks = 0.0;
  for (long i = -radius; i <= radius; ++i) ks += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= ks;
  const long R = static_cast<long>(in.rows()), C = static_cast<long>(in.cols());
  RealGrid tmp(in.rows(), in.cols()), out(in.rows(), in.cols());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double s = 0.0;
      for (long i = -radius; i <= radius; ++i) s += k[i + radius] * in(r, ((c + i) % C + C) % C);
      tmp(r, c) = s;
    }
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double s = 0.0;
      for (long i = -radius; i <= radius; ++i) s += k[i + radius] * tmp(((r + i) % R + R) % R, c);
      out(r, c) = s;
    }
  return out;
}

void normalize_unit(RealGrid& g) {
  const double lo = min_value(g), hi = max_value(g);
  const double span = hi - lo;
  for (auto& v : g.vec()) v = span > 0.0 ? (v - lo) / span : 0.0;
}

struct Layers {
  RealGrid structure;
  RealGrid absorption;
};

Layers make_layers(std::uint64_t seed, optics::Shape shape) {
  if (shape.rows < 32 || shape.cols < 32) throw ConfigError("phantom shape must be at least 32x32");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double R = static_cast<double>(shape.rows), C = static_cast<double>(shape.cols);
  const double extent = std::min(R, C);

  RealGrid cells(shape.rows, shape.cols), absorb(shape.rows, shape.cols);
  const int n_cells = 4 + static_cast<int>(unit(rng) * 6.0);
  for (int b = 0; b < n_cells; ++b) {
    const double cy = unit(rng) * R, cx = unit(rng) * C;
    const double sa = extent * (0.05 + 0.12 * unit(rng));
    const double sb = sa * (0.5 + 0.5 * unit(rng));
    const double theta = unit(rng) * std::numbers::pi;
    const double amp = 0.4 + 0.6 * unit(rng);
    const double ct = std::cos(theta), st = std::sin(theta);
    // one or two dense inclusions per blob
    const int n_inc = 1 + static_cast<int>(unit(rng) * 2.0);
    std::vector<std::array<double, 4>> inc;
    for (int k = 0; k < n_inc; ++k)
      inc.push_back({cy + 0.5 * sa * gauss(rng), cx + 0.5 * sa * gauss(rng), sa * (0.15 + 0.2 * unit(rng)),
                     0.3 + 0.5 * unit(rng)});
    for (std::size_t r = 0; r < shape.rows; ++r)
      for (std::size_t c = 0; c < shape.cols; ++c) {
        const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
        const double a = (ct * dx + st * dy) / sa, bb = (-st * dx + ct * dy) / sb;
        double v = amp * std::exp(-0.5 * (a * a + bb * bb));
        for (const auto& q : inc) {
          const double ey = static_cast<double>(r) - q[0], ex = static_cast<double>(c) - q[1];
          v += amp * q[3] * std::exp(-0.5 * (ey * ey + ex * ex) / (q[2] * q[2]));
        }
        cells(r, c) += v;
        absorb(r, c) += 0.3 * v;
      }
  }

  RealGrid noise(shape.rows, shape.cols);
  for (auto& v : noise.vec()) v = gauss(rng);
  RealGrid texture = blur(noise, 1.0 + 0.02 * extent);
  normalize_unit(texture);
  RealGrid fine = blur(noise, 0.8);
  normalize_unit(fine);

  RealGrid structure(shape.rows, shape.cols);
  for (std::size_t i = 0; i < structure.size(); ++i)
    structure[i] = cells[i] + 0.35 * texture[i] + 0.08 * fine[i];
  normalize_unit(structure);
  normalize_unit(absorb);
  return {std::move(structure), std::move(absorb)};
}

}  // namespace

ObjectField generate_phantom(std::uint64_t seed, optics::Shape shape, PhaseRange range, double pitch_um) {
  if (!(range.hi > range.lo)) throw ConfigError("phase range must satisfy lo < hi");
  Layers layers = make_layers(seed, shape);
  ObjectField obj;
  obj.pitch_um = pitch_um;
  obj.phase = std::move(layers.structure);
  for (auto& v : obj.phase.vec()) v = range.lo + (range.hi - range.lo) * v;
  obj.absorption = std::move(layers.absorption);
  for (auto& v : obj.absorption.vec()) v *= 0.05;
  return obj;
}

RealGrid generate_texture_image(std::uint64_t seed, optics::Shape shape) {
  return make_layers(seed, shape).structure;
}

}  // namespace lcnf::sim
