#include "doctest.h"

#include <random>
#include <set>

#include "common/error.hpp"
#include "model/coords.hpp"
#include "model/lcnf.hpp"
#include "model/train.hpp"
#include "nn/tensor.hpp"
#include "oracles.hpp"

using namespace lcnf;
using namespace lcnf::model;

namespace {

LcnfConfig tiny_config() {
  LcnfConfig c;
  c.encoder_channels = 4;
  c.residual_blocks = 1;
  c.mlp_hidden = 16;
  c.mlp_layers = 3;
  c.coords_per_step = 64;
  c.crop = 8;
  c.scale = 2;
  return c;
}

sim::DatasetPair random_pair(std::size_t n, std::size_t scale, std::uint64_t seed) {
  sim::DatasetPair p;
  for (std::size_t c = 0; c < prep::kInputChannels; ++c) p.inputs.channels[c] = oracle::random_real(n, n, seed + c);
  // A target the inputs actually determine: upsampled first channel.
  p.target = RealGrid(n * scale, n * scale);
  for (std::size_t r = 0; r < p.target.rows(); ++r)
    for (std::size_t c = 0; c < p.target.cols(); ++c) p.target(r, c) = p.inputs.channels[0](r / scale, c / scale);
  p.scale = scale;
  p.seed = seed;
  return p;
}

std::vector<double> decode(const LcnfModel& m, const nn::Tensor& latent, const std::vector<Query>& q, bool ensemble) {
  const nn::Tensor out = ensemble ? m.decode_ensemble(latent, q) : m.decode_nearest(latent, q);
  return {out.values().begin(), out.values().end()};
}

}  // namespace

TEST_CASE("latent and pixel centers") {
  CHECK(latent_center(0, 4) == -3.0);
  CHECK(latent_center(3, 4) == 3.0);
  CHECK(pixel_center(0, 12, 4) == doctest::Approx(-4.0 + 1.0 / 3.0));
  CHECK(pixel_center(11, 12, 4) == doctest::Approx(4.0 - 1.0 / 3.0));
  // With as many pixels as cells, pixel and latent centers coincide.
  for (std::size_t i = 0; i < 7; ++i) CHECK(pixel_center(i, 7, 7) == doctest::Approx(latent_center(i, 7)));
}

TEST_CASE("nearest_index agrees with brute-force argmin") {
  std::mt19937_64 rng(1);
  for (std::size_t extent : {1, 2, 5, 8}) {
    std::uniform_real_distribution<double> u(-static_cast<double>(extent) - 1.0, static_cast<double>(extent) + 1.0);
    for (int t = 0; t < 2000; ++t) {
      const double c = u(rng);
      std::size_t best = 0;
      for (std::size_t i = 1; i < extent; ++i)
        if (std::abs(c - latent_center(i, extent)) < std::abs(c - latent_center(best, extent))) best = i;
      CHECK(nearest_index(c, extent) == best);
    }
    // Exact midpoints go to the lower index.
    for (std::size_t i = 0; i + 1 < extent; ++i) CHECK(nearest_index(latent_center(i, extent) + 1.0, extent) == i);
  }
}

TEST_CASE("ensemble weights form a partition of unity") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int t = 0; t < 5000; ++t) {
    const auto terms = ensemble_terms(u(rng), u(rng), 5, 5);
    double s = 0.0;
    for (const auto& e : terms) {
      CHECK(e.weight >= 0.0);
      CHECK(e.row < 5);
      CHECK(e.col < 5);
      s += e.weight;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("ensemble collapses to one term at a latent center") {
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const auto terms = ensemble_terms(latent_center(i, 4), latent_center(j, 3), 4, 3);
      std::size_t hits = 0;
      for (const auto& e : terms)
        if (e.weight > 0.0) {
          ++hits;
          CHECK(e.weight == 1.0);
          CHECK(e.row == i);
          CHECK(e.col == j);
          CHECK(e.dy == 0.0);
          CHECK(e.dx == 0.0);
        }
      CHECK(hits == 1);
    }
}

TEST_CASE("border queries reuse edge features with offsets from the padded center") {
  // y below the first center: bracket (-1, 0); both rows map to cell 0.
  const auto t = ensemble_terms(-3.5, 0.0, 3, 3);
  CHECK(t[0].row == 0);
  CHECK(t[2].row == 0);
  CHECK(t[0].dy == doctest::Approx(-3.5 - (-4.0)));
  CHECK(t[2].dy == doctest::Approx(-3.5 - (-2.0)));
}

TEST_CASE("paper-scale shape arithmetic") {
  const auto c = LcnfConfig::paper();
  CHECK(c.latent_dim() == 384);
  CHECK(c.mlp_input_dim() == 3460);
  // 250 cells span [-250, 250]: latent spacing 2, output spacing 2/6 at 6x.
  CHECK(latent_center(1, 250) - latent_center(0, 250) == 2.0);
  const Query q = grid_query(0, 0, 1500, 1500, 250, 250);
  CHECK(q.cell_h * 3.0 == doctest::Approx(1.0));
  CHECK(pixel_center(1, 1500, 250) - pixel_center(0, 1500, 250) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("model shapes and seeded construction") {
  const auto cfg = tiny_config();
  const LcnfModel a(cfg, 3), b(cfg, 3), c(cfg, 4);
  const auto pair = random_pair(6, 2, 1);
  const nn::Tensor latent = a.encode(pair.inputs);
  CHECK(latent.shape() == nn::Shape{cfg.latent_dim(), 6, 6});
  CHECK(a.named_parameters().size() == b.named_parameters().size());
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool same = true, differ = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    same = same && std::equal(pa[i].values().begin(), pa[i].values().end(), pb[i].values().begin());
    differ = differ || !std::equal(pa[i].values().begin(), pa[i].values().end(), pc[i].values().begin());
  }
  CHECK(same);
  CHECK(differ);
  std::set<std::string> names;
  for (const auto& p : a.named_parameters()) CHECK(names.insert(p.name).second);
}

TEST_CASE("ensemble decode equals nearest decode at latent centers") {
  const auto cfg = tiny_config();
  const LcnfModel m(cfg, 5);
  const auto pair = random_pair(5, 2, 2);
  const nn::Tensor latent = m.encode(pair.inputs);
  std::vector<Query> q;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) q.push_back({latent_center(i, 5), latent_center(j, 5), 0.4, 0.4});
  const auto e = decode(m, latent, q, true), n = decode(m, latent, q, false);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(std::abs(e[i] - n[i]) < 1e-9);
}

TEST_CASE("ensemble decode is continuous across cell boundaries") {
  const auto cfg = tiny_config();
  const LcnfModel m(cfg, 6);
  const auto pair = random_pair(5, 2, 3);
  const nn::Tensor latent = m.encode(pair.inputs);
  const double eps = 1e-7;
  for (double y : {-3.0, -2.0, 0.0, 1.0, 3.0}) {
    const std::vector<Query> q{{y - eps, 0.3, 0.4, 0.4}, {y + eps, 0.3, 0.4, 0.4}};
    const auto v = decode(m, latent, q, true);
    CHECK(std::abs(v[0] - v[1]) < 1e-4);
  }
  // The nearest decode jumps at the midpoint between centers.
  const std::vector<Query> q{{1.0 - eps, 0.3, 0.4, 0.4}, {1.0 + eps, 0.3, 0.4, 0.4}};
  const auto jump = decode(m, latent, q, false);
  CHECK(std::abs(jump[0] - jump[1]) > 1e-4);
}

TEST_CASE("query sampling draws distinct pixels with matching targets") {
  const auto pair = random_pair(4, 3, 4);
  nn::Rng rng(1);
  const auto s = sample_queries(pair, 100, rng);
  REQUIRE(s.queries.size() == 100);
  std::set<std::pair<double, double>> seen;
  for (std::size_t i = 0; i < s.queries.size(); ++i) {
    const auto& q = s.queries[i];
    CHECK(seen.insert({q.y, q.x}).second);
    const auto r = static_cast<std::size_t>((q.y + 4.0) / (8.0 / 12.0));
    const auto c = static_cast<std::size_t>((q.x + 4.0) / (8.0 / 12.0));
    CHECK(s.targets[i] == pair.target(r, c));
  }
  CHECK_THROWS_AS(sample_queries(pair, 145, rng), ConfigError);
}

TEST_CASE("crops keep inputs and targets aligned") {
  const auto pair = random_pair(6, 2, 5);
  const auto c = crop_pair(pair, {1, 2, 3});
  CHECK(c.inputs.rows() == 3);
  CHECK(c.target.rows() == 6);
  CHECK(c.inputs.channels[0](0, 0) == pair.inputs.channels[0](1, 2));
  CHECK(c.target(0, 0) == pair.target(2, 4));
  CHECK_THROWS_AS(crop_pair(pair, {4, 0, 3}), ShapeError);
}

TEST_CASE("training reduces the loss on a single pair") {
  auto cfg = tiny_config();
  cfg.learning_rate = 1e-3;
  LcnfModel m(cfg, 7);
  TrainState st(cfg, 8);
  auto pair = random_pair(8, 2, 6);
  for (std::size_t r = 0; r < pair.target.rows(); ++r)
    for (std::size_t c = 0; c < pair.target.cols(); ++c) pair.target(r, c) = 0.2 + 0.04 * static_cast<double>(r);
  const sim::DatasetPair* batch[] = {&pair};
  double first = 0.0, last = 0.0;
  for (int s = 0; s < 60; ++s) {
    const double l = train_step(m, st, batch);
    if (s < 5) first += l;
    if (s >= 55) last += l;
  }
  CHECK(last < 0.5 * first);
  CHECK(st.steps == 60);
}

TEST_CASE("train loop reports per-step and per-epoch losses") {
  auto cfg = tiny_config();
  LcnfModel m(cfg, 1);
  TrainState st(cfg, 2);
  std::vector<sim::DatasetPair> set{random_pair(8, 2, 1), random_pair(8, 2, 2), random_pair(8, 2, 3)};
  std::size_t calls = 0;
  const auto rep = train(m, st, set, {7, 3}, [&](std::size_t, double, double) { ++calls; });
  CHECK(rep.step_loss.size() == 7);
  CHECK(rep.epoch_loss.size() == 2);
  CHECK(calls == 7);
}

TEST_CASE("non-finite inputs raise NumericError") {
  const auto cfg = tiny_config();
  LcnfModel m(cfg, 1);
  TrainState st(cfg, 2);
  auto pair = random_pair(8, 2, 9);
  pair.inputs.channels[2](3, 3) = std::nan("");
  const sim::DatasetPair* batch[] = {&pair};
  CHECK_THROWS_AS(train_step(m, st, batch), NumericError);
}

TEST_CASE("grid inference is independent of the job count") {
  const auto cfg = tiny_config();
  const LcnfModel m(cfg, 3);
  const auto pair = random_pair(6, 2, 7);
  const RealGrid a = infer_grid(m, pair.inputs, 12, 12, 1);
  const RealGrid b = infer_grid(m, pair.inputs, 12, 12, 3);
  CHECK(a == b);
  const RealGrid odd = infer_grid(m, pair.inputs, 7, 13, 1);
  CHECK(odd.rows() == 7);
  CHECK(odd.cols() == 13);
}

TEST_CASE("phase mapping to radians") {
  RealGrid v(1, 2);
  v.vec() = {0.0, 1.0};
  const RealGrid r = to_radians(v, {9.0, -2.5});
  CHECK(r[0] == -2.5);
  CHECK(r[1] == 6.5);
}
