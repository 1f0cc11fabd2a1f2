#include "nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nn/layers.hpp"
#include "nn/ops.hpp"

namespace lcnf::nn {

double finite_difference_error(const std::function<Tensor()>& loss, std::vector<Tensor> wrt, double h) {
  zero_grad(wrt);
  backward(loss());
  double max_diff = 0.0, max_num = 0.0;
  for (auto& t : wrt) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      max_diff = std::max(max_diff, std::abs(analytic[i] - numeric));
      max_num = std::max(max_num, std::abs(numeric));
    }
  }
  return max_num > 0.0 ? max_diff / max_num : max_diff;
}

namespace {

std::vector<double> uniform(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Values bounded away from zero so kinks of relu / |.| stay out of reach of h.
std::vector<double> away_from_zero(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = sign(rng) ? mag(rng) : -mag(rng);
  return v;
}

Tensor param(Shape s, Rng& rng) {
  const std::size_t n = numel(s);
  return Tensor::parameter(std::move(s), uniform(n, rng));
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Random linear functional of y, so every output element gets a distinct weight.
Tensor project(const Tensor& y, const std::vector<double>& r) { return sum(weighted_group_sum(y, r, 1)); }

// Zero-initialized biases put dead-input rows exactly on a relu kink.
void randomize(Tensor& t, Rng& rng) {
  const auto v = uniform(t.size(), rng);
  std::copy(v.begin(), v.end(), t.values().begin());
}

using Case = std::function<double(Rng&)>;

double check(const std::function<Tensor()>& body, std::vector<Tensor> wrt, Rng& rng, std::size_t out_size) {
  const auto r = uniform(out_size, rng);
  return finite_difference_error([&] { return project(body(), r); }, std::move(wrt));
}

std::vector<std::pair<std::string, Case>> cases() {
  std::vector<std::pair<std::string, Case>> c;
  c.emplace_back("conv2d_3x3", [](Rng& rng) {
    const std::size_t ci = pick(rng, 1, 3), co = pick(rng, 1, 3), h = pick(rng, 3, 6), w = pick(rng, 3, 6);
    Tensor x = param({ci, h, w}, rng), k = param({co, ci, 3, 3}, rng), b = param({co}, rng);
    return check([=] { return conv2d_3x3(x, k, b); }, {x, k, b}, rng, co * h * w);
  });
  c.emplace_back("linear", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 5), i = pick(rng, 1, 6), o = pick(rng, 1, 6);
    Tensor x = param({n, i}, rng), w = param({o, i}, rng), b = param({o}, rng);
    return check([=] { return linear(x, w, b); }, {x, w, b}, rng, n * o);
  });
  c.emplace_back("relu", [](Rng& rng) {
    const std::size_t n = pick(rng, 2, 30);
    Tensor x = Tensor::parameter({n}, away_from_zero(n, rng));
    return check([=] { return relu(x); }, {x}, rng, n);
  });
  c.emplace_back("add", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 20);
    Tensor a = param({n}, rng), b = param({n}, rng);
    return check([=] { return add(a, b); }, {a, b}, rng, n);
  });
  c.emplace_back("scale", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 20);
    const double f = uniform(1, rng, -3.0, 3.0)[0];
    Tensor a = param({n}, rng);
    return check([=] { return scale(a, f); }, {a}, rng, n);
  });
  c.emplace_back("concat_leading", [](Rng& rng) {
    const std::size_t h = pick(rng, 1, 4), w = pick(rng, 1, 4);
    std::vector<Tensor> parts;
    std::size_t lead = 0;
    for (std::size_t k = 0, n = pick(rng, 1, 3); k < n; ++k) {
      const std::size_t c = pick(rng, 1, 3);
      parts.push_back(param({c, h, w}, rng));
      lead += c;
    }
    return check([=] { return concat_leading(parts); }, parts, rng, lead * h * w);
  });
  c.emplace_back("concat_features", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 5), a = pick(rng, 1, 4), b = pick(rng, 1, 4);
    Tensor x = param({n, a}, rng), y = param({n, b}, rng);
    return check([=] { return concat_features(x, y); }, {x, y}, rng, n * (a + b));
  });
  c.emplace_back("unfold3x3", [](Rng& rng) {
    const std::size_t d = pick(rng, 1, 3), h = pick(rng, 1, 5), w = pick(rng, 1, 5);
    Tensor x = param({d, h, w}, rng);
    return check([=] { return unfold3x3(x); }, {x}, rng, 9 * d * h * w);
  });
  c.emplace_back("gather_cells", [](Rng& rng) {
    const std::size_t ch = pick(rng, 1, 4), h = pick(rng, 1, 4), w = pick(rng, 1, 4), n = pick(rng, 1, 12);
    Tensor x = param({ch, h, w}, rng);
    std::vector<std::size_t> cells(n);
    for (auto& v : cells) v = pick(rng, 0, h * w - 1);  // repeats exercise scatter-add
    return check([=] { return gather_cells(x, cells); }, {x}, rng, n * ch);
  });
  c.emplace_back("gather_unfolded3x3", [](Rng& rng) {
    const std::size_t d = pick(rng, 1, 3), h = pick(rng, 1, 4), w = pick(rng, 1, 4), n = pick(rng, 1, 8);
    Tensor x = param({d, h, w}, rng);
    std::vector<std::size_t> cells(n);
    for (auto& v : cells) v = pick(rng, 0, h * w - 1);
    return check([=] { return gather_unfolded3x3(x, cells); }, {x}, rng, n * 9 * d);
  });
  c.emplace_back("weighted_group_sum", [](Rng& rng) {
    const std::size_t g = pick(rng, 1, 4), n = pick(rng, 1, 6);
    Tensor y = param({g * n}, rng);
    const auto wts = uniform(g * n, rng);
    return check([=] { return weighted_group_sum(y, wts, g); }, {y}, rng, n);
  });
  c.emplace_back("l1_loss", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 20);
    Tensor p = param({n}, rng);
    auto target = away_from_zero(n, rng);
    for (std::size_t i = 0; i < n; ++i) target[i] += p.values()[i];
    return finite_difference_error([=] { return l1_loss(p, target); }, {p});
  });
  c.emplace_back("sum", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 20);
    Tensor p = param({n}, rng);
    return finite_difference_error([=] { return sum(p); }, {p});
  });
  c.emplace_back("residual_block", [](Rng& rng) {
    const std::size_t ch = pick(rng, 1, 3), h = pick(rng, 3, 5), w = pick(rng, 3, 5);
    ResidualBlock block = ResidualBlock::create(ch, 1.0, rng);
    randomize(block.conv1.bias, rng);
    randomize(block.conv2.bias, rng);
    Tensor x = param({ch, h, w}, rng);
    return check([=] { return block(x); },
                 {x, block.conv1.weight, block.conv1.bias, block.conv2.weight, block.conv2.bias}, rng, ch * h * w);
  });
  c.emplace_back("mlp", [](Rng& rng) {
    const std::size_t n = pick(rng, 1, 4);
    const std::vector<std::size_t> dims{pick(rng, 2, 6), pick(rng, 2, 8), pick(rng, 2, 8), 1};
    Mlp mlp = Mlp::create(dims, rng);
    Tensor x = param({n, dims[0]}, rng);
    std::vector<Tensor> wrt{x};
    for (auto& l : mlp.layers) {
      randomize(l.bias, rng);
      wrt.push_back(l.weight);
      wrt.push_back(l.bias);
    }
    return check([=] { return mlp(x); }, wrt, rng, n);
  });
  return c;
}

}  // namespace

std::vector<GradcheckResult> run_gradchecks(std::uint64_t seed, std::size_t configs, double tolerance) {
  std::vector<GradcheckResult> out;
  Rng rng(seed);
  for (auto& [name, fn] : cases()) {
    GradcheckResult r{name, 0.0, configs, true};
    for (std::size_t k = 0; k < configs; ++k) r.max_rel_error = std::max(r.max_rel_error, fn(rng));
    r.passed = r.max_rel_error < tolerance;
    out.push_back(r);
  }
  return out;
}

}  // namespace lcnf::nn
