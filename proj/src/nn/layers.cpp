#include "nn/layers.hpp"

#include <cmath>

#include "common/error.hpp"
#include "nn/ops.hpp"

namespace lcnf::nn {

std::vector<double> fan_in_uniform(std::size_t count, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(count);
  for (auto& v : w) v = dist(rng);
  return w;
}

Conv3x3 Conv3x3::create(std::size_t in, std::size_t out, Rng& rng) {
  auto w = fan_in_uniform(out * in * 9, in * 9, rng);
  return {Tensor::parameter({out, in, 3, 3}, std::move(w)), Tensor::parameter({out}, fan_in_uniform(out, in * 9, rng))};
}

Tensor Conv3x3::operator()(const Tensor& x) const { return conv2d_3x3(x, weight, bias); }

void Conv3x3::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Linear Linear::create(std::size_t in, std::size_t out, Rng& rng) {
  auto w = fan_in_uniform(out * in, in, rng);
  return {Tensor::parameter({out, in}, std::move(w)), Tensor::parameter({out}, fan_in_uniform(out, in, rng))};
}

Tensor Linear::operator()(const Tensor& x) const { return linear(x, weight, bias); }

void Linear::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

ResidualBlock ResidualBlock::create(std::size_t channels, double res_scale, Rng& rng) {
  ResidualBlock b;
  b.conv1 = Conv3x3::create(channels, channels, rng);
  b.conv2 = Conv3x3::create(channels, channels, rng);
  b.res_scale = res_scale;
  return b;
}

Tensor ResidualBlock::operator()(const Tensor& x) const {
  Tensor branch = conv2(relu(conv1(x)));
  if (res_scale != 1.0) branch = scale(branch, res_scale);
  return add(x, branch);
}

void ResidualBlock::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
}

Mlp Mlp::create(const std::vector<std::size_t>& dims, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least an input and an output dimension");
  Mlp m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) m.layers.push_back(Linear::create(dims[i], dims[i + 1], rng));
  return m;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

void Mlp::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "." + std::to_string(i), out);
}

}  // namespace lcnf::nn
