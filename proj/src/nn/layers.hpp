#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace lcnf::nn {

using Rng = std::mt19937_64;

struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); used for weights and biases alike.
std::vector<double> fan_in_uniform(std::size_t count, std::size_t fan_in, Rng& rng);

struct Conv3x3 {
  Tensor weight;  // [out, in, 3, 3]
  Tensor bias;    // [out]

  static Conv3x3 create(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct Linear {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  static Linear create(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

/// x + res_scale * conv2(relu(conv1(x)))
struct ResidualBlock {
  Conv3x3 conv1, conv2;
  double res_scale = 1.0;

  static ResidualBlock create(std::size_t channels, double res_scale, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

/// Linear layers with ReLU between them; the last layer is unactivated.
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(const std::vector<std::size_t>& dims, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

}  // namespace lcnf::nn
