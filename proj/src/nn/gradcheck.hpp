#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace lcnf::nn {

/// ||analytic - numeric||_inf / ||numeric||_inf over every element of `wrt`,
/// numeric by central differences of `loss` with step h. Falls back to the
/// absolute error when the numeric gradient is identically zero.
double finite_difference_error(const std::function<Tensor()>& loss, std::vector<Tensor> wrt, double h = 1e-5);

struct GradcheckResult {
  std::string layer;
  double max_rel_error = 0.0;  // worst over all configurations
  std::size_t configs = 0;
  bool passed = false;
};

/// Checks every op and composite layer on `configs` random shapes each.
std::vector<GradcheckResult> run_gradchecks(std::uint64_t seed, std::size_t configs = 10, double tolerance = 1e-5);

}  // namespace lcnf::nn
