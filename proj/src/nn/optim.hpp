#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nn/tensor.hpp"

namespace lcnf::nn {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> m, v;  // one per parameter, lazily sized
};

/// One bias-corrected Adam update from the parameters' current gradients.
void adam_step(AdamState& state, std::span<Tensor> params);

struct PlateauSchedule {
  double factor = 0.2;
  std::size_t patience = 10;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_improve = 0;
  std::size_t reductions = 0;

  /// Feeds one epoch loss; multiplies `lr` by `factor` once `patience`
  /// consecutive epochs fail to beat the best loss. Returns true on reduction.
  bool update(double epoch_loss, double& lr);
};

}  // namespace lcnf::nn
