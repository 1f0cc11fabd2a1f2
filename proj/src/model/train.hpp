#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "model/lcnf.hpp"

namespace lcnf::model {

struct TrainOptions {
  std::size_t steps = 2000;
  std::size_t epoch_steps = 0;  // 0: one pass over the training set per epoch
};

struct TrainReport {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;  // learning rate after each epoch's plateau update
};

using StepCallback = std::function<void(std::size_t step, double loss, double lr)>;

/// Batches are drawn from a per-epoch shuffle of `train_set`; the plateau
/// schedule sees the mean loss of each epoch.
TrainReport train(LcnfModel& model, TrainState& state, const std::vector<sim::DatasetPair>& train_set,
                  const TrainOptions& options, const StepCallback& on_step = {});

}  // namespace lcnf::model
