#include "model/train.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"

namespace lcnf::model {

TrainReport train(LcnfModel& model, TrainState& state, const std::vector<sim::DatasetPair>& train_set,
                  const TrainOptions& options, const StepCallback& on_step) {
  if (train_set.empty()) throw ConfigError("training set is empty");
  const std::size_t batch = model.config().batch;
  const std::size_t epoch_steps =
      options.epoch_steps > 0 ? options.epoch_steps : std::max<std::size_t>(1, train_set.size() / batch);
  TrainReport report;
  std::vector<std::size_t> order(train_set.size());
  std::size_t cursor = order.size();
  double epoch_sum = 0.0;
  std::size_t in_epoch = 0;
  for (std::size_t step = 0; step < options.steps; ++step) {
    std::vector<const sim::DatasetPair*> items;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), state.rng);
        cursor = 0;
      }
      items.push_back(&train_set[order[cursor++]]);
    }
    const double loss = train_step(model, state, items);
    report.step_loss.push_back(loss);
    if (on_step) on_step(step, loss, state.adam.lr);
    epoch_sum += loss;
    if (++in_epoch == epoch_steps) {
      const double mean_loss = epoch_sum / static_cast<double>(in_epoch);
      report.epoch_loss.push_back(mean_loss);
      state.plateau.update(mean_loss, state.adam.lr);
      report.epoch_lr.push_back(state.adam.lr);
      epoch_sum = 0.0;
      in_epoch = 0;
    }
  }
  return report;
}

}  // namespace lcnf::model
