#include "nn/optim.hpp"

#include <cmath>

#include "common/error.hpp"

namespace lcnf::nn {

void adam_step(AdamState& s, std::span<Tensor> params) {
  if (s.m.empty()) {
    for (auto& p : params) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
  }
  if (s.m.size() != params.size()) throw ShapeError("adam state tracks a different parameter list");
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].values();
    const auto grad = params[k].grad();
    auto& m = s.m[k];
    auto& v = s.v[k];
    if (m.size() != values.size()) throw ShapeError("adam moment size mismatch for parameter " + std::to_string(k));
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      values[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
    }
  }
}

bool PlateauSchedule::update(double epoch_loss, double& lr) {
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("plateau factor must lie in (0, 1)");
  if (epoch_loss < best_loss) {
    best_loss = epoch_loss;
    epochs_since_improve = 0;
    return false;
  }
  if (++epochs_since_improve < patience) return false;
  lr *= factor;
  epochs_since_improve = 0;
  ++reductions;
  return true;
}

}  // namespace lcnf::nn
