#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common/grid.hpp"
#include "model/coords.hpp"
#include "nn/layers.hpp"
#include "nn/optim.hpp"
#include "preprocess/preprocess.hpp"
#include "sim/dataset.hpp"

namespace lcnf::model {

/// radians = scale * network_value + offset
struct PhaseMapping {
  double scale = 12.0;
  double offset = 0.0;
};

struct LcnfConfig {
  std::size_t encoder_channels = 32;
  std::size_t residual_blocks = 4;
  double res_scale = 1.0;
  std::size_t mlp_hidden = 256;
  std::size_t mlp_layers = 5;  // linear layers, last one unactivated
  std::size_t unfold = 3;
  std::size_t coords_per_step = 256;
  std::size_t crop = 32;
  std::size_t scale = 3;
  std::size_t batch = 1;
  double learning_rate = 1e-4;
  double plateau_factor = 0.2;
  std::size_t plateau_patience = 10;
  PhaseMapping phase;

  std::size_t encoder_count() const { return 3; }
  std::size_t latent_dim() const { return encoder_count() * encoder_channels; }
  std::size_t mlp_input_dim() const { return latent_dim() * unfold * unfold + 4; }
  void validate() const;

  static LcnfConfig desk();
  static LcnfConfig paper();
};

/// Query pixel in latent coordinates with its size (cell) in latent units.
struct Query {
  double y = 0.0, x = 0.0;
  double cell_h = 0.0, cell_w = 0.0;
};

/// input conv -> residual blocks -> output conv, plus a long skip from the
/// input conv.
struct Encoder {
  nn::Conv3x3 head;
  std::vector<nn::ResidualBlock> blocks;
  nn::Conv3x3 tail;

  static Encoder create(std::size_t in_channels, const LcnfConfig& config, nn::Rng& rng);
  nn::Tensor operator()(const nn::Tensor& x) const;
  void collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const;
};

class LcnfModel {
 public:
  LcnfModel(const LcnfConfig& config, std::uint64_t seed);

  const LcnfConfig& config() const { return config_; }

  /// Latent grid [D, H, W] from the six channels (BF pair, DF triple, DPC).
  nn::Tensor encode(const prep::InputStack& inputs) const;

  /// Local-ensemble decode of each query -> [N].
  nn::Tensor decode_ensemble(const nn::Tensor& latent, std::span<const Query> queries) const;

  /// Decode from the nearest latent vector only -> [N].
  nn::Tensor decode_nearest(const nn::Tensor& latent, std::span<const Query> queries) const;

  /// MLP on explicit inputs: rows of [phi_hat (9D), dy, dx, cell_h, cell_w] -> [N, 1].
  nn::Tensor decode_point(const nn::Tensor& features) const { return mlp_(features); }

  /// Parameters in a fixed order (checkpoint order).
  std::vector<nn::NamedParam> named_parameters() const;
  std::vector<nn::Tensor> parameters() const;

 private:
  nn::Tensor decode_terms(const nn::Tensor& latent, std::span<const std::size_t> cells,
                          std::span<const double> rel, std::span<const double> weights, std::size_t group) const;

  LcnfConfig config_;
  std::array<Encoder, 3> encoders_;
  nn::Mlp mlp_;
};

/// Copies channels [first, first + count) of `inputs` into a [count, H, W] constant.
nn::Tensor channel_tensor(const prep::InputStack& inputs, std::size_t first, std::size_t count);

/// The query at the center of output pixel (r, c) of an out_rows x out_cols
/// grid covering a rows x cols latent grid.
Query grid_query(std::size_t r, std::size_t c, std::size_t out_rows, std::size_t out_cols, std::size_t rows,
                 std::size_t cols);

struct Crop {
  std::size_t row = 0, col = 0, size = 0;
};

/// Crops of the inputs and the matching target region.
sim::DatasetPair crop_pair(const sim::DatasetPair& pair, const Crop& crop);

struct Sampled {
  std::vector<Query> queries;
  std::vector<double> targets;
};

/// `count` distinct target pixels drawn uniformly without replacement.
Sampled sample_queries(const sim::DatasetPair& pair, std::size_t count, nn::Rng& rng);

struct TrainState {
  nn::AdamState adam;
  nn::PlateauSchedule plateau;
  nn::Rng rng;
  std::size_t steps = 0;

  explicit TrainState(const LcnfConfig& config, std::uint64_t seed);
};

/// One optimizer step over `batch` (random crop, coordinate sampling, L1,
/// gradient accumulated over the batch). Returns the mean batch loss.
double train_step(LcnfModel& model, TrainState& state, std::span<const sim::DatasetPair* const> batch);

/// Decodes every pixel center of an out_rows x out_cols grid. Values are in
/// network units; see to_radians.
RealGrid infer_grid(const LcnfModel& model, const prep::InputStack& inputs, std::size_t out_rows,
                    std::size_t out_cols, std::size_t jobs = 1);

RealGrid to_radians(const RealGrid& values, const PhaseMapping& mapping);

}  // namespace lcnf::model
