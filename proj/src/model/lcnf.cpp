#include "model/lcnf.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "nn/ops.hpp"

namespace lcnf::model {

using nn::Tensor;

void LcnfConfig::validate() const {
  if (encoder_channels < 1) throw ConfigError("encoder_channels must be >= 1");
  if (mlp_hidden < 1) throw ConfigError("mlp_hidden must be >= 1");
  if (mlp_layers < 1) throw ConfigError("mlp_layers must be >= 1");
  if (unfold != 3) throw ConfigError("only 3x3 feature unfolding is supported");
  if (coords_per_step < 1) throw ConfigError("coords_per_step must be >= 1");
  if (crop < 1) throw ConfigError("crop must be >= 1");
  if (scale < 1) throw ConfigError("scale must be >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must lie in (0, 1)");
  if (!(phase.scale != 0.0)) throw ConfigError("phase scale must be nonzero");
}

LcnfConfig LcnfConfig::desk() {
  LcnfConfig c;
  c.phase = {9.0, -2.5};
  return c;
}

LcnfConfig LcnfConfig::paper() {
  LcnfConfig c;
  c.encoder_channels = 128;
  c.residual_blocks = 32;
  c.coords_per_step = 2304;
  c.crop = 48;
  c.scale = 6;
  c.batch = 5;
  return c;
}

Encoder Encoder::create(std::size_t in_channels, const LcnfConfig& config, nn::Rng& rng) {
  Encoder e;
  e.head = nn::Conv3x3::create(in_channels, config.encoder_channels, rng);
  for (std::size_t i = 0; i < config.residual_blocks; ++i)
    e.blocks.push_back(nn::ResidualBlock::create(config.encoder_channels, config.res_scale, rng));
  e.tail = nn::Conv3x3::create(config.encoder_channels, config.encoder_channels, rng);
  return e;
}

Tensor Encoder::operator()(const Tensor& x) const {
  const Tensor h = head(x);
  Tensor r = h;
  for (const auto& b : blocks) r = b(r);
  return nn::add(tail(r), h);
}

void Encoder::collect(const std::string& prefix, std::vector<nn::NamedParam>& out) const {
  head.collect(prefix + ".head", out);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(prefix + ".block" + std::to_string(i), out);
  tail.collect(prefix + ".tail", out);
}

namespace {

constexpr std::array<std::size_t, 3> kGroupFirst{0, 2, 5};
constexpr std::array<std::size_t, 3> kGroupSize{2, 3, 1};

}  // namespace

LcnfModel::LcnfModel(const LcnfConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  nn::Rng rng(seed);
  for (std::size_t e = 0; e < 3; ++e) encoders_[e] = Encoder::create(kGroupSize[e], config_, rng);
  std::vector<std::size_t> dims{config_.mlp_input_dim()};
  for (std::size_t i = 0; i + 1 < config_.mlp_layers; ++i) dims.push_back(config_.mlp_hidden);
  dims.push_back(1);
  mlp_ = nn::Mlp::create(dims, rng);
}

Tensor channel_tensor(const prep::InputStack& inputs, std::size_t first, std::size_t count) {
  const std::size_t h = inputs.rows(), w = inputs.cols();
  std::vector<double> v;
  v.reserve(count * h * w);
  for (std::size_t c = first; c < first + count; ++c) {
    if (inputs.channels[c].rows() != h || inputs.channels[c].cols() != w)
      throw ShapeError("input channel " + std::to_string(c) + " has a different shape");
    v.insert(v.end(), inputs.channels[c].vec().begin(), inputs.channels[c].vec().end());
  }
  return Tensor::constant({count, h, w}, std::move(v));
}

Tensor LcnfModel::encode(const prep::InputStack& inputs) const {
  std::vector<Tensor> parts;
  for (std::size_t e = 0; e < 3; ++e) parts.push_back(encoders_[e](channel_tensor(inputs, kGroupFirst[e], kGroupSize[e])));
  return nn::concat_leading(parts);
}

Tensor LcnfModel::decode_terms(const Tensor& latent, std::span<const std::size_t> cells, std::span<const double> rel,
                               std::span<const double> weights, std::size_t group) const {
  const std::size_t m = cells.size();
  Tensor features = nn::concat_features(nn::gather_unfolded3x3(latent, cells),
                                        Tensor::constant({m, 4}, std::vector<double>(rel.begin(), rel.end())));
  return nn::weighted_group_sum(mlp_(features), weights, group);
}

Tensor LcnfModel::decode_ensemble(const Tensor& latent, std::span<const Query> queries) const {
  if (latent.shape().size() != 3 || latent.dim(0) != config_.latent_dim())
    throw ShapeError("latent grid " + nn::shape_str(latent.shape()) + " does not match D = " +
                     std::to_string(config_.latent_dim()));
  const std::size_t rows = latent.dim(1), cols = latent.dim(2), n = queries.size();
  std::vector<std::size_t> cells(4 * n);
  std::vector<double> rel(16 * n), weights(4 * n);
  for (std::size_t q = 0; q < n; ++q) {
    const Query& qu = queries[q];
    const auto terms = ensemble_terms(qu.y, qu.x, rows, cols);
    for (std::size_t t = 0; t < 4; ++t) {
      const std::size_t k = q * 4 + t;
      cells[k] = terms[t].row * cols + terms[t].col;
      rel[k * 4 + 0] = terms[t].dy;
      rel[k * 4 + 1] = terms[t].dx;
      rel[k * 4 + 2] = qu.cell_h;
      rel[k * 4 + 3] = qu.cell_w;
      weights[k] = terms[t].weight;
    }
  }
  return decode_terms(latent, cells, rel, weights, 4);
}

Tensor LcnfModel::decode_nearest(const Tensor& latent, std::span<const Query> queries) const {
  const std::size_t rows = latent.dim(1), cols = latent.dim(2), n = queries.size();
  std::vector<std::size_t> cells(n);
  std::vector<double> rel(4 * n), weights(n, 1.0);
  for (std::size_t q = 0; q < n; ++q) {
    const auto s = select_latent(queries[q].y, queries[q].x, rows, cols);
    cells[q] = s.row * cols + s.col;
    rel[q * 4 + 0] = s.dy;
    rel[q * 4 + 1] = s.dx;
    rel[q * 4 + 2] = queries[q].cell_h;
    rel[q * 4 + 3] = queries[q].cell_w;
  }
  return decode_terms(latent, cells, rel, weights, 1);
}

std::vector<nn::NamedParam> LcnfModel::named_parameters() const {
  std::vector<nn::NamedParam> out;
  for (std::size_t e = 0; e < 3; ++e) encoders_[e].collect("encoder" + std::to_string(e + 1), out);
  mlp_.collect("mlp", out);
  return out;
}

std::vector<Tensor> LcnfModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

Query grid_query(std::size_t r, std::size_t c, std::size_t out_rows, std::size_t out_cols, std::size_t rows,
                 std::size_t cols) {
  return {pixel_center(r, out_rows, rows), pixel_center(c, out_cols, cols),
          2.0 * static_cast<double>(rows) / static_cast<double>(out_rows),
          2.0 * static_cast<double>(cols) / static_cast<double>(out_cols)};
}

sim::DatasetPair crop_pair(const sim::DatasetPair& pair, const Crop& crop) {
  pair.validate();
  if (crop.row + crop.size > pair.inputs.rows() || crop.col + crop.size > pair.inputs.cols())
    throw ShapeError("crop exceeds the input extent");
  sim::DatasetPair out;
  out.scale = pair.scale;
  out.seed = pair.seed;
  for (std::size_t ch = 0; ch < prep::kInputChannels; ++ch) {
    RealGrid g(crop.size, crop.size);
    for (std::size_t r = 0; r < crop.size; ++r)
      for (std::size_t c = 0; c < crop.size; ++c) g(r, c) = pair.inputs.channels[ch](crop.row + r, crop.col + c);
    out.inputs.channels[ch] = std::move(g);
  }
  const std::size_t s = pair.scale, n = crop.size * s;
  out.target = RealGrid(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out.target(r, c) = pair.target(crop.row * s + r, crop.col * s + c);
  return out;
}

Sampled sample_queries(const sim::DatasetPair& pair, std::size_t count, nn::Rng& rng) {
  const std::size_t rows = pair.target.rows(), cols = pair.target.cols(), total = rows * cols;
  if (count > total)
    throw ConfigError("coords_per_step " + std::to_string(count) + " exceeds the " + std::to_string(total) +
                      " target pixels");
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, total - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  Sampled s;
  s.queries.reserve(count);
  s.targets.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = idx[i] / cols, c = idx[i] % cols;
    s.queries.push_back(grid_query(r, c, rows, cols, pair.inputs.rows(), pair.inputs.cols()));
    s.targets.push_back(pair.target(r, c));
  }
  return s;
}

TrainState::TrainState(const LcnfConfig& config, std::uint64_t seed) : rng(seed) {
  adam.lr = config.learning_rate;
  plateau.factor = config.plateau_factor;
  plateau.patience = config.plateau_patience;
}

double train_step(LcnfModel& model, TrainState& state, std::span<const sim::DatasetPair* const> batch) {
  if (batch.empty()) throw ConfigError("train_step needs a non-empty batch");
  const auto& cfg = model.config();
  std::vector<Tensor> params = model.parameters();
  nn::zero_grad(params);
  double total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const sim::DatasetPair* pair : batch) {
    pair->validate();
    const std::size_t size = std::min({cfg.crop, pair->inputs.rows(), pair->inputs.cols()});
    Crop crop{std::uniform_int_distribution<std::size_t>(0, pair->inputs.rows() - size)(state.rng),
              std::uniform_int_distribution<std::size_t>(0, pair->inputs.cols() - size)(state.rng), size};
    const sim::DatasetPair local = crop_pair(*pair, crop);
    const Sampled s = sample_queries(local, cfg.coords_per_step, state.rng);
    const Tensor latent = model.encode(local.inputs);
    const Tensor loss = nn::l1_loss(model.decode_ensemble(latent, s.queries), s.targets);
    total += loss.item();
    nn::backward(nn::scale(loss, inv_batch));
  }
  nn::adam_step(state.adam, params);
  ++state.steps;
  return total * inv_batch;
}

RealGrid infer_grid(const LcnfModel& model, const prep::InputStack& inputs, std::size_t out_rows, std::size_t out_cols,
                    std::size_t jobs) {
  if (out_rows < 1 || out_cols < 1) throw ConfigError("output shape must be at least 1x1");
  nn::NoGradGuard no_grad;
  const Tensor latent = model.encode(inputs);
  const std::size_t rows = inputs.rows(), cols = inputs.cols();
  constexpr std::size_t kChunk = 2048;
  const std::size_t total = out_rows * out_cols;
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  RealGrid out(out_rows, out_cols);
  parallel_for(chunks, jobs, [&](std::size_t k) {
    nn::NoGradGuard guard;
    const std::size_t begin = k * kChunk, end = std::min(total, begin + kChunk);
    std::vector<Query> q;
    q.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
      q.push_back(grid_query(i / out_cols, i % out_cols, out_rows, out_cols, rows, cols));
    const Tensor v = model.decode_ensemble(latent, q);
    std::copy(v.values().begin(), v.values().end(), out.vec().begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return out;
}

RealGrid to_radians(const RealGrid& values, const PhaseMapping& mapping) {
  RealGrid out = values;
  for (auto& v : out.vec()) v = mapping.scale * v + mapping.offset;
  return out;
}

}  // namespace lcnf::model
