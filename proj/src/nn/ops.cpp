#include "nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace lcnf::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using Eigen::Index;

void expect_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.shape().size() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
}

// im2col for 3x3/pad-1: cols[(c*9 + k), y*W + x] = in[c, y+dy, x+dx]
std::vector<double> im2col(std::span<const double> in, std::size_t C, std::size_t H, std::size_t W) {
  std::vector<double> cols(C * 9 * H * W, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (int k = 0; k < 9; ++k) {
      const long dy = k / 3 - 1, dx = k % 3 - 1;
      double* row = cols.data() + (c * 9 + k) * H * W;
      const double* src = in.data() + c * H * W;
      for (std::size_t y = 0; y < H; ++y) {
        const long sy = static_cast<long>(y) + dy;
        if (sy < 0 || sy >= static_cast<long>(H)) continue;
        const std::size_t x0 = dx < 0 ? 1 : 0, x1 = dx > 0 ? W - 1 : W;
        for (std::size_t x = x0; x < x1; ++x) row[y * W + x] = src[sy * W + x + dx];
      }
    }
  return cols;
}

void col2im_add(std::span<const double> cols, std::span<double> out, std::size_t C, std::size_t H, std::size_t W) {
  for (std::size_t c = 0; c < C; ++c)
    for (int k = 0; k < 9; ++k) {
      const long dy = k / 3 - 1, dx = k % 3 - 1;
      const double* row = cols.data() + (c * 9 + k) * H * W;
      double* dst = out.data() + c * H * W;
      for (std::size_t y = 0; y < H; ++y) {
        const long sy = static_cast<long>(y) + dy;
        if (sy < 0 || sy >= static_cast<long>(H)) continue;
        const std::size_t x0 = dx < 0 ? 1 : 0, x1 = dx > 0 ? W - 1 : W;
        for (std::size_t x = x0; x < x1; ++x) dst[sy * W + x + dx] += row[y * W + x];
      }
    }
}

}  // namespace

Tensor conv2d_3x3(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  expect_rank(input, 3, "conv2d_3x3");
  expect_rank(weight, 4, "conv2d_3x3 weight");
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::size_t O = weight.dim(0);
  if (weight.dim(1) != C || weight.dim(2) != 3 || weight.dim(3) != 3)
    throw ShapeError("conv2d_3x3: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(input.shape()));
  if (bias.size() != O) throw ShapeError("conv2d_3x3: bias size mismatch");

  auto cols = std::make_shared<std::vector<double>>(im2col(input.values(), C, H, W));
  const Index K = static_cast<Index>(C * 9), HW = static_cast<Index>(H * W);
  std::vector<double> out(O * H * W);
  MapMat out_m(out.data(), static_cast<Index>(O), HW);
  ConstMapMat w_m(weight.values().data(), static_cast<Index>(O), K);
  ConstMapMat cols_m(cols->data(), K, HW);
  out_m.noalias() = w_m * cols_m;
  for (std::size_t o = 0; o < O; ++o) out_m.row(static_cast<Index>(o)).array() += bias.values()[o];

  return make_result({O, H, W}, std::move(out), {input, weight, bias}, [=](Node& self) {
    Node& in = *self.parents[0];
    Node& w = *self.parents[1];
    Node& b = *self.parents[2];
    ConstMapMat g(self.grad.data(), static_cast<Index>(O), HW);
    if (w.requires_grad) {
      MapMat gw(w.grad.data(), static_cast<Index>(O), K);
      gw.noalias() += g * ConstMapMat(cols->data(), K, HW).transpose();
    }
    if (b.requires_grad)
      for (std::size_t o = 0; o < O; ++o) b.grad[o] += g.row(static_cast<Index>(o)).sum();
    if (in.requires_grad) {
      std::vector<double> gcols(static_cast<std::size_t>(K * HW));
      MapMat gc(gcols.data(), K, HW);
      gc.noalias() = ConstMapMat(w.value.data(), static_cast<Index>(O), K).transpose() * g;
      col2im_add(gcols, in.grad, C, H, W);
    }
  });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  expect_rank(input, 2, "linear");
  expect_rank(weight, 2, "linear weight");
  const std::size_t N = input.dim(0), I = input.dim(1), O = weight.dim(0);
  if (weight.dim(1) != I)
    throw ShapeError("linear: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(input.shape()));
  if (bias.size() != O) throw ShapeError("linear: bias size mismatch");
  std::vector<double> out(N * O);
  MapMat out_m(out.data(), static_cast<Index>(N), static_cast<Index>(O));
  ConstMapMat x_m(input.values().data(), static_cast<Index>(N), static_cast<Index>(I));
  ConstMapMat w_m(weight.values().data(), static_cast<Index>(O), static_cast<Index>(I));
  out_m.noalias() = x_m * w_m.transpose();
  Eigen::Map<const Eigen::RowVectorXd> b_v(bias.values().data(), static_cast<Index>(O));
  out_m.rowwise() += b_v;

  return make_result({N, O}, std::move(out), {input, weight, bias}, [=](Node& self) {
    Node& x = *self.parents[0];
    Node& w = *self.parents[1];
    Node& b = *self.parents[2];
    ConstMapMat g(self.grad.data(), static_cast<Index>(N), static_cast<Index>(O));
    if (w.requires_grad) {
      MapMat gw(w.grad.data(), static_cast<Index>(O), static_cast<Index>(I));
      gw.noalias() += g.transpose() * ConstMapMat(x.value.data(), static_cast<Index>(N), static_cast<Index>(I));
    }
    if (b.requires_grad) {
      Eigen::Map<Eigen::RowVectorXd> gb(b.grad.data(), static_cast<Index>(O));
      gb += g.colwise().sum();
    }
    if (x.requires_grad) {
      MapMat gx(x.grad.data(), static_cast<Index>(N), static_cast<Index>(I));
      gx.noalias() += g * ConstMapMat(w.value.data(), static_cast<Index>(O), static_cast<Index>(I));
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    Node& in = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (in.value[i] > 0.0) in.grad[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= factor;
  return make_result(x.shape(), std::move(out), {x}, [factor](Node& self) {
    Node& in = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += factor * self.grad[i];
  });
}

Tensor concat_leading(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Shape shape = parts[0].shape();
  std::size_t lead = 0;
  for (const auto& p : parts) {
    if (p.shape().size() != shape.size() || !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1))
      throw ShapeError("concat_leading: trailing shapes differ");
    lead += p.dim(0);
  }
  shape[0] = lead;
  std::vector<double> out;
  out.reserve(numel(shape));
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_result(shape, std::move(out), parents, [offsets](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[offsets[k] + i];
    }
  });
}

Tensor concat_features(const Tensor& a, const Tensor& b) {
  expect_rank(a, 2, "concat_features");
  expect_rank(b, 2, "concat_features");
  const std::size_t N = a.dim(0), A = a.dim(1), B = b.dim(1);
  if (b.dim(0) != N) throw ShapeError("concat_features: row counts differ");
  std::vector<double> out(N * (A + B));
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(a.values().data() + n * A, A, out.data() + n * (A + B));
    std::copy_n(b.values().data() + n * B, B, out.data() + n * (A + B) + A);
  }
  return make_result({N, A + B}, std::move(out), {a, b}, [N, A, B](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t n = 0; n < N; ++n) {
      const double* g = self.grad.data() + n * (A + B);
      if (pa.requires_grad)
        for (std::size_t i = 0; i < A; ++i) pa.grad[n * A + i] += g[i];
      if (pb.requires_grad)
        for (std::size_t i = 0; i < B; ++i) pb.grad[n * B + i] += g[A + i];
    }
  });
}

Tensor unfold3x3(const Tensor& x) {
  expect_rank(x, 3, "unfold3x3");
  const std::size_t D = x.dim(0), H = x.dim(1), W = x.dim(2);
  std::vector<double> out(9 * D * H * W, 0.0);
  auto visit = [=](auto&& fn) {
    for (int k = 0; k < 9; ++k) {
      const long dl = k / 3 - 1, dn = k % 3 - 1;
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h) {
          const long sh = static_cast<long>(h) + dl;
          if (sh < 0 || sh >= static_cast<long>(H)) continue;
          for (std::size_t w = 0; w < W; ++w) {
            const long sw = static_cast<long>(w) + dn;
            if (sw < 0 || sw >= static_cast<long>(W)) continue;
            fn(((k * D + d) * H + h) * W + w, (d * H + sh) * W + sw);
          }
        }
    }
  };
  const auto in = x.values();
  visit([&](std::size_t o, std::size_t i) { out[o] = in[i]; });
  return make_result({9 * D, H, W}, std::move(out), {x}, [visit](Node& self) {
    Node& p = *self.parents[0];
    visit([&](std::size_t o, std::size_t i) { p.grad[i] += self.grad[o]; });
  });
}

Tensor gather_cells(const Tensor& x, std::span<const std::size_t> cells) {
  expect_rank(x, 3, "gather_cells");
  const std::size_t C = x.dim(0), HW = x.dim(1) * x.dim(2), N = cells.size();
  std::vector<std::size_t> idx(cells.begin(), cells.end());
  for (auto i : idx)
    if (i >= HW) throw ShapeError("gather_cells: cell index out of range");
  std::vector<double> out(N * C);
  const auto in = x.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) out[n * C + c] = in[c * HW + idx[n]];
  return make_result({N, C}, std::move(out), {x}, [C, HW, idx = std::move(idx)](Node& self) {
    Node& p = *self.parents[0];
    const std::size_t N = idx.size();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t n = 0; n < N; ++n) p.grad[c * HW + idx[n]] += self.grad[n * C + c];
  });
}

Tensor gather_unfolded3x3(const Tensor& x, std::span<const std::size_t> cells) {
  expect_rank(x, 3, "gather_unfolded3x3");
  const std::size_t D = x.dim(0), H = x.dim(1), W = x.dim(2), N = cells.size(), F = 9 * D;
  std::vector<std::size_t> idx(cells.begin(), cells.end());
  for (auto i : idx)
    if (i >= H * W) throw ShapeError("gather_unfolded3x3: cell index out of range");
  // visit(n, k, src): feature block k of query n reads spatial cell src
  auto visit = [=](const std::vector<std::size_t>& id, auto&& fn) {
    for (std::size_t n = 0; n < id.size(); ++n) {
      const long h = static_cast<long>(id[n] / W), w = static_cast<long>(id[n] % W);
      for (int k = 0; k < 9; ++k) {
        const long sh = h + k / 3 - 1, sw = w + k % 3 - 1;
        if (sh < 0 || sw < 0 || sh >= static_cast<long>(H) || sw >= static_cast<long>(W)) continue;
        fn(n, static_cast<std::size_t>(k), static_cast<std::size_t>(sh) * W + static_cast<std::size_t>(sw));
      }
    }
  };
  std::vector<double> out(N * F, 0.0);
  const auto in = x.values();
  const std::size_t HW = H * W;
  visit(idx, [&](std::size_t n, std::size_t k, std::size_t src) {
    double* dst = out.data() + n * F + k * D;
    for (std::size_t d = 0; d < D; ++d) dst[d] = in[d * HW + src];
  });
  return make_result({N, F}, std::move(out), {x}, [visit, idx = std::move(idx), D, F, HW](Node& self) {
    Node& p = *self.parents[0];
    visit(idx, [&](std::size_t n, std::size_t k, std::size_t src) {
      const double* g = self.grad.data() + n * F + k * D;
      for (std::size_t d = 0; d < D; ++d) p.grad[d * HW + src] += g[d];
    });
  });
}

Tensor weighted_group_sum(const Tensor& y, std::span<const double> weights, std::size_t group) {
  if (group == 0 || y.size() % group != 0 || weights.size() != y.size())
    throw ShapeError("weighted_group_sum: size mismatch");
  const std::size_t N = y.size() / group;
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<double> out(N, 0.0);
  for (std::size_t q = 0; q < N; ++q)
    for (std::size_t t = 0; t < group; ++t) out[q] += w[q * group + t] * y.values()[q * group + t];
  return make_result({N}, std::move(out), {y}, [group, w = std::move(w)](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += w[i] * self.grad[i / group];
  });
}

Tensor l1_loss(const Tensor& pred, std::span<const double> target) {
  if (pred.size() != target.size() || target.empty()) throw ShapeError("l1_loss: size mismatch");
  const double inv = 1.0 / static_cast<double>(target.size());
  std::vector<double> t(target.begin(), target.end());
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(pred.values()[i] - t[i]);
  return make_result({1}, {s * inv}, {pred}, [inv, t = std::move(t)](Node& self) {
    Node& p = *self.parents[0];
    const double g = self.grad[0] * inv;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = p.value[i] - t[i];
      p.grad[i] += d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result({1}, {s}, {x}, [](Node& self) {
    Node& p = *self.parents[0];
    for (auto& g : p.grad) g += self.grad[0];
  });
}

}  // namespace lcnf::nn
