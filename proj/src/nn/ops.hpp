#pragma once

#include <span>
#include <vector>

#include "nn/tensor.hpp"

namespace lcnf::nn {

// Image tensors are [C, H, W]; feature matrices are [N, F]; row-major.

/// 3x3 cross-correlation with zero padding 1. weight [C_out, C_in, 3, 3], bias [C_out].
Tensor conv2d_3x3(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// x W^T + b for x [N, in], weight [out, in], bias [out].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

/// Concatenates [C_i, ...] tensors along the leading axis.
Tensor concat_leading(std::span<const Tensor> parts);

/// Concatenates [N, A] and [N, B] along features.
Tensor concat_features(const Tensor& a, const Tensor& b);

/// [D, H, W] -> [9D, H, W]; block k = (l+1)*3 + (n+1) holds the neighbor at
/// offset (l, n), zero outside the grid.
Tensor unfold3x3(const Tensor& x);

/// Picks spatial cells (flat index h*W + w) of a [C, H, W] tensor -> [N, C].
Tensor gather_cells(const Tensor& x, std::span<const std::size_t> cells);

/// gather_cells(unfold3x3(x), cells) without materializing the full unfold.
Tensor gather_unfolded3x3(const Tensor& x, std::span<const std::size_t> cells);

/// y [G*N] or [G*N, 1] -> [N]: out[q] = sum_t weights[q*G + t] * y[q*G + t].
Tensor weighted_group_sum(const Tensor& y, std::span<const double> weights, std::size_t group);

/// mean |pred - target|
Tensor l1_loss(const Tensor& pred, std::span<const double> target);

Tensor sum(const Tensor& x);

}  // namespace lcnf::nn
