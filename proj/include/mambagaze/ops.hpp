// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mambagaze/rng.hpp"
#include "mambagaze/tensor.hpp"

namespace mambagaze::nx {

enum class Unary { tanh, sigmoid, softplus, exp, log1p, silu };

const char* unary_name(Unary fn) noexcept;

/// Widest depthwise convolution kernel accepted.
inline constexpr std::size_t kMaxConvWidth = 64;

// Scalar forms shared by the ops and by oracle code.
double stable_sigmoid(double x) noexcept;
double stable_softplus(double x) noexcept;

/// [m x k] * [k x n] -> [m x n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// x [n x in], weight [out x in], optional bias [out] -> x * weight^T + bias.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias = Tensor<T>());

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> apply_unary(const Tensor<T>& x, Unary fn);

/// Softmax along `axis` (rank 1 or 2), max-subtracted.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

/// Normalizes over the last axis, then applies gamma/beta (each [last]).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps = 1e-5);

/// Causal per-channel convolution: y[t,c] = sum_j kernel[j,c] * x[t-j,c]
/// (+ bias[c]), with zeros before t = 0. Tap 0 is the current sample.
template <typename T>
Tensor<T> depthwise_conv1d(const Tensor<T>& x, const Tensor<T>& kernel,
                           const Tensor<T>& bias = Tensor<T>());

/// Columns [begin, end) of a rank-2 tensor.
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end);

/// Concatenates rank-1 tensors.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts);

/// Reverses axis 0.
template <typename T>
Tensor<T> flip_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// Inverted dropout. Returns `x` itself when not training or rate == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng);

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<Tensor64()>& loss_fn,
                  const std::vector<Tensor64>& params, double step = 1e-5);

}  // namespace mambagaze::nx
