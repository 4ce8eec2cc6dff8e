// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mambagaze/ops.hpp"
#include "mambagaze/rng.hpp"
#include "mambagaze/tensor.hpp"

/// Selective state-space layer: zero-order-hold discretization of a diagonal
/// continuous system whose input matrix, readout and step size are computed
/// from the current input, scanned sequentially in time.
namespace mambagaze::ssm {

using nx::Tensor;

/// Below this |step * a| the input gain uses its first-order limit step * b.
inline constexpr double kZohLimit = 1e-8;

struct Discretized {
  double a_bar;
  double b_bar;
};

/// a_bar = exp(step * a); b_bar = (exp(step * a) - 1) / a * b.
Discretized discretize_zoh(double a, double b, double step);

/// d b_bar / d a for unit b; used by the scan backward pass.
double zoh_gain_da(double a, double step);

template <typename T>
struct SsmParams {
  Tensor<T> x_proj;   // [dt_rank + 2*d_state, d_inner] -> (dt_low, B, C)
  Tensor<T> dt_proj;  // [d_inner, dt_rank]
  Tensor<T> dt_bias;  // [d_inner]
  Tensor<T> a_log;    // [d_inner, d_state]; realized A = -exp(a_log) < 0
  Tensor<T> d_skip;   // [d_inner]

  std::size_t d_inner() const { return a_log.dim(0); }
  std::size_t d_state() const { return a_log.dim(1); }
  std::size_t dt_rank() const { return dt_proj.dim(1); }
};

template <typename T>
struct BlockParams {
  Tensor<T> norm_gamma;  // [d_model]
  Tensor<T> norm_beta;   // [d_model]
  Tensor<T> in_proj;     // [2*d_inner, d_model] -> (signal, gate)
  Tensor<T> conv_kernel; // [d_conv, d_inner]
  Tensor<T> conv_bias;   // [d_inner]
  SsmParams<T> ssm;
  Tensor<T> out_proj;    // [d_model, d_inner]

  std::size_t d_model() const { return in_proj.dim(1); }
};

struct BlockShape {
  std::size_t d_model = 128;
  std::size_t d_state = 16;
  std::size_t d_conv = 4;
  std::size_t expand = 2;

  std::size_t d_inner() const { return expand * d_model; }
  /// ceil(d_model / 16), the low-rank width of the step-size projection.
  std::size_t dt_rank() const { return (d_model + 15) / 16; }
};

/// Stable initialization: A entries -(1..d_state) per channel, step-size bias
/// placing softplus(bias) log-uniformly in [1e-3, 0.1], linear weights
/// uniform in +-1/sqrt(fan_in), D = 1, identity pre-norm.
template <typename T>
BlockParams<T> init_block(const BlockShape& shape, Rng& rng);

/// Named parameter handles in declaration order.
template <typename T>
void collect_block_params(BlockParams<T>& block, const std::string& prefix,
                          std::vector<std::pair<std::string, Tensor<T>>>& out);

template <typename T>
struct SelectiveParams {
  Tensor<T> b;      // [steps, d_state]
  Tensor<T> c;      // [steps, d_state]
  Tensor<T> delta;  // [steps, d_inner], strictly positive
};

/// B_t, C_t linear in x_t; delta_t = softplus(dt_proj(dt_low(x_t)) + bias).
template <typename T>
SelectiveParams<T> selective_params(const Tensor<T>& x, const SsmParams<T>& params);

/// Sequential scan with h_0 = 0:
///   h_t = exp(delta_t * A) h_{t-1} + b_bar(delta_t, A) * B_t * u_t
///   y_t = C_t . h_t + D * u_t
/// u, delta: [steps, d_inner]; a_log: [d_inner, d_state]; b, c: [steps, d_state].
template <typename T>
Tensor<T> selective_scan(const Tensor<T>& u, const Tensor<T>& delta, const Tensor<T>& a_log,
                         const Tensor<T>& b, const Tensor<T>& c, const Tensor<T>& d_skip);

/// ssm_scan: selective parameters from u, then selective_scan.
template <typename T>
Tensor<T> ssm_scan(const Tensor<T>& u, const SsmParams<T>& params);

/// h + dropout(mixer(layer_norm(h))), where the mixer is
/// in_proj -> [signal | gate]; signal -> causal conv -> silu -> ssm_scan;
/// times silu(gate); out_proj.
template <typename T>
Tensor<T> block_forward(const Tensor<T>& h, const BlockParams<T>& block, double dropout_rate,
                        bool training, Rng& rng);

inline constexpr double kNormEps = 1e-5;

}  // namespace mambagaze::ssm
