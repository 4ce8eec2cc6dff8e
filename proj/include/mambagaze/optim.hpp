// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstdint>
#include <vector>

#include "mambagaze/tensor.hpp"

namespace mambagaze::nx {

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// AdamW with decoupled weight decay and bias-corrected moments. Moment
/// buffers are created on the first step and pinned to that parameter layout.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  /// Parameters without a gradient buffer are treated as having zero gradient.
  void step(std::vector<Tensor<T>>& params);

  std::uint64_t steps() const noexcept { return step_; }
  const AdamWOptions& options() const noexcept { return options_; }
  const std::vector<std::vector<T>>& first_moments() const noexcept { return m_; }
  const std::vector<std::vector<T>>& second_moments() const noexcept { return v_; }

 private:
  AdamWOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

/// Global L2 norm over all gradient buffers.
template <typename T>
double grad_norm(const std::vector<Tensor<T>>& params);

/// Rescales all gradients when their global norm exceeds max_norm.
/// Returns the factor applied (1 when unchanged).
template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& params, double max_norm);

template <typename T>
void zero_grad(std::vector<Tensor<T>>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace mambagaze::nx
