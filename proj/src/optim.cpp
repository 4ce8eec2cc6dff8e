// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/optim.hpp"

#include <cmath>

namespace mambagaze::nx {

template <typename T>
void AdamW<T>::step(std::vector<Tensor<T>>& params) {
  if (step_ == 0 && m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), T(0));
      v_.emplace_back(p.size(), T(0));
    }
  }
  require(params.size() == m_.size(), ErrorCode::contract,
          "AdamW state holds " + std::to_string(m_.size()) + " parameters, step got " +
              std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    require(params[k].size() == m_[k].size(), ErrorCode::contract,
            "AdamW moment buffer " + std::to_string(k) + " has " +
                std::to_string(m_[k].size()) + " entries, parameter has " +
                std::to_string(params[k].size()));
  }

  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double decay = 1.0 - options_.lr * options_.weight_decay;

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_data();
    const bool has_grad = params[k].has_grad();
    const auto grad = params[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? static_cast<double>(grad[i]) : 0.0;
      m[i] = static_cast<T>(b1 * m[i] + (1 - b1) * g);
      v[i] = static_cast<T>(b2 * v[i] + (1 - b2) * g * g);
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      double p = static_cast<double>(values[i]) * decay;
      p -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
      values[i] = static_cast<T>(p);
    }
  }
}

template <typename T>
double grad_norm(const std::vector<Tensor<T>>& params) {
  double sq = 0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (!(norm > max_norm)) return 1.0;
  const double factor = max_norm / norm;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    // Gradients live on the node; scale them in place.
    for (auto& g : p.node()->grad) g = static_cast<T>(g * factor);
  }
  return factor;
}

template class AdamW<float>;
template class AdamW<double>;
template double grad_norm(const std::vector<Tensor<float>>&);
template double grad_norm(const std::vector<Tensor<double>>&);
template double clip_grad_norm(std::vector<Tensor<float>>&, double);
template double clip_grad_norm(std::vector<Tensor<double>>&, double);

}  // namespace mambagaze::nx
