// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/tensor.hpp"

#include <cmath>
#include <unordered_set>

namespace mambagaze {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::numeric_domain: return "numeric_domain";
    case ErrorCode::contract: return "contract";
    case ErrorCode::config: return "config";
    case ErrorCode::schema: return "schema";
    case ErrorCode::empty_recording: return "empty_recording";
    case ErrorCode::corruption: return "corruption";
    case ErrorCode::degenerate_fold: return "degenerate_fold";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::io: return "io";
    case ErrorCode::usage: return "usage";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace mambagaze

namespace mambagaze::nx {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

const char* precision_name(Precision p) noexcept {
  return p == Precision::f32 ? "f32" : "f64";
}

Precision parse_precision(const std::string& name) {
  if (name == "f32" || name == "float32") return Precision::f32;
  if (name == "f64" || name == "float64") return Precision::f64;
  fail(ErrorCode::config, "unknown precision '" + name + "' (expected f32 or f64)");
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() noexcept { return g_grad_enabled; }

template <typename T>
void check_finite(std::span<const T> values, const char* op) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::numeric_domain, std::string("non-finite value produced by ") + op +
                                          " at flat index " + std::to_string(i));
    }
  }
}

template <typename T>
void backward(const Tensor<T>& loss) {
  require(loss.defined() && loss.size() == 1, ErrorCode::contract,
          "backward() needs a scalar loss, got shape " +
              (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  require(loss.requires_grad(), ErrorCode::contract,
          "backward() on a loss that is not connected to any parameter");

  // Iterative post-order DFS; `order` ends with the loss node.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      Node<T>* parent = node->parents[next_parent++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* node : order) {
    if (!node->is_leaf) node->grad.assign(node->data.size(), T(0));
  }
  loss.node()->grad_buffer()[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->is_leaf && node->backward_fn) node->backward_fn(*node);
  }
  for (Node<T>* node : order) {
    if (!node->is_leaf) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

template void check_finite<float>(std::span<const float>, const char*);
template void check_finite<double>(std::span<const double>, const char*);
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace mambagaze::nx
