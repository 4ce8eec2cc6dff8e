// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mambagaze/error.hpp"

/// Dense tensors with a reverse-mode tape.
///
/// A Tensor is a shared handle to a node. Operations on tensors that require
/// gradients record a backward closure on the result node; backward() walks
/// the recorded graph in reverse topological order. Leaf gradients accumulate
/// across backward() calls until zero_grad() is called.
namespace mambagaze::nx {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

enum class Precision { f32, f64 };

const char* precision_name(Precision p) noexcept;
Precision parse_precision(const std::string& name);

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<T>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> data(numel(shape), T(0));
    return from(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    std::vector<T> data(numel(shape), value);
    return from(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false) {
    require(numel(shape) == data.size(), ErrorCode::dimension,
            "tensor data length " + std::to_string(data.size()) +
                " does not match shape " + shape_string(shape));
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from(Shape{1}, std::vector<T>{value}, requires_grad);
  }

  bool defined() const noexcept { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  /// Mutable access for optimizers and initializers. Mutating a tensor that
  /// is already part of a recorded graph invalidates that graph.
  std::span<T> mutable_data() { return node_->data; }

  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() { node_->grad.clear(); }

  T item() const {
    require(size() == 1, ErrorCode::contract,
            "item() on tensor of shape " + shape_string(shape()));
    return node_->data[0];
  }
  T operator[](std::size_t i) const { return node_->data[i]; }
  T at(std::size_t row, std::size_t col) const {
    return node_->data[row * node_->shape.back() + col];
  }

  /// Copies the values into a new leaf without gradient tracking.
  Tensor detach() const { return from(shape(), node_->data, false); }
  /// Copies the values into a new leaf that keeps the requires_grad flag.
  Tensor clone() const { return from(shape(), node_->data, requires_grad()); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

/// Throws numeric_domain naming `op` if any value is NaN or infinite.
template <typename T>
void check_finite(std::span<const T> values, const char* op);

namespace detail {

/// Builds an operation result. The backward closure is attached only when
/// recording is enabled and at least one input requires gradients.
template <typename T>
Tensor<T> make_op(const char* op, Shape shape, std::vector<T> data,
                  std::vector<Tensor<T>> inputs,
                  std::function<void(Node<T>&)> backward_fn) {
  check_finite<T>(data, op);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool track = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) track = track || in.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->parents.reserve(inputs.size());
    for (const auto& in : inputs) node->parents.push_back(in.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

}  // namespace detail

/// Fills d(loss)/d(leaf) into every reachable leaf that requires gradients.
/// Intermediate gradients are recomputed from scratch on every call, so
/// repeated calls add exactly one more copy of the gradient to each leaf.
template <typename T>
void backward(const Tensor<T>& loss);

}  // namespace mambagaze::nx
