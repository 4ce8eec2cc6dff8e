// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mambagaze::nx {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
ConstMapMat<T> view(const std::vector<T>& buf, std::size_t rows, std::size_t cols) {
  return ConstMapMat<T>(buf.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

template <typename T>
MapMat<T> view(std::vector<T>& buf, std::size_t rows, std::size_t cols) {
  return MapMat<T>(buf.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}

void require_rank(const Shape& shape, std::size_t rank, const char* op) {
  require(shape.size() == rank, ErrorCode::dimension,
          std::string(op) + " expects rank " + std::to_string(rank) + ", got " +
              shape_string(shape));
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  require(a == b, ErrorCode::dimension,
          std::string(op) + " shape mismatch: " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
void accumulate(Node<T>& target, const std::vector<T>& delta) {
  if (!target.requires_grad) return;
  auto& g = target.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

}  // namespace

double stable_sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

const char* unary_name(Unary fn) noexcept {
  switch (fn) {
    case Unary::tanh: return "tanh";
    case Unary::sigmoid: return "sigmoid";
    case Unary::softplus: return "softplus";
    case Unary::exp: return "exp";
    case Unary::log1p: return "log1p";
    case Unary::silu: return "silu";
  }
  return "?";
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 2, "matmul");
  require_rank(b.shape(), 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, ErrorCode::dimension,
          "matmul inner dimensions disagree: " + shape_string(a.shape()) + " x " +
              shape_string(b.shape()));
  std::vector<T> out(m * n);
  view(out, m, n).noalias() = view(a.node()->data, m, k) * view(b.node()->data, k, n);
  return detail::make_op<T>("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto dy = view(self.grad, m, n);
    if (pa.requires_grad) {
      view(pa.grad_buffer(), m, k).noalias() += dy * view(pb.data, k, n).transpose();
    }
    if (pb.requires_grad) {
      view(pb.grad_buffer(), k, n).noalias() += view(pa.data, m, k).transpose() * dy;
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(x.shape(), 2, "linear");
  require_rank(weight.shape(), 2, "linear");
  const std::size_t n = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  require(weight.dim(1) == in, ErrorCode::dimension,
          "linear weight " + shape_string(weight.shape()) + " does not accept input " +
              shape_string(x.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) {
    require(bias.shape() == Shape{out_dim}, ErrorCode::dimension,
            "linear bias " + shape_string(bias.shape()) + " for output width " +
                std::to_string(out_dim));
  }
  std::vector<T> out(n * out_dim);
  auto y = view(out, n, out_dim);
  y.noalias() = view(x.node()->data, n, in) * view(weight.node()->data, out_dim, in).transpose();
  if (has_bias) {
    const auto& b = bias.node()->data;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < out_dim; ++c) out[r * out_dim + c] += b[c];
  }
  std::vector<Tensor<T>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return detail::make_op<T>(
      "linear", {n, out_dim}, std::move(out), std::move(inputs),
      [n, in, out_dim, has_bias](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto dy = view(self.grad, n, out_dim);
        if (px.requires_grad) {
          view(px.grad_buffer(), n, in).noalias() += dy * view(pw.data, out_dim, in);
        }
        if (pw.requires_grad) {
          view(pw.grad_buffer(), out_dim, in).noalias() += dy.transpose() * view(px.data, n, in);
        }
        if (has_bias && self.parents[2]->requires_grad) {
          auto& gb = self.parents[2]->grad_buffer();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < out_dim; ++c) gb[c] += self.grad[r * out_dim + c];
        }
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return detail::make_op<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate(*self.parents[1], self.grad);
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return detail::make_op<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    accumulate(*self.parents[0], self.grad);
    auto& pb = *self.parents[1];
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return detail::make_op<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return detail::make_op<T>("scale", a.shape(), std::move(out), {a}, [factor](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& g = pa.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> apply_unary(const Tensor<T>& x, Unary fn) {
  const auto& in = x.node()->data;
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = static_cast<double>(in[i]);
    double r = 0;
    switch (fn) {
      case Unary::tanh: r = std::tanh(v); break;
      case Unary::sigmoid: r = stable_sigmoid(v); break;
      case Unary::softplus: r = stable_softplus(v); break;
      case Unary::exp: r = std::exp(v); break;
      case Unary::log1p:
        if (!(v >= 0.0)) {
          fail(ErrorCode::numeric_domain, "log1p applied to negative value " +
                                              std::to_string(v) + " at index " +
                                              std::to_string(i));
        }
        r = std::log1p(v);
        break;
      case Unary::silu: r = v * stable_sigmoid(v); break;
    }
    out[i] = static_cast<T>(r);
  }
  return detail::make_op<T>(unary_name(fn), x.shape(), std::move(out), {x}, [fn](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& g = px.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = static_cast<double>(px.data[i]);
      const double y = static_cast<double>(self.data[i]);
      double d = 0;
      switch (fn) {
        case Unary::tanh: d = 1.0 - y * y; break;
        case Unary::sigmoid: d = y * (1.0 - y); break;
        case Unary::softplus: d = stable_sigmoid(v); break;
        case Unary::exp: d = y; break;
        case Unary::log1p: d = 1.0 / (1.0 + v); break;
        case Unary::silu: {
          const double s = stable_sigmoid(v);
          d = s * (1.0 + v * (1.0 - s));
          break;
        }
      }
      g[i] += static_cast<T>(static_cast<double>(self.grad[i]) * d);
    }
  });
}

namespace {

// Addresses a rank-1/2 tensor as `outer` lines of `len` elements spaced `stride`.
struct AxisLayout {
  std::size_t outer, len, stride, outer_step;
  std::size_t index(std::size_t line, std::size_t j) const {
    return line * outer_step + j * stride;
  }
};

AxisLayout axis_layout(const Shape& shape, std::size_t axis, const char* op) {
  require(shape.size() == 1 || shape.size() == 2, ErrorCode::dimension,
          std::string(op) + " supports rank 1 or 2, got " + shape_string(shape));
  require(axis < shape.size(), ErrorCode::dimension,
          std::string(op) + " axis " + std::to_string(axis) + " out of range for " +
              shape_string(shape));
  if (shape.size() == 1) return {1, shape[0], 1, 0};
  if (axis == 1) return {shape[0], shape[1], 1, shape[1]};
  return {shape[1], shape[0], shape[1], 1};
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisLayout lay = axis_layout(x.shape(), axis, "softmax");
  const auto& in = x.node()->data;
  check_finite<T>(in, "softmax input");
  std::vector<T> out(in.size());
  for (std::size_t line = 0; line < lay.outer; ++line) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lay.len; ++j)
      peak = std::max(peak, static_cast<double>(in[lay.index(line, j)]));
    double total = 0;
    for (std::size_t j = 0; j < lay.len; ++j) {
      const double e = std::exp(static_cast<double>(in[lay.index(line, j)]) - peak);
      out[lay.index(line, j)] = static_cast<T>(e);
      total += e;
    }
    for (std::size_t j = 0; j < lay.len; ++j) out[lay.index(line, j)] /= static_cast<T>(total);
  }
  return detail::make_op<T>("softmax", x.shape(), std::move(out), {x}, [lay](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t line = 0; line < lay.outer; ++line) {
      double dot = 0;
      for (std::size_t j = 0; j < lay.len; ++j) {
        const auto i = lay.index(line, j);
        dot += static_cast<double>(self.grad[i]) * self.data[i];
      }
      for (std::size_t j = 0; j < lay.len; ++j) {
        const auto i = lay.index(line, j);
        g[i] += static_cast<T>(self.data[i] * (self.grad[i] - dot));
      }
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps) {
  require(x.rank() == 1 || x.rank() == 2, ErrorCode::dimension,
          "layer_norm supports rank 1 or 2, got " + shape_string(x.shape()));
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / std::max<std::size_t>(width, 1);
  require(width >= 1, ErrorCode::dimension, "layer_norm over an empty axis");
  require(gamma.shape() == Shape{width} && beta.shape() == Shape{width}, ErrorCode::dimension,
          "layer_norm affine parameters must have shape [" + std::to_string(width) + "]");

  const auto& in = x.node()->data;
  const auto& gm = gamma.node()->data;
  const auto& bt = beta.node()->data;
  std::vector<T> out(in.size());
  std::vector<double> xhat(in.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = in.data() + r * width;
    double mu = 0;
    for (std::size_t c = 0; c < width; ++c) mu += row[c];
    mu /= static_cast<double>(width);
    double var = 0;
    for (std::size_t c = 0; c < width; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(width);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < width; ++c) {
      const double n = (row[c] - mu) * inv_std[r];
      xhat[r * width + c] = n;
      out[r * width + c] = static_cast<T>(n * gm[c] + bt[c]);
    }
  }
  return detail::make_op<T>(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [rows, width, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto& gm = pg.data;
        if (pg.requires_grad) {
          auto& g = pg.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < width; ++c)
              g[c] += static_cast<T>(self.grad[r * width + c] * xhat[r * width + c]);
        }
        if (pb.requires_grad) {
          auto& g = pb.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < width; ++c) g[c] += self.grad[r * width + c];
        }
        if (px.requires_grad) {
          auto& g = px.grad_buffer();
          const double inv_w = 1.0 / static_cast<double>(width);
          for (std::size_t r = 0; r < rows; ++r) {
            double sum_d = 0, sum_dx = 0;
            for (std::size_t c = 0; c < width; ++c) {
              const double d = static_cast<double>(self.grad[r * width + c]) * gm[c];
              sum_d += d;
              sum_dx += d * xhat[r * width + c];
            }
            for (std::size_t c = 0; c < width; ++c) {
              const double d = static_cast<double>(self.grad[r * width + c]) * gm[c];
              g[r * width + c] += static_cast<T>(
                  inv_std[r] * (d - sum_d * inv_w - xhat[r * width + c] * sum_dx * inv_w));
            }
          }
        }
      });
}

template <typename T>
Tensor<T> depthwise_conv1d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require_rank(x.shape(), 2, "depthwise_conv1d");
  require_rank(kernel.shape(), 2, "depthwise_conv1d kernel");
  const std::size_t steps = x.dim(0), channels = x.dim(1), width = kernel.dim(0);
  require(width >= 1 && width <= kMaxConvWidth, ErrorCode::config,
          "depthwise_conv1d kernel width " + std::to_string(width) + " outside [1, " +
              std::to_string(kMaxConvWidth) + "]");
  require(kernel.dim(1) == channels, ErrorCode::dimension,
          "depthwise_conv1d kernel " + shape_string(kernel.shape()) + " for input " +
              shape_string(x.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) {
    require(bias.shape() == Shape{channels}, ErrorCode::dimension,
            "depthwise_conv1d bias must have shape [" + std::to_string(channels) + "]");
  }
  const auto& in = x.node()->data;
  const auto& k = kernel.node()->data;
  std::vector<T> out(in.size(), T(0));
  for (std::size_t t = 0; t < steps; ++t) {
    T* row = out.data() + t * channels;
    if (has_bias) {
      const auto& b = bias.node()->data;
      for (std::size_t c = 0; c < channels; ++c) row[c] = b[c];
    }
    const std::size_t taps = std::min(width, t + 1);
    for (std::size_t j = 0; j < taps; ++j) {
      const T* src = in.data() + (t - j) * channels;
      const T* kj = k.data() + j * channels;
      for (std::size_t c = 0; c < channels; ++c) row[c] += kj[c] * src[c];
    }
  }
  std::vector<Tensor<T>> inputs{x, kernel};
  if (has_bias) inputs.push_back(bias);
  return detail::make_op<T>(
      "depthwise_conv1d", x.shape(), std::move(out), std::move(inputs),
      [steps, channels, width, has_bias](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pk = *self.parents[1];
        const auto& dy = self.grad;
        if (px.requires_grad) {
          auto& g = px.grad_buffer();
          for (std::size_t t = 0; t < steps; ++t) {
            const std::size_t taps = std::min(width, t + 1);
            for (std::size_t j = 0; j < taps; ++j)
              for (std::size_t c = 0; c < channels; ++c)
                g[(t - j) * channels + c] += pk.data[j * channels + c] * dy[t * channels + c];
          }
        }
        if (pk.requires_grad) {
          auto& g = pk.grad_buffer();
          for (std::size_t t = 0; t < steps; ++t) {
            const std::size_t taps = std::min(width, t + 1);
            for (std::size_t j = 0; j < taps; ++j)
              for (std::size_t c = 0; c < channels; ++c)
                g[j * channels + c] += px.data[(t - j) * channels + c] * dy[t * channels + c];
          }
        }
        if (has_bias && self.parents[2]->requires_grad) {
          auto& g = self.parents[2]->grad_buffer();
          for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t c = 0; c < channels; ++c) g[c] += dy[t * channels + c];
        }
      });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_rank(x.shape(), 2, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  require(begin <= end && end <= cols, ErrorCode::dimension,
          "slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
              ") out of range for " + shape_string(x.shape()));
  const std::size_t width = end - begin;
  const auto& in = x.node()->data;
  std::vector<T> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(in.data() + r * cols + begin, width, out.data() + r * width);
  return detail::make_op<T>("slice_cols", {rows, width}, std::move(out), {x},
                            [rows, cols, begin, width](Node<T>& self) {
                              auto& g = self.parents[0]->grad_buffer();
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t c = 0; c < width; ++c)
                                  g[r * cols + begin + c] += self.grad[r * width + c];
                            });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), ErrorCode::dimension, "concat of zero tensors");
  std::vector<std::size_t> offsets;
  std::vector<T> out;
  for (const auto& p : parts) {
    require_rank(p.shape(), 1, "concat");
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  const std::size_t total = out.size();
  return detail::make_op<T>("concat", {total}, std::move(out), parts,
                            [offsets](Node<T>& self) {
                              for (std::size_t p = 0; p < self.parents.size(); ++p) {
                                auto& parent = *self.parents[p];
                                if (!parent.requires_grad) continue;
                                auto& g = parent.grad_buffer();
                                for (std::size_t i = 0; i < g.size(); ++i)
                                  g[i] += self.grad[offsets[p] + i];
                              }
                            });
}

template <typename T>
Tensor<T> flip_rows(const Tensor<T>& x) {
  require(x.rank() >= 1, ErrorCode::dimension, "flip_rows on a rank-0 tensor");
  const std::size_t rows = x.dim(0);
  const std::size_t stride = rows ? x.size() / rows : 0;
  const auto& in = x.node()->data;
  std::vector<T> out(in.size());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(in.data() + (rows - 1 - r) * stride, stride, out.data() + r * stride);
  return detail::make_op<T>("flip_rows", x.shape(), std::move(out), {x},
                            [rows, stride](Node<T>& self) {
                              auto& g = self.parents[0]->grad_buffer();
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t c = 0; c < stride; ++c)
                                  g[(rows - 1 - r) * stride + c] += self.grad[r * stride + c];
                            });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(numel(shape) == x.size(), ErrorCode::dimension,
          "cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  return detail::make_op<T>("reshape", std::move(shape), x.node()->data, {x},
                            [](Node<T>& self) { accumulate(*self.parents[0], self.grad); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double total = 0;
  for (T v : x.data()) total += v;
  return detail::make_op<T>("sum", {1}, {static_cast<T>(total)}, {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  require(x.size() > 0, ErrorCode::dimension, "mean of an empty tensor");
  return scale(sum(x), static_cast<T>(1.0 / static_cast<double>(x.size())));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorCode::config,
          "dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  return detail::make_op<T>("dropout", x.shape(), std::move(out), {x},
                            [mask = std::move(mask)](Node<T>& self) {
                              auto& g = self.parents[0]->grad_buffer();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                g[i] += self.grad[i] * mask[i];
                            });
}

double grad_check(const std::function<Tensor64()>& loss_fn, const std::vector<Tensor64>& params,
                  double step) {
  std::vector<Tensor64> handles = params;
  for (auto& p : handles) p.zero_grad();
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  for (const auto& p : handles) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.size(), 0.0);
    }
  }

  NoGradGuard no_grad;
  double worst = 0;
  for (std::size_t k = 0; k < handles.size(); ++k) {
    auto values = handles[k].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss_fn().item();
      values[i] = saved - step;
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double a = analytic[k][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

#define MG_INSTANTIATE_OPS(T)                                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> scale(const Tensor<T>&, T);                                         \
  template Tensor<T> apply_unary(const Tensor<T>&, Unary);                               \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                             \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                double);                                                 \
  template Tensor<T> depthwise_conv1d(const Tensor<T>&, const Tensor<T>&,                \
                                      const Tensor<T>&);                                 \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);             \
  template Tensor<T> concat(const std::vector<Tensor<T>>&);                              \
  template Tensor<T> flip_rows(const Tensor<T>&);                                        \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                   \
  template Tensor<T> sum(const Tensor<T>&);                                              \
  template Tensor<T> mean(const Tensor<T>&);                                             \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, Rng&);

MG_INSTANTIATE_OPS(float)
MG_INSTANTIATE_OPS(double)

#undef MG_INSTANTIATE_OPS

}  // namespace mambagaze::nx
