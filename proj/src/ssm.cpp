// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/ssm.hpp"

#include <cmath>
#include <type_traits>

#include <Eigen/Core>

namespace mambagaze::ssm {

using nx::Node;
using nx::Shape;
using nx::Unary;

Discretized discretize_zoh(double a, double b, double step) {
  require(step > 0.0, ErrorCode::contract,
          "discretize_zoh needs a positive step, got " + std::to_string(step));
  const double x = step * a;
  const double a_bar = std::exp(x);
  const double gain = std::abs(x) < kZohLimit ? step : std::expm1(x) / a;
  return {a_bar, gain * b};
}

double zoh_gain_da(double a, double step) {
  // gain(a) = expm1(step*a)/a; d/da = step^2 * (x e^x - expm1(x)) / x^2.
  const double x = step * a;
  if (std::abs(x) < 1e-2) {
    return step * step *
           (0.5 + x * (1.0 / 3 + x * (1.0 / 8 + x * (1.0 / 30 + x * (1.0 / 144 + x * (1.0 / 840))))));
  }
  return step * step * (x * std::exp(x) - std::expm1(x)) / (x * x);
}

namespace {

// Per-timestep discretization over all (channel, state) pairs at once:
// x = step * a, decay = exp(x), gain = expm1(x) / a. Vectorized through
// Eigen; the exp runs in single precision for float models.
template <typename T>
struct ZohBatch {
  Eigen::ArrayXd x, step, decay, gain, gain_da;
  Eigen::ArrayXf buf;

  explicit ZohBatch(std::size_t n) : x(n), step(n), decay(n), gain(n), gain_da(n), buf(n) {}

  void compute(const Eigen::ArrayXd& a) {
    if constexpr (std::is_same_v<T, float>) {
      buf = x.cast<float>().exp();
      decay = buf.cast<double>();
    } else {
      decay = x.exp();
    }
    const Eigen::ArrayXd series =
        step * (1.0 + x * (1.0 / 2 + x * (1.0 / 6 + x * (1.0 / 24 + x * (1.0 / 120 + x * (1.0 / 720))))));
    gain = (x.abs() < 1e-2).select(series, (decay - 1.0) / a);
  }

  // d gain / d a = (step * decay - gain) / a, by series where that cancels.
  void compute_da(const Eigen::ArrayXd& a) {
    const Eigen::ArrayXd series =
        step * step *
        (0.5 + x * (1.0 / 3 + x * (1.0 / 8 + x * (1.0 / 30 + x * (1.0 / 144 + x * (1.0 / 840))))));
    gain_da = (x.abs() < 1e-2).select(series, (step * decay - gain) / a);
  }
};

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<T> data(nx::numel(shape));
  for (auto& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

}  // namespace

template <typename T>
BlockParams<T> init_block(const BlockShape& shape, Rng& rng) {
  const std::size_t dm = shape.d_model, di = shape.d_inner(), ds = shape.d_state;
  const std::size_t dr = shape.dt_rank(), dc = shape.d_conv;
  require(dm >= 1 && ds >= 1 && shape.expand >= 1, ErrorCode::config,
          "block extents must be positive");
  require(dc >= 1 && dc <= nx::kMaxConvWidth, ErrorCode::config,
          "d_conv must lie in [1, " + std::to_string(nx::kMaxConvWidth) + "]");
  BlockParams<T> b;
  b.norm_gamma = Tensor<T>::full({dm}, T(1), true);
  b.norm_beta = Tensor<T>::zeros({dm}, true);
  b.in_proj = uniform_tensor<T>({2 * di, dm}, 1.0 / std::sqrt(double(dm)), rng);
  b.conv_kernel = uniform_tensor<T>({dc, di}, 1.0 / std::sqrt(double(dc)), rng);
  b.conv_bias = uniform_tensor<T>({di}, 1.0 / std::sqrt(double(dc)), rng);
  b.ssm.x_proj = uniform_tensor<T>({dr + 2 * ds, di}, 1.0 / std::sqrt(double(di)), rng);
  b.ssm.dt_proj = uniform_tensor<T>({di, dr}, 1.0 / std::sqrt(double(dr)), rng);

  std::vector<T> bias(di);
  for (auto& v : bias) {
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(0.1)));
    v = static_cast<T>(dt + std::log(-std::expm1(-dt)));  // softplus^-1(dt)
  }
  b.ssm.dt_bias = Tensor<T>::from({di}, std::move(bias), true);

  std::vector<T> a_log(di * ds);
  for (std::size_t c = 0; c < di; ++c)
    for (std::size_t n = 0; n < ds; ++n) a_log[c * ds + n] = static_cast<T>(std::log(double(n + 1)));
  b.ssm.a_log = Tensor<T>::from({di, ds}, std::move(a_log), true);
  b.ssm.d_skip = Tensor<T>::full({di}, T(1), true);
  b.out_proj = uniform_tensor<T>({dm, di}, 1.0 / std::sqrt(double(di)), rng);
  return b;
}

template <typename T>
void collect_block_params(BlockParams<T>& b, const std::string& prefix,
                          std::vector<std::pair<std::string, Tensor<T>>>& out) {
  out.emplace_back(prefix + "norm.gamma", b.norm_gamma);
  out.emplace_back(prefix + "norm.beta", b.norm_beta);
  out.emplace_back(prefix + "in_proj.weight", b.in_proj);
  out.emplace_back(prefix + "conv.weight", b.conv_kernel);
  out.emplace_back(prefix + "conv.bias", b.conv_bias);
  out.emplace_back(prefix + "ssm.x_proj.weight", b.ssm.x_proj);
  out.emplace_back(prefix + "ssm.dt_proj.weight", b.ssm.dt_proj);
  out.emplace_back(prefix + "ssm.dt_proj.bias", b.ssm.dt_bias);
  out.emplace_back(prefix + "ssm.a_log", b.ssm.a_log);
  out.emplace_back(prefix + "ssm.d", b.ssm.d_skip);
  out.emplace_back(prefix + "out_proj.weight", b.out_proj);
}

template <typename T>
SelectiveParams<T> selective_params(const Tensor<T>& x, const SsmParams<T>& p) {
  const std::size_t dr = p.dt_rank(), ds = p.d_state();
  const auto proj = nx::linear(x, p.x_proj);
  const auto dt_low = nx::slice_cols(proj, 0, dr);
  SelectiveParams<T> out;
  out.b = nx::slice_cols(proj, dr, dr + ds);
  out.c = nx::slice_cols(proj, dr + ds, dr + 2 * ds);
  out.delta = nx::apply_unary(nx::linear(dt_low, p.dt_proj, p.dt_bias), Unary::softplus);
  return out;
}

template <typename T>
Tensor<T> selective_scan(const Tensor<T>& u, const Tensor<T>& delta, const Tensor<T>& a_log,
                         const Tensor<T>& b, const Tensor<T>& c, const Tensor<T>& d_skip) {
  require(u.rank() == 2 && a_log.rank() == 2, ErrorCode::dimension,
          "selective_scan expects u [steps, d_inner] and a_log [d_inner, d_state]");
  const std::size_t steps = u.dim(0), di = u.dim(1), ds = a_log.dim(1);
  require(delta.shape() == u.shape(), ErrorCode::dimension, "delta must match u");
  require(a_log.dim(0) == di, ErrorCode::dimension, "a_log rows must equal d_inner");
  require(b.shape() == Shape{steps, ds} && c.shape() == Shape{steps, ds}, ErrorCode::dimension,
          "B and C must be [steps, d_state]");
  require(d_skip.shape() == Shape{di}, ErrorCode::dimension, "D must be [d_inner]");

  const auto& U = u.node()->data;
  const auto& Dl = delta.node()->data;
  const auto& AL = a_log.node()->data;
  const auto& Bm = b.node()->data;
  const auto& Cm = c.node()->data;
  const auto& Ds = d_skip.node()->data;

  Eigen::ArrayXd a(di * ds);
  for (std::size_t i = 0; i < di * ds; ++i) a[i] = -std::exp(static_cast<double>(AL[i]));

  const bool keep_states = nx::grad_enabled() &&
                           (u.requires_grad() || delta.requires_grad() ||
                            a_log.requires_grad() || b.requires_grad() || c.requires_grad() ||
                            d_skip.requires_grad());
  std::vector<T> states;  // h_t for t = 0..steps-1, [steps, di, ds]
  if (keep_states) states.resize(steps * di * ds);

  std::vector<double> h(di * ds, 0.0);
  std::vector<T> y(steps * di);
  ZohBatch<T> zoh(di * ds);
  for (std::size_t t = 0; t < steps; ++t) {
    const T* bt = Bm.data() + t * ds;
    const T* ct = Cm.data() + t * ds;
    for (std::size_t ch = 0; ch < di; ++ch) {
      const double dt = Dl[t * di + ch];
      if (!(dt > 0.0)) {
        fail(ErrorCode::contract,
             "selective_scan step size must be positive (t=" + std::to_string(t) + ")");
      }
      zoh.step.segment(ch * ds, ds).setConstant(dt);
    }
    zoh.x = zoh.step * a;
    zoh.compute(a);
    double* hp = h.data();
    const double* ep = zoh.decay.data();
    const double* gp = zoh.gain.data();
    for (std::size_t ch = 0; ch < di; ++ch) {
      const double ut = U[t * di + ch];
      double* hc = hp + ch * ds;
      const double* ec = ep + ch * ds;
      const double* gc = gp + ch * ds;
      double acc = 0;
      for (std::size_t n = 0; n < ds; ++n) {
        hc[n] = ec[n] * hc[n] + gc[n] * static_cast<double>(bt[n]) * ut;
        acc += static_cast<double>(ct[n]) * hc[n];
      }
      acc += static_cast<double>(Ds[ch]) * ut;
      y[t * di + ch] = static_cast<T>(acc);
      if (keep_states) {
        for (std::size_t n = 0; n < ds; ++n)
          states[(t * di + ch) * ds + n] = static_cast<T>(hc[n]);
      }
    }
    if (!std::isfinite(zoh.decay.sum() + static_cast<double>(y[t * di]))) {
      for (std::size_t ch = 0; ch < di; ++ch)
        if (!std::isfinite(static_cast<double>(y[t * di + ch])))
          fail(ErrorCode::numeric_domain,
               "selective_scan state diverged at timestep " + std::to_string(t));
    }
  }

  return nx::detail::make_op<T>(
      "selective_scan", {steps, di}, std::move(y), {u, delta, a_log, b, c, d_skip},
      [steps, di, ds, a = std::move(a), states = std::move(states)](Node<T>& self) {
        auto& pu = *self.parents[0];
        auto& pdelta = *self.parents[1];
        auto& pa = *self.parents[2];
        auto& pb = *self.parents[3];
        auto& pc = *self.parents[4];
        auto& pd = *self.parents[5];
        const auto& U = pu.data;
        const auto& Dl = pdelta.data;
        const auto& Bm = pb.data;
        const auto& Cm = pc.data;
        const auto& dY = self.grad;

        std::vector<double> du(steps * di, 0.0), ddelta(steps * di, 0.0);
        std::vector<double> da(di * ds, 0.0), dd(di, 0.0);
        std::vector<double> db(steps * ds, 0.0), dc(steps * ds, 0.0);
        std::vector<double> dh(di * ds, 0.0);  // dL/dh_t flowing from later steps

        ZohBatch<T> zoh(di * ds);
        for (std::size_t t = steps; t-- > 0;) {
          for (std::size_t ch = 0; ch < di; ++ch)
            zoh.step.segment(ch * ds, ds).setConstant(static_cast<double>(Dl[t * di + ch]));
          zoh.x = zoh.step * a;
          zoh.compute(a);
          zoh.compute_da(a);
          for (std::size_t ch = 0; ch < di; ++ch) {
            const double dy = dY[t * di + ch];
            const double ut = U[t * di + ch];
            const double dt = Dl[t * di + ch];
            dd[ch] += dy * ut;
            du[t * di + ch] += dy * static_cast<double>(pd.data[ch]);
            double d_delta = 0;
            for (std::size_t n = 0; n < ds; ++n) {
              const std::size_t cn = ch * ds + n;
              const double h_t = states[(t * di + ch) * ds + n];
              const double h_prev = t > 0 ? static_cast<double>(states[((t - 1) * di + ch) * ds + n]) : 0.0;
              const double an = a[cn];
              const double bn = Bm[t * ds + n];
              dc[t * ds + n] += dy * h_t;
              const double g = dh[cn] + dy * static_cast<double>(Cm[t * ds + n]);
              const double e = zoh.decay[cn];
              const double gain = zoh.gain[cn];
              const double dgain_ddt = e;
              const double dgain_da = zoh.gain_da[cn];
              // h_t = e * h_prev + gain * bn * ut
              const double d_e = g * h_prev;
              const double d_gain = g * bn * ut;
              du[t * di + ch] += g * gain * bn;
              db[t * ds + n] += g * gain * ut;
              d_delta += d_e * an * e + d_gain * dgain_ddt;
              da[cn] += d_e * dt * e + d_gain * dgain_da;
              dh[cn] = g * e;
            }
            ddelta[t * di + ch] += d_delta;
          }
        }

        auto add_into = [](Node<T>& node, const std::vector<double>& d) {
          if (!node.requires_grad) return;
          auto& g = node.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(d[i]);
        };
        add_into(pu, du);
        add_into(pdelta, ddelta);
        if (pa.requires_grad) {
          // a = -exp(a_log)  =>  d a_log = d a * a
          auto& g = pa.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(da[i] * a[i]);
        }
        add_into(pb, db);
        add_into(pc, dc);
        add_into(pd, dd);
      });
}

template <typename T>
Tensor<T> ssm_scan(const Tensor<T>& u, const SsmParams<T>& params) {
  const auto sel = selective_params(u, params);
  return selective_scan(u, sel.delta, params.a_log, sel.b, sel.c, params.d_skip);
}

template <typename T>
Tensor<T> block_forward(const Tensor<T>& h, const BlockParams<T>& block, double dropout_rate,
                        bool training, Rng& rng) {
  const std::size_t di = block.ssm.d_inner();
  const auto normed = nx::layer_norm(h, block.norm_gamma, block.norm_beta, kNormEps);
  const auto xz = nx::linear(normed, block.in_proj);
  const auto signal = nx::slice_cols(xz, 0, di);
  const auto gate = nx::slice_cols(xz, di, 2 * di);
  const auto conv = nx::apply_unary(
      nx::depthwise_conv1d(signal, block.conv_kernel, block.conv_bias), Unary::silu);
  const auto scanned = ssm_scan(conv, block.ssm);
  const auto gated = nx::mul(scanned, nx::apply_unary(gate, Unary::silu));
  const auto mixed = nx::linear(gated, block.out_proj);
  return nx::add(h, nx::dropout(mixed, dropout_rate, training, rng));
}

#define MG_INSTANTIATE_SSM(T)                                                                \
  template BlockParams<T> init_block<T>(const BlockShape&, Rng&);                            \
  template void collect_block_params<T>(BlockParams<T>&, const std::string&,                 \
                                        std::vector<std::pair<std::string, Tensor<T>>>&);    \
  template SelectiveParams<T> selective_params<T>(const Tensor<T>&, const SsmParams<T>&);    \
  template Tensor<T> selective_scan<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                       const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> ssm_scan<T>(const Tensor<T>&, const SsmParams<T>&);                     \
  template Tensor<T> block_forward<T>(const Tensor<T>&, const BlockParams<T>&, double, bool, \
                                      Rng&);

MG_INSTANTIATE_SSM(float)
MG_INSTANTIATE_SSM(double)

#undef MG_INSTANTIATE_SSM

}  // namespace mambagaze::ssm
