// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/bench.hpp"
#include "mambagaze/eval.hpp"
#include "mambagaze/ingest.hpp"
#include "mambagaze/metrics.hpp"
#include "mambagaze/model.hpp"
#include "mambagaze/ops.hpp"
#include "mambagaze/ssm.hpp"
#include "mambagaze/synth.hpp"
#include "mambagaze/train.hpp"
#include "mambagaze/xmd.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace mambagaze;
using namespace mambagaze::nx;
using clock_type = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::vector<const xmd::XmdWindow*> pointers(const std::vector<xmd::XmdWindow>& w) {
  std::vector<const xmd::XmdWindow*> out;
  for (const auto& x : w) out.push_back(&x);
  return out;
}

// Shared setup for the learning criteria.
model::ModelConfig smoke_model() {
  model::ModelConfig m;
  m.d_model = 16;
  m.d_state = 8;
  m.layers_per_direction = 1;
  return m;
}

train::TrainConfig smoke_train(std::size_t epochs) {
  train::TrainConfig c;
  c.lr = 3e-3;
  c.batch_size = 16;
  c.max_epochs = epochs;
  c.patience = 10;
  c.val_fraction = 0.1;
  return c;
}

// ---------------------------------------------------------------- 1

Outcome gradient_suite() {
  const auto t0 = clock_type::now();
  Rng rng(101);
  auto rt = [&](Shape s, double scale = 1.0) { return mgtest::random_tensor(rng, s, scale); };
  auto weight = [&](Shape s) { return mgtest::random_tensor(rng, s, 1.0, false); };
  struct Check {
    std::string name;
    double err;
  };
  std::vector<Check> checks;
  auto run = [&](const std::string& name, std::function<Tensor64()> f, std::vector<Tensor64> p) {
    checks.push_back({name, mgtest::fd_relative_error(f, p)});
  };

  {
    auto a = rt({3, 4}), b = rt({4, 2});
    auto w = weight({3, 2});
    run("matmul", [&] { return sum(mul(matmul(a, b), w)); }, {a, b});
  }
  {
    auto x = rt({3, 4}), wt = rt({5, 4}), bias = rt({5});
    auto w = weight({3, 5});
    run("linear", [&] { return sum(mul(linear(x, wt, bias), w)); }, {x, wt, bias});
  }
  {
    auto a = rt({3, 3}), b = rt({3, 3});
    auto w = weight({3, 3});
    run("add", [&] { return sum(mul(add(a, b), w)); }, {a, b});
    run("sub", [&] { return sum(mul(sub(a, b), w)); }, {a, b});
    run("mul", [&] { return sum(mul(mul(a, b), w)); }, {a, b});
    run("scale", [&] { return sum(mul(scale(a, 1.7), w)); }, {a});
  }
  for (Unary fn : {Unary::tanh, Unary::sigmoid, Unary::softplus, Unary::exp, Unary::log1p,
                   Unary::silu}) {
    std::vector<double> v(6);
    for (auto& x : v) x = fn == Unary::log1p ? rng.uniform(0.1, 2.0) : rng.normal();
    auto x = Tensor64::from({2, 3}, v, true);
    auto w = weight({2, 3});
    run(unary_name(fn), [&, fn] { return sum(mul(apply_unary(x, fn), w)); }, {x});
  }
  {
    auto x = rt({3, 4});
    auto w = weight({3, 4});
    run("softmax0", [&] { return sum(mul(softmax(x, 0), w)); }, {x});
    run("softmax1", [&] { return sum(mul(softmax(x, 1), w)); }, {x});
    auto g = rt({4}), b = rt({4});
    run("layer_norm", [&] { return sum(mul(layer_norm(x, g, b, 1e-5), w)); }, {x, g, b});
    auto k = rt({3, 4}), kb = rt({4});
    run("depthwise_conv1d", [&] { return sum(mul(depthwise_conv1d(x, k, kb), w)); }, {x, k, kb});
    auto ws = weight({3, 2});
    run("slice_cols", [&] { return sum(mul(slice_cols(x, 1, 3), ws)); }, {x});
    run("flip_rows", [&] { return sum(mul(flip_rows(x), w)); }, {x});
    auto wr = weight({4, 3});
    run("reshape", [&] { return sum(mul(reshape(x, {4, 3}), wr)); }, {x});
    run("mean", [&] { return mean(mul(x, x)); }, {x});
  }
  {
    auto a = rt({3}), b = rt({2});
    auto w = weight({5});
    run("concat", [&] { return sum(mul(concat<double>({a, b}), w)); }, {a, b});
  }
  {
    const std::size_t T = 7;
    auto u = rt({T, 3});
    std::vector<double> dv(T * 3);
    for (auto& v : dv) v = rng.uniform(0.05, 0.8);
    auto delta = Tensor64::from({T, 3}, dv, true);
    auto a_log = rt({3, 4}, 0.5), b = rt({T, 4}), c = rt({T, 4}), d = rt({3});
    auto w = weight({T, 3});
    run("selective_scan", [&] { return sum(mul(ssm::selective_scan(u, delta, a_log, b, c, d), w)); },
        {u, delta, a_log, b, c, d});
  }
  {
    auto block = ssm::init_block<double>({4, 3, 3, 2}, rng);
    std::vector<std::pair<std::string, Tensor64>> named;
    ssm::collect_block_params(block, "b", named);
    std::vector<Tensor64> params;
    for (auto& [n, t] : named) params.push_back(t);
    auto h = rt({5, 4});
    params.push_back(h);
    auto w = weight({5, 4});
    Rng drop(0);
    run("block_forward", [&] { return sum(mul(ssm::block_forward(h, block, 0.0, false, drop), w)); },
        params);
  }
  {
    model::ModelConfig cfg;
    cfg.input_dim = 6;
    cfg.d_model = 8;
    cfg.d_state = 4;
    cfg.layers_per_direction = 1;
    cfg.dropout = 0.0;
    cfg.seed = 11;
    auto p = model::init_params<double>(cfg);
    auto z = weight({8, 6});
    const std::vector<int> label{1};
    Rng r(0);
    run("end_to_end",
        [&] { return train::weighted_bce(model::predict_window(z, p, false, r).logit, label, 2.0); },
        p.parameters());
    auto hf = rt({8, 8}), hb = rt({8, 8});
    auto pool_params = std::vector<Tensor64>{hf, hb, p.pool_forward.w_a, p.pool_forward.b_a,
                                             p.pool_forward.query, p.head_gamma, p.head_beta,
                                             p.head_w, p.head_b};
    run("attn_pool_head",
        [&] {
          const auto cf = model::attn_pool(hf, p.pool_forward).context;
          const auto cb = model::attn_pool(hb, p.pool_backward).context;
          return model::classify(cf, cb, p).logit;
        },
        pool_params);
  }
  double worst = 0;
  std::string worst_name;
  for (const auto& c : checks)
    if (!(c.err <= worst)) {
      worst = c.err;
      worst_name = c.name;
    }
  const double elapsed = seconds_since(t0);
  const bool pass = worst < 1e-4 && elapsed < 60.0;
  return {pass, std::to_string(checks.size()) + " checks, worst " + worst_name + " " + fmt(worst, 3) +
                    " (< 1e-4), " + fmt(elapsed, 3) + " s (< 60 s)"};
}

// ---------------------------------------------------------------- 2

Outcome zoh_closed_forms() {
  Rng rng(202);
  double worst = 0;
  std::size_t limit_cases = 0;
  for (int i = 0; i < 1000; ++i) {
    double a, step;
    if (i % 10 == 0) {
      // |step * a| below the series cut-off.
      a = -std::exp(rng.uniform(std::log(1e-6), std::log(10.0)));
      const double x = std::exp(rng.uniform(std::log(1e-14), std::log(0.99e-8)));
      step = x / -a;
    } else {
      a = -std::exp(rng.uniform(std::log(1e-3), std::log(20.0)));
      step = std::exp(rng.uniform(std::log(1e-4), std::log(2.0)));
    }
    const double b = rng.normal();
    const long double la = a, ls = step, lb = b, lx = ls * la;
    const long double want_a = std::exp(lx);
    const bool limit = std::fabs(static_cast<double>(lx)) < 1e-8;
    limit_cases += limit;
    const long double want_b = limit ? ls * lb : std::expm1(lx) / la * lb;
    const auto got = ssm::discretize_zoh(a, b, step);
    worst = std::max(worst, static_cast<double>(std::fabs(got.a_bar - want_a)));
    worst = std::max(worst, static_cast<double>(std::fabs(got.b_bar - want_b)));
  }
  return {worst < 1e-12 && limit_cases >= 50,
          "1000 triples (" + std::to_string(limit_cases) + " in the limit branch), max abs error " +
              fmt(worst, 3) + " (< 1e-12)"};
}

// ---------------------------------------------------------------- 3

// Written from the recurrence, independent of the library's batched path.
std::vector<long double> naive_scan(const Tensor64& u, const Tensor64& delta,
                                    const Tensor64& a_log, const Tensor64& b, const Tensor64& c,
                                    const Tensor64& d) {
  const std::size_t T = u.dim(0), D = u.dim(1), N = a_log.dim(1);
  std::vector<long double> y(T * D, 0.0L);
  for (std::size_t ch = 0; ch < D; ++ch) {
    std::vector<long double> h(N, 0.0L);
    for (std::size_t t = 0; t < T; ++t) {
      long double out = d[ch] * static_cast<long double>(u.at(t, ch));
      for (std::size_t n = 0; n < N; ++n) {
        const long double a = -std::exp(static_cast<long double>(a_log.at(ch, n)));
        const long double x = a * delta.at(t, ch);
        const long double gain = std::fabs(x) < 1e-8L ? delta.at(t, ch) : std::expm1(x) / a;
        h[n] = std::exp(x) * h[n] + gain * b.at(t, n) * u.at(t, ch);
        out += c.at(t, n) * h[n];
      }
      y[t * D + ch] = out;
    }
  }
  return y;
}

Outcome scan_oracle() {
  Rng rng(303);
  double worst = 0;
  int cases = 0;
  for (std::size_t T : {1u, 2u, 7u, 16u, 33u, 64u}) {
    for (int rep = 0; rep < 5; ++rep, ++cases) {
      const std::size_t D = 1 + rng.index(6), N = 1 + rng.index(8);
      auto u = mgtest::random_tensor(rng, {T, D}, 1.0, false);
      std::vector<double> dv(T * D);
      for (auto& v : dv) v = std::exp(rng.uniform(std::log(1e-3), std::log(2.0)));
      auto delta = Tensor64::from({T, D}, dv);
      auto a_log = mgtest::random_tensor(rng, {D, N}, 1.0, false);
      auto b = mgtest::random_tensor(rng, {T, N}, 1.0, false);
      auto c = mgtest::random_tensor(rng, {T, N}, 1.0, false);
      auto d = mgtest::random_tensor(rng, {D}, 1.0, false);
      const auto got = ssm::selective_scan(u, delta, a_log, b, c, d);
      const auto want = naive_scan(u, delta, a_log, b, c, d);
      for (std::size_t i = 0; i < want.size(); ++i)
        worst = std::max(worst, static_cast<double>(std::fabs(got[i] - want[i])));
    }
  }
  return {worst < 1e-10,
          std::to_string(cases) + " random cases, T <= 64, max abs error " + fmt(worst, 3) +
              " (< 1e-10)"};
}

// ---------------------------------------------------------------- 4

template <typename F>
double min_seconds(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = clock_type::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

Outcome linear_time() {
  NoGradGuard guard;
  Rng rng(404);
  auto scan_at = [&](std::size_t T) {
    const std::size_t D = 64, N = 16;
    auto u = mgtest::random_tensor(rng, {T, D}, 1.0, false);
    std::vector<double> dv(T * D);
    for (auto& v : dv) v = rng.uniform(0.01, 0.5);
    auto delta = Tensor64::from({T, D}, dv);
    auto a_log = mgtest::random_tensor(rng, {D, N}, 0.5, false);
    auto b = mgtest::random_tensor(rng, {T, N}, 1.0, false);
    auto c = mgtest::random_tensor(rng, {T, N}, 1.0, false);
    auto d = mgtest::random_tensor(rng, {D}, 1.0, false);
    return min_seconds(7, [&] { ssm::selective_scan(u, delta, a_log, b, c, d); });
  };
  const double s1 = scan_at(1024), s4 = scan_at(4096);
  const double scan_ratio = s4 / s1;

  const auto params = model::init_params<float>(model::ModelConfig{});
  auto window = [&](std::size_t T) {
    std::vector<float> v(T * 30);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return Tensor32::from({T, 30}, v);
  };
  const auto z500 = window(500), z1000 = window(1000);
  model::predict(z500, params);
  const double l500 = min_seconds(5, [&] { model::predict(z500, params); });
  const double l1000 = min_seconds(5, [&] { model::predict(z1000, params); });
  const double infer_ratio = l1000 / l500;
  const bool pass = scan_ratio >= 3.0 && scan_ratio <= 6.0 && infer_ratio >= 1.6 && infer_ratio <= 2.6;
  return {pass, "scan 4096/1024 = " + fmt(scan_ratio, 3) + " (in [3, 6]), inference 1000/500 = " +
                    fmt(infer_ratio, 3) + " (in [1.6, 2.6])"};
}

// ---------------------------------------------------------------- 5

Outcome xmd_invariants() {
  xmd::InvariantReport report;
  xmd::PipelineParams pp;
  const std::vector<double> zeros(ingest::kFeatureCount, 0.0);
  const fs::path fixture = mgtest::source_dir() / "fixtures" / "clare_mini";
  std::size_t fixture_participants = 0;
  for (const auto& entry : fs::directory_iterator(fixture)) {
    if (!entry.is_directory()) continue;
    const auto id = entry.path().filename().string();
    auto exp = ingest::parse_recording(entry.path() / "experiment.csv", ingest::SchemaProfile::clare,
                                       id, ingest::SessionKind::experiment);
    auto base = ingest::parse_recording(entry.path() / "baseline.csv", ingest::SchemaProfile::clare,
                                        id, ingest::SessionKind::baseline);
    const auto labels =
        xmd::parse_labels(entry.path() / "labels.csv", pp.label_interval, pp.binarize_threshold);
    const auto r = xmd::process_participant(std::move(exp), std::move(base), labels, pp);
    xmd::check_grid_invariants(r.grid, zeros, report);
    for (const auto& w : r.windows) xmd::check_window_invariants(w, pp.sample_rate, report);
    ++fixture_participants;
  }
  const std::size_t fixture_cells = report.cells_checked;
  synth::SynthSpec spec;
  const auto s = synth::generate_synthetic(spec);
  for (const auto& p : s.participants) xmd::check_grid_invariants(p.grid, zeros, report);
  for (const auto& w : s.windows) xmd::check_window_invariants(w, spec.sample_rate, report);
  const bool pass = report.ok() && report.cells_checked >= 100000 && fixture_participants == 2;
  std::string detail = std::to_string(report.cells_checked) + " cells (" +
                       std::to_string(fixture_cells) + " from the fixture), " +
                       std::to_string(report.violations.size()) + " violations";
  if (!report.ok()) detail += "; first: " + report.violations.front();
  return {pass, detail};
}

// ---------------------------------------------------------------- 6

Outcome causality_and_symmetry() {
  model::ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.d_model = 8;
  cfg.d_state = 4;
  cfg.layers_per_direction = 2;
  cfg.dropout = 0.0;
  cfg.seed = 6;
  auto p = model::init_params<double>(cfg);
  Rng rng(606);
  const std::size_t T = 24, t0 = 11;
  auto z = mgtest::random_tensor(rng, {T, 6}, 1.0, false);
  auto zp_data = std::vector<double>(z.data().begin(), z.data().end());
  for (std::size_t c = 0; c < 6; ++c) zp_data[t0 * 6 + c] += 1.0;
  const auto zp = Tensor64::from({T, 6}, zp_data);
  Rng r(0);
  const auto f1 = model::branch_forward(z, model::Direction::forward, p, false, r);
  const auto f2 = model::branch_forward(zp, model::Direction::forward, p, false, r);
  const auto b1 = model::branch_forward(z, model::Direction::backward, p, false, r);
  const auto b2 = model::branch_forward(zp, model::Direction::backward, p, false, r);
  const std::size_t D = cfg.d_model;
  bool causal = true, reaches = false;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < D; ++c) {
      const std::size_t i = t * D + c;
      if (t < t0) causal = causal && f1[i] == f2[i];
      if (t > t0) causal = causal && b1[i] == b2[i];
      if (t > t0) reaches = reaches || f1[i] != f2[i];
    }

  const auto manual = flip_rows(
      model::run_stack(flip_rows(model::project_input(z, p)), p.backward_blocks, 0.0, false, r));
  bool structural = true;
  for (std::size_t i = 0; i < b1.size(); ++i) structural = structural && b1[i] == manual[i];

  p.backward_blocks = p.forward_blocks;
  std::vector<double> pal(T * 6);
  for (std::size_t t = 0; t < T / 2; ++t)
    for (std::size_t c = 0; c < 6; ++c) {
      const double v = rng.normal();
      pal[t * 6 + c] = v;
      pal[(T - 1 - t) * 6 + c] = v;
    }
  const auto zpal = Tensor64::from({T, 6}, pal);
  const auto fp = flip_rows(model::branch_forward(zpal, model::Direction::forward, p, false, r));
  const auto bp = model::branch_forward(zpal, model::Direction::backward, p, false, r);
  double sym = 0;
  for (std::size_t i = 0; i < bp.size(); ++i) sym = std::max(sym, std::abs(fp[i] - bp[i]));
  const bool pass = causal && reaches && structural && sym < 1e-6;
  return {pass, std::string("causal ") + (causal && reaches ? "yes" : "no") + ", backward == flip(stack(flip)) " +
                    (structural ? "exact" : "differs") + ", palindrome asymmetry " + fmt(sym, 3) +
                    " (< 1e-6)"};
}

// ---------------------------------------------------------------- 7

// Per-window mean of the two pupil value channels.
double pupil_mean(const xmd::XmdWindow& w) {
  const auto l = ingest::index_of(ingest::Feature::pupil_left);
  const auto r = ingest::index_of(ingest::Feature::pupil_right);
  double s = 0;
  for (std::size_t t = 0; t < w.steps; ++t) s += w.at(t, l) + w.at(t, r);
  return s / (2.0 * static_cast<double>(w.steps));
}

// One-feature logistic regression by Newton's method; returns (intercept, slope).
std::pair<double, double> fit_logistic(const std::vector<double>& x, const std::vector<int>& y) {
  double b0 = 0, b1 = 0;
  for (int it = 0; it < 50; ++it) {
    double g0 = 0, g1 = 0, h00 = 1e-9, h01 = 0, h11 = 1e-9;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = stable_sigmoid(b0 + b1 * x[i]);
      const double r = y[i] - p, w = p * (1 - p);
      g0 += r;
      g1 += r * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    // Small ridge keeps separable data finite.
    g1 -= 1e-3 * b1;
    h11 += 1e-3;
    const double det = h00 * h11 - h01 * h01;
    const double d0 = (h11 * g0 - h01 * g1) / det, d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0;
    b1 += d1;
    if (std::abs(d0) + std::abs(d1) < 1e-12) break;
  }
  return {b0, b1};
}

double oracle_loso_accuracy(const std::vector<xmd::XmdWindow>& windows) {
  const auto ids = eval::participants_of(windows);
  double sum = 0;
  for (const auto& held : ids) {
    std::vector<double> x;
    std::vector<int> y;
    for (const auto& w : windows)
      if (w.participant_id != held) {
        x.push_back(pupil_mean(w));
        y.push_back(w.label);
      }
    const auto [b0, b1] = fit_logistic(x, y);
    std::size_t hit = 0, n = 0;
    for (const auto& w : windows)
      if (w.participant_id == held) {
        hit += ((b0 + b1 * pupil_mean(w) >= 0) == (w.label == 1));
        ++n;
      }
    sum += static_cast<double>(hit) / static_cast<double>(n);
  }
  return sum / static_cast<double>(ids.size());
}

Outcome learning_smoke() {
  const auto t0 = clock_type::now();
  synth::SynthSpec spec;
  const auto data = synth::generate_synthetic(spec);
  const double oracle = oracle_loso_accuracy(data.windows);

  const auto ptr = pointers(data.windows);
  const auto full = train::train_fold<float>(ptr, smoke_train(50), smoke_model());
  const auto probs = train::predict_probs(ptr, full.params);
  std::vector<int> labels;
  for (const auto& w : data.windows) labels.push_back(w.label);
  const double train_acc =
      metrics::compute_metrics(probs, labels, full.threshold, full.flip).accuracy;

  const auto splits = eval::make_loso_splits(eval::participants_of(data.windows));
  const auto report = eval::run_protocol<float>(data.windows, splits, smoke_train(30), smoke_model());
  const double loso = report.accuracy.mean;
  const double elapsed = seconds_since(t0);
  const bool pass = data.windows.size() == 240 && oracle >= 0.85 && train_acc >= 0.95 &&
                    full.trace.size() <= 50 && loso >= 0.80 && report.degenerate_folds == 0 &&
                    elapsed < 600.0;
  return {pass, "pupil-mean oracle " + fmt(oracle) + " (>= 0.85), training accuracy " +
                    fmt(train_acc) + " after " + std::to_string(full.trace.size()) +
                    " epochs (>= 0.95), LOSO accuracy " + fmt(loso) + " (>= 0.80), " +
                    fmt(elapsed, 3) + " s (< 600 s)"};
}

// ---------------------------------------------------------------- 8

Outcome null_check() {
  synth::SynthSpec spec;
  spec.separation = 0.0;
  spec.burst_rate_positive = spec.burst_rate_negative;
  spec.windows_per_participant = 80;
  spec.seed = 0;
  const auto data = synth::generate_synthetic(spec);
  const auto splits = eval::make_loso_splits(eval::participants_of(data.windows));
  const auto report = eval::run_protocol<float>(data.windows, splits, smoke_train(30), smoke_model());
  const double auc = report.auc.mean;
  const bool pass = spec.is_null() && report.auc.count > 0 && auc >= 0.4 && auc <= 0.6;
  return {pass, "null cohort (" + std::to_string(data.windows.size()) + " windows) LOSO AUC " +
                    fmt(auc) + " over " + std::to_string(report.auc.count) +
                    " folds (in [0.4, 0.6])"};
}

// ---------------------------------------------------------------- 9

Outcome imbalance() {
  bool ok = true;
  std::string notes;
  const double w = train::compute_pos_weight(100, 300, train::WeightingMode::inverse_frequency);
  ok = ok && w == 3.0;
  const std::vector<int> pos{1}, neg{0};
  const double l1 = train::weighted_bce(Tensor64::from({1}, {0.0}), pos, 2.0).item();
  const double l0 = train::weighted_bce(Tensor64::from({1}, {0.0}), neg, 2.0).item();
  const double bce_err =
      std::max(std::abs(l1 - 2.0 * std::log(2.0)), std::abs(l0 - std::log(2.0)));
  ok = ok && bce_err < 1e-9;

  // Every fold of an imbalanced LOSO run: replay the validation split and
  // compare the calibrated threshold against 0.5.
  synth::SynthSpec spec;
  spec.participants = 4;
  spec.windows_per_participant = 24;
  spec.steps = 50;
  spec.seed = 9;
  auto data = synth::generate_synthetic(spec).windows;
  // Thin out positives to roughly 1:3.
  std::vector<xmd::XmdWindow> kept;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].label == 0 || i % 3 == 0) kept.push_back(data[i]);
  const auto cfg = smoke_train(8);
  std::size_t folds = 0, guaranteed = 0;
  for (const auto& split : eval::make_loso_splits(eval::participants_of(kept))) {
    std::vector<const xmd::XmdWindow*> train_set;
    for (const auto& x : kept)
      if (x.participant_id != split.test_ids[0]) train_set.push_back(&x);
    const auto art = train::train_fold<float>(train_set, cfg, smoke_model());
    const auto vs = train::split_validation(train_set, cfg.val_fraction, cfg.seed);
    std::vector<const xmd::XmdWindow*> val;
    std::vector<int> y;
    for (auto i : (vs.val.empty() ? vs.train : vs.val)) {
      val.push_back(train_set[i]);
      y.push_back(train_set[i]->label);
    }
    auto p = train::predict_probs(val, art.params);
    if (art.flip) p = metrics::flipped(p);
    ++folds;
    guaranteed += metrics::accuracy_at(p, y, art.threshold) >= metrics::accuracy_at(p, y, 0.5);
  }
  ok = ok && folds > 0 && guaranteed == folds;
  return {ok, "w+ = " + fmt(w) + " (3.0), BCE error " + fmt(bce_err, 3) + " (< 1e-9), threshold >= 0.5 accuracy on " +
                  std::to_string(guaranteed) + "/" + std::to_string(folds) + " folds"};
}

// ---------------------------------------------------------------- 10

double trapezoid_auc(const std::vector<double>& s, const std::vector<int>& y) {
  std::map<double, std::pair<double, double>, std::greater<>> groups;
  double P = 0, N = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    (y[i] ? groups[s[i]].first : groups[s[i]].second) += 1;
    (y[i] ? P : N) += 1;
  }
  double tpr = 0, fpr = 0, area = 0;
  for (const auto& [score, counts] : groups) {
    const double ntpr = tpr + counts.first / P, nfpr = fpr + counts.second / N;
    area += (nfpr - fpr) * (tpr + ntpr) / 2.0;
    tpr = ntpr;
    fpr = nfpr;
  }
  return area;
}

Outcome metric_oracles() {
  Rng rng(1010);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(100);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 3 == 0 ? std::round(rng.uniform() * 12) / 12 : rng.uniform();
      y[i] = rng.bernoulli(0.5);
    }
    y[0] = 1;
    y[n - 1] = 0;
    worst = std::max(worst, std::abs(*metrics::auc_pairwise(s, y) - trapezoid_auc(s, y)));
  }
  bool fixtures = true;
  {
    const auto m = metrics::compute_metrics(std::vector<double>{0.9, 0.8, 0.2, 0.1},
                                            std::vector<int>{1, 1, 0, 0}, 0.5, false);
    fixtures = fixtures && m.accuracy == 1.0 && *m.auc == 1.0 && m.f1_macro == 1.0;
  }
  {
    const auto m = metrics::compute_metrics(std::vector<double>{0.8, 0.7, 0.6, 0.2},
                                            std::vector<int>{1, 0, 1, 0}, 0.5, false);
    fixtures = fixtures && *m.auc == 0.75 && m.confusion.tp == 2 && m.confusion.fp == 1 &&
               m.confusion.tn == 1 && m.confusion.fn == 0 && m.accuracy == 0.75;
  }
  {
    const auto m = metrics::compute_metrics(std::vector<double>{0.9, 0.9, 0.9, 0.9},
                                            std::vector<int>{1, 1, 0, 0}, 0.5, false);
    fixtures = fixtures && m.f1_positive == 2.0 / 3.0 && m.f1_negative == 0.0 &&
               m.f1_macro == 1.0 / 3.0;
  }
  return {worst < 1e-9 && fixtures, "1000 vectors, max |pairwise - trapezoid| " + fmt(worst, 3) +
                                        " (< 1e-9), hand fixtures " + (fixtures ? "exact" : "differ")};
}

// ---------------------------------------------------------------- 11

Outcome protocol_integrity() {
  Rng rng(1111);
  std::size_t checked = 0;
  bool splits_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(30);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("S" + std::to_string(i));
    try {
      eval::check_splits(eval::make_loso_splits(ids), ids);
      eval::check_splits(eval::make_kfold_splits(ids, 2 + rng.index(n - 1), rng.next()), ids);
      checked += 2;
    } catch (const Error&) {
      splits_ok = false;
    }
  }
  synth::SynthSpec spec;
  spec.participants = 4;
  spec.windows_per_participant = 8;
  spec.steps = 30;
  spec.seed = 3;
  const auto data = synth::generate_synthetic(spec).windows;
  const auto splits = eval::make_kfold_splits(eval::participants_of(data), 2, 7);
  auto cfg = smoke_train(3);
  cfg.batch_size = 8;
  const auto a = eval::run_protocol<float>(data, splits, cfg, smoke_model());
  const auto b = eval::run_protocol<float>(data, splits, cfg, smoke_model());
  const bool same = a.to_json({}).dump() == b.to_json({}).dump();
  bool no_leak = true;
  for (const auto& f : a.folds) {
    std::size_t expected = 0;
    for (const auto& w : data)
      expected += std::count(f.split.test_ids.begin(), f.split.test_ids.end(), w.participant_id);
    no_leak = no_leak && f.test_windows == expected && f.train_windows == data.size() - expected;
  }
  return {splits_ok && same && no_leak,
          std::to_string(checked) + " split sets valid" + (splits_ok ? "" : " (violation found)") +
              ", fold window counts " + (no_leak ? "match" : "leak") + ", reports " +
              (same ? "bit-identical" : "differ")};
}

// ---------------------------------------------------------------- 12

Outcome bench_harness() {
  const auto params = model::init_params<float>(model::ModelConfig{});
  bench::BenchConfig cfg;
  bench::NullPowerSampler null;
  const auto r = bench::benchmark_inference(params, cfg, null);
  const double expected_fps = 1000.0 * static_cast<double>(cfg.batch_size) / r.latency.mean_ms;
  const double fps_err = std::abs(r.fps - expected_fps) / expected_fps;
  const auto j = r.to_json();
  const bool counts = r.warmup_runs == cfg.warmup && r.measured_runs == cfg.iterations &&
                      r.latencies_ms.size() == cfg.iterations && cfg.warmup == 20 &&
                      cfg.iterations == 100;
  const bool power = !r.mean_power_watts && j["power"]["sampler"] == "null";
  const bool fields = j.contains("latency_ms") && j.contains("fps") && j.contains("host");
  return {counts && power && fields && fps_err < 0.005,
          "warmup " + std::to_string(r.warmup_runs) + ", measured " +
              std::to_string(r.measured_runs) + ", mean " + fmt(r.latency.mean_ms) + " ms, FPS " +
              fmt(r.fps) + " (identity error " + fmt(fps_err, 2) + "), power " +
              (power ? "absent" : "unexpected")};
}

// ---------------------------------------------------------------- 13

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end() {
  mgtest::TempDir dir("accept-e2e");
  const std::string cli = MG_CLI_PATH;
  const auto src = mgtest::source_dir();
  const std::string cfg = "--config " + (src / "fixtures" / "smoke_config.json").string();
  const std::string d = dir.path().string();
  const int pre = shell(cli + " " + cfg + " --out " + d + "/windows preprocess " +
                        (src / "fixtures" / "clare_mini").string() + " > " + d + "/pre.json");
  const int trn = shell(cli + " " + cfg + " --out " + d + "/model train " + d +
                        "/windows > " + d + "/train.json");
  const int evl = shell(cli + " " + cfg + " --out " + d + "/eval evaluate " + d +
                        "/windows > " + d + "/eval.json");
  bool well_formed = false;
  std::string summary;
  if (pre == 0 && trn == 0 && evl == 0) {
    try {
      std::ifstream in(dir.path() / "eval.json");
      const auto j = nlohmann::json::parse(in);
      const auto& agg = j.at("aggregate");
      const double acc = agg.at("accuracy").at("mean").get<double>();
      well_formed = j.at("format") == eval::kReportFormat && j.at("folds").size() == 2 &&
                    agg.at("folds_total") == 2 && acc >= 0.0 && acc <= 1.0 &&
                    fs::exists(dir.path() / "eval" / "report.json");
      summary = ", LOSO accuracy " + fmt(acc);
    } catch (const std::exception& e) {
      summary = std::string(", report unreadable: ") + e.what();
    }
  }
  return {well_formed, "exit codes " + std::to_string(pre) + "/" + std::to_string(trn) + "/" +
                           std::to_string(evl) + summary};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"zero-order hold", zoh_closed_forms},
      {"scan oracle", scan_oracle},
      {"linear time", linear_time},
      {"encoding invariants", xmd_invariants},
      {"causality and symmetry", causality_and_symmetry},
      {"learning smoke", learning_smoke},
      {"null check", null_check},
      {"imbalance handling", imbalance},
      {"metric oracles", metric_oracles},
      {"protocol integrity", protocol_integrity},
      {"benchmark harness", bench_harness},
      {"end-to-end cli", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = clock_type::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << " "
              << criteria[i].first << ": " << o.detail << " [" << fmt(seconds_since(t0), 3)
              << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
