// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include <doctest.h>

#include <cmath>
#include <set>

#include "mambagaze/metrics.hpp"
#include "mambagaze/synth.hpp"
#include "mambagaze/train.hpp"
#include "support.hpp"

using namespace mambagaze;
using namespace mambagaze::train;
using nx::Tensor64;

namespace {

// Accuracy of p >= theta, counted directly.
double oracle_accuracy(const std::vector<double>& p, const std::vector<int>& y, double theta) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hit += ((p[i] >= theta) == (y[i] == 1));
  return static_cast<double>(hit) / static_cast<double>(p.size());
}

// Best accuracy over every threshold that changes the partition.
double oracle_best_accuracy(const std::vector<double>& p, const std::vector<int>& y) {
  double best = oracle_accuracy(p, y, 0.5);
  for (double v : p) {
    best = std::max(best, oracle_accuracy(p, y, v));
    best = std::max(best, oracle_accuracy(p, y, std::nextafter(v, 2.0)));
  }
  best = std::max(best, oracle_accuracy(p, y, 0.0));
  return best;
}

synth::SynthResult small_cohort(std::uint64_t seed) {
  synth::SynthSpec spec;
  spec.participants = 4;
  spec.windows_per_participant = 16;
  spec.steps = 40;
  spec.seed = seed;
  return synth::generate_synthetic(spec);
}

model::ModelConfig small_model() {
  model::ModelConfig m;
  m.d_model = 8;
  m.d_state = 4;
  m.layers_per_direction = 1;
  m.dropout = 0.0;
  return m;
}

TrainConfig quick_train(std::size_t epochs) {
  TrainConfig c;
  c.lr = 3e-3;
  c.batch_size = 16;
  c.max_epochs = epochs;
  c.patience = epochs;
  c.val_fraction = 0.25;
  return c;
}

std::vector<const xmd::XmdWindow*> pointers(const std::vector<xmd::XmdWindow>& w) {
  std::vector<const xmd::XmdWindow*> out;
  for (const auto& x : w) out.push_back(&x);
  return out;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("positive weight by mode") {
    CHECK(compute_pos_weight(100, 300, WeightingMode::inverse_frequency) == doctest::Approx(3.0));
    CHECK(compute_pos_weight(100, 300, WeightingMode::direct_ratio) == doctest::Approx(1.0 / 3.0));
    CHECK(compute_pos_weight(50, 50, WeightingMode::inverse_frequency) == 1.0);
    CHECK(compute_pos_weight(50, 50, WeightingMode::direct_ratio) == 1.0);
    CHECK(compute_pos_weight(7, 50, WeightingMode::none) == 1.0);
    CHECK(mgtest::error_code_of([] { compute_pos_weight(0, 5, WeightingMode::none); }) ==
          ErrorCode::degenerate_fold);
    CHECK(mgtest::error_code_of([] { compute_pos_weight(5, 0, WeightingMode::none); }) ==
          ErrorCode::degenerate_fold);
    CHECK(parse_weighting_mode(weighting_mode_name(WeightingMode::direct_ratio)) ==
          WeightingMode::direct_ratio);
  }

  TEST_CASE("weighted cross-entropy closed forms") {
    const std::vector<int> pos{1}, neg{0};
    CHECK(weighted_bce(Tensor64::from({1}, {0.0}), pos, 2.0).item() ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(weighted_bce(Tensor64::from({1}, {0.0}), neg, 2.0).item() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const std::vector<int> mixed{1, 0};
    CHECK(weighted_bce(Tensor64::from({2}, {40.0, -40.0}), mixed, 3.0).item() < 1e-15);
    // Extreme logits stay finite.
    const double big = weighted_bce(Tensor64::from({2}, {-800.0, 800.0}), mixed, 1.0).item();
    CHECK(big == doctest::Approx(800.0).epsilon(1e-12));
  }

  TEST_CASE("loss grows strictly with the positive weight on wrong positives") {
    Rng rng(21);
    std::vector<double> logits(16);
    std::vector<int> labels(16);
    for (std::size_t i = 0; i < 16; ++i) {
      labels[i] = static_cast<int>(i % 2);
      logits[i] = labels[i] ? -rng.uniform(0.5, 3.0) : rng.uniform(-3.0, 3.0);
    }
    double prev = -1;
    for (double w : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double l = weighted_bce(Tensor64::from({16}, logits), labels, w).item();
      CHECK(l > prev);
      prev = l;
    }
  }

  TEST_CASE("cross-entropy gradient matches finite differences") {
    Rng rng(22);
    auto x = mgtest::random_tensor(rng, {6}, 2.0);
    const std::vector<int> y{1, 0, 0, 1, 1, 0};
    CHECK(mgtest::fd_relative_error([&] { return weighted_bce(x, y, 2.5); }, {x}) < 1e-6);
  }

  TEST_CASE("threshold examples") {
    {
      const std::vector<double> p{0.4, 0.6, 0.7};
      const std::vector<int> y{0, 1, 1};
      CHECK(optimize_threshold(p, y) == 0.5);
    }
    {
      const std::vector<double> p{0.3, 0.4, 0.6};
      const std::vector<int> y{1, 1, 0};
      const double t = optimize_threshold(p, y);
      CHECK(oracle_accuracy(p, y, t) == doctest::Approx(2.0 / 3.0));
      CHECK(oracle_best_accuracy(p, y) == doctest::Approx(2.0 / 3.0));
    }
    {
      const std::vector<double> p{0.05, 0.1, 0.12, 0.2};
      const std::vector<int> y{0, 0, 1, 1};
      const double t = optimize_threshold(p, y);
      CHECK(oracle_accuracy(p, y, t) == 1.0);
      CHECK(t == doctest::Approx(0.11));
    }
  }

  TEST_CASE("optimized threshold reaches the brute-force optimum and never loses to 0.5") {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 2 + rng.index(30);
      std::vector<double> p(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        // Coarse values force ties; all stay inside (0, 1).
        p[i] = (std::round(rng.uniform() * 20.0) + 1.0) / 22.0;
        y[i] = rng.bernoulli(0.5);
      }
      const double t = optimize_threshold(p, y);
      CHECK(t > 0.0);
      CHECK(t < 1.0);
      CHECK(oracle_accuracy(p, y, t) >= oracle_accuracy(p, y, 0.5));
      CHECK(oracle_accuracy(p, y, t) == doctest::Approx(oracle_best_accuracy(p, y)));
    }
  }

  TEST_CASE("flip calibration") {
    const std::vector<int> y{1, 1, 0, 0, 1};
    // AUC 0.5 exactly: every pair tied.
    CHECK_FALSE(calibrate_flip(std::vector<double>(5, 0.4), y));
    {
      const std::vector<int> yy{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
      // 11 of 25 pairs ordered, none tied: AUC 0.44.
      std::vector<double> p{0.1, 0.9, 0.3, 0.7, 0.5, 0.2, 0.8, 0.4, 0.6, 0.35};
      const auto auc = metrics::auc_pairwise(p, yy);
      REQUIRE(auc.has_value());
      CHECK(*auc == doctest::Approx(0.44));
      CHECK(calibrate_flip(p, yy));
      CHECK(*metrics::auc_pairwise(metrics::flipped(p), yy) == doctest::Approx(1.0 - *auc));
    }
    CHECK_FALSE(calibrate_flip(std::vector<double>{0.9, 0.8, 0.2, 0.1, 0.7}, y));
    // Single class: AUC undefined, no flip.
    CHECK_FALSE(calibrate_flip(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}));
  }

  TEST_CASE("early stopping contract") {
    EarlyStopper s(1);
    CHECK(s.update(0.5));
    CHECK_FALSE(s.should_stop());
    CHECK_FALSE(s.update(0.5));
    CHECK(s.should_stop());
    CHECK(s.epochs_seen() == 2);
    CHECK(s.best_epoch() == 1);

    EarlyStopper t(3);
    for (double v : {0.1, 0.3, 0.2, 0.3}) t.update(v);
    CHECK(t.best_epoch() == 2);
    CHECK_FALSE(t.should_stop());
    t.update(0.29);
    CHECK(t.should_stop());
    CHECK(mgtest::error_code_of([] { EarlyStopper bad(0); }) == ErrorCode::config);
  }

  TEST_CASE("validation split covers the training windows once") {
    const auto cohort = small_cohort(1);
    const auto ptr = pointers(cohort.windows);
    const auto s = split_validation(ptr, 0.25, 3);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (auto i : s.val) CHECK(all.insert(i).second);
    CHECK(all.size() == ptr.size());
    CHECK_FALSE(s.val.empty());
    for (const auto& id : s.val_participants)
      for (auto i : s.train) CHECK(ptr[i]->participant_id != id);
  }

  TEST_CASE("single-class training set is a degenerate fold") {
    auto cohort = small_cohort(2);
    std::vector<const xmd::XmdWindow*> pos;
    for (const auto& w : cohort.windows)
      if (w.label == 1) pos.push_back(&w);
    CHECK(mgtest::error_code_of([&] { train_fold<double>(pos, quick_train(1), small_model()); }) ==
          ErrorCode::degenerate_fold);
  }

  TEST_CASE("training is bit-reproducible and writes a consistent sidecar") {
    const auto cohort = small_cohort(3);
    const auto ptr = pointers(cohort.windows);
    const auto a = train_fold<double>(ptr, quick_train(2), small_model());
    const auto b = train_fold<double>(ptr, quick_train(2), small_model());
    REQUIRE(a.trace.size() == b.trace.size());
    CHECK(a.trace[0].train_loss == b.trace[0].train_loss);
    CHECK(a.threshold == b.threshold);
    CHECK(a.sidecar_json() == b.sidecar_json());
    const auto pa = a.params.parameters(), pb = b.params.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
      CHECK(std::equal(pa[i].data().begin(), pa[i].data().end(), pb[i].data().begin()));
    CHECK(a.threshold > 0.0);
    CHECK(a.threshold < 1.0);
    CHECK(a.trace.size() <= 2);
    CHECK(a.best_epoch >= 1);

    mgtest::TempDir dir("fold");
    save_fold_artifacts(a, dir.path() / "fold_00");
    CHECK(std::filesystem::exists(dir.path() / "fold_00.ckpt"));
    CHECK(std::filesystem::exists(dir.path() / "fold_00.json"));
    const auto loaded = model::load_checkpoint<double>(dir.path() / "fold_00.ckpt");
    CHECK(loaded.header["extra"]["threshold"] == a.threshold);
  }

  TEST_CASE("first-epoch loss falls on a separable cohort") {
    const auto cohort = small_cohort(4);
    const auto ptr = pointers(cohort.windows);
    auto cfg = quick_train(6);
    const auto art = train_fold<double>(ptr, cfg, small_model());
    REQUIRE(art.trace.size() >= 2);
    CHECK(art.trace.back().train_loss < art.trace.front().train_loss);
  }

  TEST_CASE("config round trip and validation") {
    auto c = quick_train(3);
    c.weighting_mode = WeightingMode::direct_ratio;
    c.early_stop_metric = EarlyStopMetric::auc;
    CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
    c.val_fraction = 1.0;
    CHECK(mgtest::error_code_of([&] { c.validate(); }) == ErrorCode::config);
    CHECK(mgtest::error_code_of([] { parse_weighting_mode("eq16"); }) == ErrorCode::config);
  }
}
