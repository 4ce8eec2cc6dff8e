// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include <doctest.h>

#include <algorithm>
#include <set>

#include "mambagaze/eval.hpp"
#include "mambagaze/synth.hpp"
#include "support.hpp"

using namespace mambagaze;
using namespace mambagaze::eval;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("P" + std::to_string(100 + i));
  return out;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("leave-one-out splits") {
    const auto s = make_loso_splits({"c", "a", "b"});
    REQUIRE(s.size() == 3);
    CHECK(s[0].test_ids == std::vector<std::string>{"a"});
    CHECK(s[0].train_ids == std::vector<std::string>{"b", "c"});
    for (const auto& f : s) CHECK(f.test_ids.size() == 1);
    check_splits(s, {"a", "b", "c"});
    CHECK(mgtest::error_code_of([] { make_loso_splits({"a"}); }) == ErrorCode::protocol);
  }

  TEST_CASE("k-fold sizes, partition and seed dependence") {
    const auto a = make_kfold_splits(ids(10), 5, 1);
    REQUIRE(a.size() == 5);
    for (const auto& f : a) {
      CHECK(f.test_ids.size() == 2);
      CHECK(f.train_ids.size() == 8);
    }
    check_splits(a, ids(10));
    const auto b = make_kfold_splits(ids(10), 5, 2);
    bool differ = false;
    for (std::size_t i = 0; i < 5; ++i) differ = differ || a[i].test_ids != b[i].test_ids;
    CHECK(differ);
    const auto uneven = make_kfold_splits(ids(11), 3, 0);
    std::set<std::size_t> sizes;
    for (const auto& f : uneven) sizes.insert(f.test_ids.size());
    CHECK(*sizes.rbegin() - *sizes.begin() <= 1);
    check_splits(uneven, ids(11));
    CHECK(mgtest::error_code_of([] { make_kfold_splits(ids(3), 4, 0); }) == ErrorCode::protocol);
    CHECK(mgtest::error_code_of([] { make_kfold_splits(ids(3), 1, 0); }) == ErrorCode::protocol);
  }

  TEST_CASE("k equal to N reduces to leave-one-out") {
    const auto k = make_kfold_splits(ids(6), 6, 9);
    std::set<std::string> tested;
    for (const auto& f : k) {
      REQUIRE(f.test_ids.size() == 1);
      tested.insert(f.test_ids[0]);
      CHECK(f.train_ids.size() == 5);
    }
    CHECK(tested.size() == 6);
  }

  TEST_CASE("split checker rejects leakage and gaps") {
    auto s = make_loso_splits(ids(3));
    s[0].train_ids.push_back(s[0].test_ids[0]);
    CHECK(mgtest::error_code_of([&] { check_splits(s, ids(3)); }) == ErrorCode::protocol);
    auto t = make_loso_splits(ids(3));
    t.pop_back();
    CHECK(mgtest::error_code_of([&] { check_splits(t, ids(3)); }) == ErrorCode::protocol);
  }

  TEST_CASE("random split properties") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.index(20);
      const std::size_t k = 2 + rng.index(n - 1);
      const auto s = make_kfold_splits(ids(n), k, rng.next());
      check_splits(s, ids(n));
      CHECK(s.size() == k);
    }
  }

  TEST_CASE("summary is an unweighted population mean and spread") {
    const auto s = summarize({0.5, 1.0});
    CHECK(s.mean == 0.75);
    CHECK(s.stddev == 0.25);
    CHECK(s.count == 2);
    CHECK(summarize({}).count == 0);
  }

  TEST_CASE("protocol run is leakage-free and reproducible") {
    synth::SynthSpec spec;
    spec.participants = 3;
    spec.windows_per_participant = 10;
    spec.steps = 30;
    const auto data = synth::generate_synthetic(spec);
    model::ModelConfig m;
    m.d_model = 8;
    m.d_state = 4;
    m.layers_per_direction = 1;
    train::TrainConfig cfg;
    cfg.lr = 3e-3;
    cfg.batch_size = 8;
    cfg.max_epochs = 2;
    cfg.patience = 2;
    cfg.val_fraction = 0.2;
    const auto splits = make_loso_splits(participants_of(data.windows));
    const auto a = run_protocol<double>(data.windows, splits, cfg, m);
    const auto b = run_protocol<double>(data.windows, splits, cfg, m);
    CHECK(a.to_json({}).dump() == b.to_json({}).dump());
    REQUIRE(a.folds.size() == 3);
    for (const auto& f : a.folds) {
      CHECK(f.test_windows == 10);
      CHECK(f.train_windows == 20);
      CHECK(f.split.test_ids.size() == 1);
    }
    const auto j = a.to_json({{"seed", 0}});
    CHECK(j["format"] == kReportFormat);
    CHECK(j["version"] == kReportVersion);
    CHECK(j["config"]["seed"] == 0);
  }

  TEST_CASE("a single-class fold is recorded as degenerate") {
    synth::SynthSpec spec;
    spec.participants = 3;
    spec.windows_per_participant = 6;
    spec.steps = 20;
    auto data = synth::generate_synthetic(spec).windows;
    const auto pids = participants_of(data);
    // Only the first participant keeps positives, so the fold testing it trains on one class.
    for (auto& w : data)
      if (w.participant_id != pids[0]) w.label = 0;
    model::ModelConfig m;
    m.d_model = 4;
    m.d_state = 2;
    m.layers_per_direction = 1;
    train::TrainConfig cfg;
    cfg.max_epochs = 1;
    cfg.patience = 1;
    cfg.batch_size = 8;
    const auto report = run_protocol<double>(data, make_loso_splits(pids), cfg, m);
    CHECK(report.degenerate_folds == 1);
    CHECK(report.folds[0].degenerate);
    CHECK_FALSE(report.folds[0].error.empty());
    CHECK(report.accuracy.count == 2);
  }
}
