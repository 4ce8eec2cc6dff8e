// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "mambagaze/error.hpp"
#include "mambagaze/rng.hpp"

namespace mambagaze::eval {

const char* protocol_name(Protocol p) noexcept {
  return p == Protocol::kfold ? "kfold" : "loso";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "loso") return Protocol::loso;
  if (name == "kfold") return Protocol::kfold;
  fail(ErrorCode::usage, "unknown protocol '" + name + "' (expected loso or kfold)");
}

std::vector<std::string> participants_of(const std::vector<xmd::XmdWindow>& windows) {
  std::set<std::string> ids;
  for (const auto& w : windows) ids.insert(w.participant_id);
  return {ids.begin(), ids.end()};
}

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (fold + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<FoldSplit> make_loso_splits(std::vector<std::string> participants) {
  participants = sorted_unique(std::move(participants));
  if (participants.size() < 2)
    fail(ErrorCode::protocol, "LOSO needs at least 2 participants, got " +
                                  std::to_string(participants.size()));
  std::vector<FoldSplit> out;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    FoldSplit s;
    s.fold_id = i;
    s.protocol = Protocol::loso;
    s.test_ids = {participants[i]};
    for (std::size_t j = 0; j < participants.size(); ++j)
      if (j != i) s.train_ids.push_back(participants[j]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<FoldSplit> make_kfold_splits(std::vector<std::string> participants, std::size_t k,
                                         std::uint64_t seed) {
  participants = sorted_unique(std::move(participants));
  const std::size_t n = participants.size();
  if (k < 2 || k > n)
    fail(ErrorCode::protocol, "K-fold needs 2 <= k <= participants, got k=" + std::to_string(k) +
                                  " with " + std::to_string(n) + " participants");
  Rng rng(seed);
  rng.shuffle(participants);
  std::vector<FoldSplit> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t size = n / k + (i < n % k ? 1 : 0);
    FoldSplit s;
    s.fold_id = i;
    s.protocol = Protocol::kfold;
    s.test_ids.assign(participants.begin() + static_cast<std::ptrdiff_t>(begin),
                      participants.begin() + static_cast<std::ptrdiff_t>(begin + size));
    for (std::size_t j = 0; j < n; ++j)
      if (j < begin || j >= begin + size) s.train_ids.push_back(participants[j]);
    std::sort(s.test_ids.begin(), s.test_ids.end());
    std::sort(s.train_ids.begin(), s.train_ids.end());
    out.push_back(std::move(s));
    begin += size;
  }
  return out;
}

void check_splits(const std::vector<FoldSplit>& splits,
                  const std::vector<std::string>& participants) {
  const auto all = sorted_unique(participants);
  std::map<std::string, std::size_t> tested;
  for (const auto& s : splits) {
    std::set<std::string> train(s.train_ids.begin(), s.train_ids.end());
    for (const auto& id : s.test_ids) {
      if (train.count(id))
        fail(ErrorCode::protocol, "fold " + std::to_string(s.fold_id) + ": participant '" + id +
                                      "' is in both train and test");
      ++tested[id];
    }
    for (const auto& id : s.train_ids)
      if (!std::binary_search(all.begin(), all.end(), id))
        fail(ErrorCode::protocol, "fold " + std::to_string(s.fold_id) +
                                      ": unknown participant '" + id + "'");
  }
  for (const auto& id : all) {
    const auto it = tested.find(id);
    const std::size_t count = it == tested.end() ? 0 : it->second;
    if (count != 1)
      fail(ErrorCode::protocol, "participant '" + id + "' is tested in " + std::to_string(count) +
                                    " folds (expected exactly 1)");
  }
  if (tested.size() != all.size())
    fail(ErrorCode::protocol, "a fold tests a participant that has no windows");
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

nlohmann::ordered_json FoldResult::to_json() const {
  nlohmann::ordered_json j;
  j["fold"] = split.fold_id;
  j["status"] = degenerate ? "degenerate" : "ok";
  if (degenerate) j["error"] = error;
  j["train_participants"] = split.train_ids;
  j["test_participants"] = split.test_ids;
  j["train_windows"] = train_windows;
  j["test_windows"] = test_windows;
  if (!degenerate) {
    j["metrics"] = metrics.to_json();
    j["pos_weight"] = pos_weight;
    j["best_epoch"] = best_epoch;
    j["epochs_run"] = epochs_run;
    j["attention"] = {{"forward_mean", alpha_forward_mean},
                      {"backward_mean", alpha_backward_mean}};
    auto& t = j["trace"] = nlohmann::ordered_json::array();
    for (const auto& e : trace) t.push_back(e.to_json());
  }
  j["warnings"] = warnings;
  return j;
}

nlohmann::ordered_json ProtocolReport::to_json(const nlohmann::ordered_json& config_echo) const {
  auto summary = [](const Summary& s) {
    return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.stddev}, {"folds", s.count}};
  };
  nlohmann::ordered_json j;
  j["format"] = kReportFormat;
  j["version"] = kReportVersion;
  j["protocol"] = protocol_name(protocol);
  j["config"] = config_echo;
  nlohmann::ordered_json agg;
  agg["folds_total"] = folds.size();
  agg["folds_used"] = folds.size() - degenerate_folds;
  agg["folds_degenerate"] = degenerate_folds;
  agg["auc_undefined_folds"] = auc_undefined;
  agg["accuracy"] = summary(accuracy);
  agg["auc"] = summary(auc);
  agg["f1_positive"] = summary(f1_positive);
  agg["f1_macro"] = summary(f1_macro);
  j["aggregate"] = agg;
  auto& f = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& fold : folds) f.push_back(fold.to_json());
  return j;
}

template <typename T>
FoldResult evaluate_model(const std::vector<xmd::XmdWindow>& windows,
                          const model::MambaGazeParams<T>& params, double threshold, bool flip) {
  require(!windows.empty(), ErrorCode::contract, "no windows to evaluate");
  FoldResult r;
  r.test_windows = windows.size();
  std::vector<double> probs;
  std::vector<int> labels;
  const std::size_t steps = windows.front().steps;
  r.alpha_forward_mean.assign(steps, 0.0);
  r.alpha_backward_mean.assign(steps, 0.0);
  std::size_t profiled = 0;
  for (const auto& w : windows) {
    const auto pred = model::predict(model::window_tensor<T>(w), params);
    probs.push_back(static_cast<double>(pred.probability));
    labels.push_back(w.label);
    if (w.steps == steps) {
      for (std::size_t t = 0; t < steps; ++t) {
        r.alpha_forward_mean[t] += static_cast<double>(pred.alpha_forward[t]);
        r.alpha_backward_mean[t] += static_cast<double>(pred.alpha_backward[t]);
      }
      ++profiled;
    }
  }
  for (std::size_t t = 0; t < steps; ++t) {
    r.alpha_forward_mean[t] /= static_cast<double>(profiled);
    r.alpha_backward_mean[t] /= static_cast<double>(profiled);
  }
  r.metrics = metrics::compute_metrics(probs, labels, threshold, flip);
  return r;
}

template <typename T>
ProtocolReport run_protocol(const std::vector<xmd::XmdWindow>& windows,
                            const std::vector<FoldSplit>& splits, const train::TrainConfig& cfg,
                            const model::ModelConfig& model_cfg, const ProtocolOptions& options) {
  require(!splits.empty(), ErrorCode::protocol, "no folds to run");
  check_splits(splits, participants_of(windows));
  ProtocolReport report;
  report.protocol = splits.front().protocol;
  std::vector<double> acc, auc, f1p, f1m;

  for (const auto& split : splits) {
    const std::set<std::string> train_ids(split.train_ids.begin(), split.train_ids.end());
    const std::set<std::string> test_ids(split.test_ids.begin(), split.test_ids.end());
    std::vector<const xmd::XmdWindow*> train_set;
    std::vector<xmd::XmdWindow> test_set;
    for (const auto& w : windows) {
      if (train_ids.count(w.participant_id)) train_set.push_back(&w);
      else if (test_ids.count(w.participant_id)) test_set.push_back(w);
    }

    FoldResult result;
    try {
      if (test_set.empty())
        fail(ErrorCode::degenerate_fold, "fold has no test windows");
      train::TrainConfig fold_cfg = cfg;
      fold_cfg.seed = fold_seed(cfg.seed, split.fold_id);
      auto art = train::train_fold<T>(train_set, fold_cfg, model_cfg);
      result = evaluate_model(test_set, art.params, art.threshold, art.flip);
      result.train_windows = train_set.size();
      result.pos_weight = art.pos_weight;
      result.best_epoch = art.best_epoch;
      result.epochs_run = art.trace.size();
      result.trace = art.trace;
      result.warnings = art.warnings;
      if (options.artifact_dir) {
        char name[32];
        std::snprintf(name, sizeof name, "fold_%02zu", split.fold_id);
        train::save_fold_artifacts(art, *options.artifact_dir / name);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_fold) {
        throw Error(e.code(), "fold " + std::to_string(split.fold_id) + ": " + e.what());
      }
      result = FoldResult{};
      result.degenerate = true;
      result.error = e.what();
      result.train_windows = train_set.size();
      result.test_windows = test_set.size();
    }
    result.split = split;
    if (result.degenerate) {
      ++report.degenerate_folds;
    } else {
      acc.push_back(result.metrics.accuracy);
      f1p.push_back(result.metrics.f1_positive);
      f1m.push_back(result.metrics.f1_macro);
      if (result.metrics.auc) auc.push_back(*result.metrics.auc);
      else ++report.auc_undefined;
    }
    report.folds.push_back(std::move(result));
  }
  report.accuracy = summarize(acc);
  report.auc = summarize(auc);
  report.f1_positive = summarize(f1p);
  report.f1_macro = summarize(f1m);
  return report;
}

#define MG_INSTANTIATE_EVAL(T)                                                                    \
  template ProtocolReport run_protocol<T>(const std::vector<xmd::XmdWindow>&,                     \
                                          const std::vector<FoldSplit>&,                          \
                                          const train::TrainConfig&, const model::ModelConfig&,   \
                                          const ProtocolOptions&);                                \
  template FoldResult evaluate_model<T>(const std::vector<xmd::XmdWindow>&,                       \
                                        const model::MambaGazeParams<T>&, double, bool);

MG_INSTANTIATE_EVAL(float)
MG_INSTANTIATE_EVAL(double)

#undef MG_INSTANTIATE_EVAL

}  // namespace mambagaze::eval
