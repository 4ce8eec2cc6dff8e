// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "mambagaze/error.hpp"
#include "json_option.hpp"
#include "mambagaze/metrics.hpp"
#include "mambagaze/ops.hpp"
#include "mambagaze/optim.hpp"

namespace mambagaze::train {

using nx::Node;

const char* weighting_mode_name(WeightingMode mode) noexcept {
  switch (mode) {
    case WeightingMode::inverse_frequency: return "inverse_frequency";
    case WeightingMode::direct_ratio: return "direct_ratio";
    case WeightingMode::none: return "none";
  }
  return "?";
}

WeightingMode parse_weighting_mode(const std::string& name) {
  if (name == "inverse_frequency") return WeightingMode::inverse_frequency;
  if (name == "direct_ratio") return WeightingMode::direct_ratio;
  if (name == "none") return WeightingMode::none;
  fail(ErrorCode::config, "unknown weighting_mode '" + name +
                              "' (expected inverse_frequency, direct_ratio or none)");
}

const char* early_stop_metric_name(EarlyStopMetric metric) noexcept {
  return metric == EarlyStopMetric::auc ? "auc" : "accuracy";
}

EarlyStopMetric parse_early_stop_metric(const std::string& name) {
  if (name == "accuracy") return EarlyStopMetric::accuracy;
  if (name == "auc") return EarlyStopMetric::auc;
  fail(ErrorCode::config, "unknown early_stop_metric '" + name + "' (expected accuracy or auc)");
}

void TrainConfig::validate() const {
  require(std::isfinite(lr) && lr >= 0.0, ErrorCode::config, "train.lr must be finite and >= 0");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, ErrorCode::config,
          "train.weight_decay must be >= 0");
  require(batch_size >= 1, ErrorCode::config, "train.batch_size must be positive");
  require(max_epochs >= 1, ErrorCode::config, "train.max_epochs must be positive");
  require(std::isfinite(clip_norm) && clip_norm > 0.0, ErrorCode::config,
          "train.clip_norm must be positive");
  require(patience >= 1, ErrorCode::config, "train.patience must be at least 1");
  require(val_fraction > 0.0 && val_fraction < 1.0, ErrorCode::config,
          "train.val_fraction must lie in (0, 1)");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["clip_norm"] = clip_norm;
  j["patience"] = patience;
  j["val_fraction"] = val_fraction;
  j["early_stop_metric"] = early_stop_metric_name(early_stop_metric);
  j["weighting_mode"] = weighting_mode_name(weighting_mode);
  j["precision"] = nx::precision_name(precision);
  j["seed"] = seed;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::config, "train config must be a JSON object");
  static const std::array<const char*, 11> known = {
      "lr", "weight_decay", "batch_size", "max_epochs", "clip_norm", "patience",
      "val_fraction", "early_stop_metric", "weighting_mode", "precision", "seed"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::config, "unknown train option '" + key + "'");
  }
  TrainConfig c;
  try {
    c.lr = detail::option(j, "lr", c.lr);
    c.weight_decay = detail::option(j, "weight_decay", c.weight_decay);
    c.batch_size = detail::option(j, "batch_size", c.batch_size);
    c.max_epochs = detail::option(j, "max_epochs", c.max_epochs);
    c.clip_norm = detail::option(j, "clip_norm", c.clip_norm);
    c.patience = detail::option(j, "patience", c.patience);
    c.val_fraction = detail::option(j, "val_fraction", c.val_fraction);
    c.seed = detail::option(j, "seed", c.seed);
    if (j.contains("early_stop_metric"))
      c.early_stop_metric = parse_early_stop_metric(j.at("early_stop_metric").get<std::string>());
    if (j.contains("weighting_mode"))
      c.weighting_mode = parse_weighting_mode(j.at("weighting_mode").get<std::string>());
    if (j.contains("precision")) c.precision = nx::parse_precision(j.at("precision").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double compute_pos_weight(std::size_t n_pos, std::size_t n_neg, WeightingMode mode) {
  if (n_pos == 0 || n_neg == 0)
    fail(ErrorCode::degenerate_fold, "training labels hold a single class (" +
                                         std::to_string(n_pos) + " positive, " +
                                         std::to_string(n_neg) + " negative)");
  switch (mode) {
    case WeightingMode::inverse_frequency:
      return static_cast<double>(n_neg) / static_cast<double>(n_pos);
    case WeightingMode::direct_ratio:
      return static_cast<double>(n_pos) / static_cast<double>(n_neg);
    case WeightingMode::none:
      return 1.0;
  }
  return 1.0;
}

template <typename T>
Tensor<T> weighted_bce(const Tensor<T>& logits, std::span<const int> labels, double pos_weight) {
  const std::size_t n = logits.size();
  require(n > 0 && labels.size() == n, ErrorCode::dimension,
          "weighted_bce needs one label per logit");
  for (int y : labels)
    if (y != 0 && y != 1) fail(ErrorCode::contract, "labels must be 0 or 1");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(logits[i]);
    total += labels[i] == 1 ? pos_weight * nx::stable_softplus(-x) : nx::stable_softplus(x);
  }
  std::vector<int> y(labels.begin(), labels.end());
  return nx::detail::make_op<T>(
      "weighted_bce", {1}, {static_cast<T>(total / static_cast<double>(n))}, {logits},
      [y = std::move(y), pos_weight, n](Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        const double upstream = static_cast<double>(self.grad[0]) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = static_cast<double>(p.data[i]);
          const double d = y[i] == 1 ? -pos_weight * nx::stable_sigmoid(-x) : nx::stable_sigmoid(x);
          g[i] += static_cast<T>(upstream * d);
        }
      });
}

double optimize_threshold(std::span<const double> probs, std::span<const int> labels) {
  require(probs.size() == labels.size(), ErrorCode::dimension,
          "optimize_threshold needs one label per probability");
  if (probs.empty()) return 0.5;
  std::vector<double> sorted(probs.begin(), probs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> candidates{0.5, sorted.front() / 2.0, (sorted.back() + 1.0) / 2.0};
  for (std::size_t i = 1; i < sorted.size(); ++i)
    candidates.push_back(0.5 * (sorted[i - 1] + sorted[i]));

  double best = 0.5, best_acc = -1.0;
  for (double c : candidates) {
    if (!(c > 0.0 && c < 1.0)) continue;
    const double acc = metrics::accuracy_at(probs, labels, c);
    const double dist = std::abs(c - 0.5), best_dist = std::abs(best - 0.5);
    if (acc > best_acc || (acc == best_acc && (dist < best_dist || (dist == best_dist && c < best)))) {
      best = c;
      best_acc = acc;
    }
  }
  return best;
}

bool calibrate_flip(std::span<const double> probs, std::span<const int> labels) {
  const auto auc = metrics::auc_pairwise(probs, labels);
  return auc.has_value() && *auc < 0.5;
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
  require(patience >= 1, ErrorCode::config, "patience must be at least 1");
}

bool EarlyStopper::update(double value) {
  ++seen_;
  if (seen_ == 1 || value > best_) {
    best_ = value;
    best_epoch_ = seen_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

nlohmann::ordered_json EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["val_metric"] = val_metric;
  j["val_accuracy"] = val_accuracy;
  j["val_auc"] = val_auc ? nlohmann::ordered_json(*val_auc) : nlohmann::ordered_json(nullptr);
  j["val_f1_macro"] = val_f1_macro;
  j["improved"] = improved;
  j["collapse"] = collapse;
  return j;
}

template <typename T>
nlohmann::ordered_json FoldArtifacts<T>::sidecar_json() const {
  nlohmann::ordered_json j;
  j["format"] = "mambagaze.fold";
  j["version"] = 1;
  j["threshold"] = threshold;
  j["flip"] = flip;
  j["pos_weight"] = pos_weight;
  j["best_epoch"] = best_epoch;
  j["epochs_run"] = trace.size();
  j["train_windows"] = train_windows;
  j["val_windows"] = val_windows;
  j["val_participants"] = val_participants;
  auto& t = j["trace"] = nlohmann::ordered_json::array();
  for (const auto& e : trace) t.push_back(e.to_json());
  j["warnings"] = warnings;
  return j;
}

namespace {

bool has_both_classes(const std::vector<const xmd::XmdWindow*>& windows,
                      const std::vector<std::size_t>& idx) {
  bool pos = false, neg = false;
  for (std::size_t i : idx) (windows[i]->label == 1 ? pos : neg) = true;
  return pos && neg;
}

ValidationSplit window_level_split(const std::vector<const xmd::XmdWindow*>& windows,
                                   double val_fraction, Rng& rng) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < windows.size(); ++i) by_class[windows[i]->label == 1].push_back(i);
  ValidationSplit s;
  for (auto& members : by_class) {
    rng.shuffle(members);
    const std::size_t c = members.size();
    std::size_t nv = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(c)));
    if (c >= 2) nv = std::clamp<std::size_t>(nv, 1, c - 1);
    else nv = 0;
    s.val.insert(s.val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(nv));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(nv), members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

}  // namespace

ValidationSplit split_validation(const std::vector<const xmd::XmdWindow*>& windows,
                                 double val_fraction, std::uint64_t seed) {
  Rng rng(seed ^ 0x5eedf00dULL);
  std::vector<std::string> ids;
  for (const auto* w : windows) ids.push_back(w->participant_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(ids.size())));
  if (n_val >= 1 && ids.size() - n_val >= 2) {
    std::vector<std::string> shuffled = ids;
    Rng pick(rng.fork_seed());
    pick.shuffle(shuffled);
    std::set<std::string> held(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
    ValidationSplit s;
    for (std::size_t i = 0; i < windows.size(); ++i)
      (held.count(windows[i]->participant_id) ? s.val : s.train).push_back(i);
    if (has_both_classes(windows, s.val) && has_both_classes(windows, s.train)) {
      s.val_participants.assign(held.begin(), held.end());
      return s;
    }
  }
  Rng window_rng(rng.fork_seed());
  return window_level_split(windows, val_fraction, window_rng);
}

template <typename T>
std::vector<double> predict_probs(const std::vector<const xmd::XmdWindow*>& windows,
                                  const model::MambaGazeParams<T>& params) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (const auto* w : windows)
    out.push_back(static_cast<double>(model::predict(model::window_tensor<T>(*w), params).probability));
  return out;
}

template <typename T>
FoldArtifacts<T> train_fold(const std::vector<const xmd::XmdWindow*>& windows,
                            const TrainConfig& cfg, const model::ModelConfig& model_cfg) {
  cfg.validate();
  model_cfg.validate();
  if (windows.empty()) fail(ErrorCode::degenerate_fold, "fold has no training windows");
  std::vector<std::size_t> all(windows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (!has_both_classes(windows, all))
    fail(ErrorCode::degenerate_fold, "training windows hold a single class");

  FoldArtifacts<T> art;
  ValidationSplit split = split_validation(windows, cfg.val_fraction, cfg.seed);
  if (split.val.empty()) {
    split.val = split.train;
    art.warnings.push_back("too few windows for a validation split; validating on training windows");
  }
  art.val_participants = split.val_participants;
  art.train_windows = split.train.size();
  art.val_windows = split.val.size();

  std::size_t n_pos = 0;
  for (std::size_t i : split.train) n_pos += windows[i]->label == 1;
  art.pos_weight = compute_pos_weight(n_pos, split.train.size() - n_pos, cfg.weighting_mode);

  std::vector<const xmd::XmdWindow*> val_windows;
  std::vector<int> val_labels;
  for (std::size_t i : split.val) {
    val_windows.push_back(windows[i]);
    val_labels.push_back(windows[i]->label);
  }

  auto params = model::init_params<T>(model_cfg);
  auto list = params.parameters();
  nx::AdamW<T> opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng order_rng(cfg.seed);
  Rng dropout_rng(order_rng.fork_seed());
  EarlyStopper stopper(cfg.patience);
  auto best = model::clone_params(params);
  bool warned_auc = false;

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const T inv_batch = static_cast<T>(1.0 / static_cast<double>(stop - start));
      nx::zero_grad(list);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& w = *windows[order[k]];
        const auto pred =
            model::predict_window(model::window_tensor<T>(w), params, true, dropout_rng);
        const int label = w.label;
        const auto loss = weighted_bce(pred.logit, std::span<const int>(&label, 1), art.pos_weight);
        loss_sum += static_cast<double>(loss[0]);
        nx::backward(nx::scale(loss, inv_batch));
      }
      nx::clip_grad_norm(list, cfg.clip_norm);
      opt.step(list);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    const auto probs = predict_probs(val_windows, params);
    const auto m = metrics::compute_metrics(probs, val_labels, 0.5, false);
    rec.val_accuracy = m.accuracy;
    rec.val_auc = m.auc;
    rec.val_f1_macro = m.f1_macro;
    rec.collapse = (m.confusion.tp + m.confusion.fp == 0) || (m.confusion.tn + m.confusion.fn == 0);
    if (rec.collapse)
      art.warnings.push_back("epoch " + std::to_string(epoch) +
                             ": validation predictions collapsed to one class (macro-F1 " +
                             std::to_string(m.f1_macro) + ")");
    rec.val_metric = m.accuracy;
    if (cfg.early_stop_metric == EarlyStopMetric::auc) {
      if (m.auc) {
        rec.val_metric = *m.auc;
      } else if (!warned_auc) {
        art.warnings.push_back("validation AUC undefined (single class); early stopping on accuracy");
        warned_auc = true;
      }
    }
    rec.improved = stopper.update(rec.val_metric);
    if (rec.improved) best = model::clone_params(params);
    art.trace.push_back(rec);
    if (stopper.should_stop()) break;
  }

  art.best_epoch = stopper.best_epoch();
  art.params = std::move(best);
  const auto probs = predict_probs(val_windows, art.params);
  art.flip = calibrate_flip(probs, val_labels);
  const auto calibrated = art.flip ? metrics::flipped(probs) : probs;
  art.threshold = optimize_threshold(calibrated, val_labels);
  return art;
}

template <typename T>
void save_fold_artifacts(const FoldArtifacts<T>& art, const std::filesystem::path& stem) {
  const auto ckpt = std::filesystem::path(stem.string() + ".ckpt");
  const auto sidecar = std::filesystem::path(stem.string() + ".json");
  auto extra = art.sidecar_json();
  model::save_checkpoint(art.params, ckpt, extra);
  extra["checkpoint"] = ckpt.filename().string();
  const auto tmp = std::filesystem::path(sidecar.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot write '" + tmp.string() + "'");
    os << extra.dump(2) << '\n';
    if (!os) fail(ErrorCode::io, "failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, sidecar);
}

#define MG_INSTANTIATE_TRAIN(T)                                                                   \
  template Tensor<T> weighted_bce<T>(const Tensor<T>&, std::span<const int>, double);            \
  template struct FoldArtifacts<T>;                                                               \
  template std::vector<double> predict_probs<T>(const std::vector<const xmd::XmdWindow*>&,        \
                                                const model::MambaGazeParams<T>&);                \
  template FoldArtifacts<T> train_fold<T>(const std::vector<const xmd::XmdWindow*>&,              \
                                          const TrainConfig&, const model::ModelConfig&);         \
  template void save_fold_artifacts<T>(const FoldArtifacts<T>&, const std::filesystem::path&);

MG_INSTANTIATE_TRAIN(float)
MG_INSTANTIATE_TRAIN(double)

#undef MG_INSTANTIATE_TRAIN

}  // namespace mambagaze::train
