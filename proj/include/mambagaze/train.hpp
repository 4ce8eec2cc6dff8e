// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/model.hpp"
#include "mambagaze/tensor.hpp"
#include "mambagaze/xmd.hpp"

namespace mambagaze::train {

using nx::Tensor;

/// How the positive-class loss weight follows from the training label counts.
enum class WeightingMode {
  inverse_frequency,  // n_neg / n_pos
  direct_ratio,       // n_pos / n_neg
  none,               // 1
};

enum class EarlyStopMetric { accuracy, auc };

const char* weighting_mode_name(WeightingMode mode) noexcept;
WeightingMode parse_weighting_mode(const std::string& name);
const char* early_stop_metric_name(EarlyStopMetric metric) noexcept;
EarlyStopMetric parse_early_stop_metric(const std::string& name);

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 0.0;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 100;
  double clip_norm = 0.5;
  std::size_t patience = 15;
  double val_fraction = 0.05;
  EarlyStopMetric early_stop_metric = EarlyStopMetric::accuracy;
  std::uint64_t seed = 0;
  WeightingMode weighting_mode = WeightingMode::inverse_frequency;
  nx::Precision precision = nx::Precision::f32;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Zero counts are a degenerate_fold error.
double compute_pos_weight(std::size_t n_pos, std::size_t n_neg, WeightingMode mode);

/// mean_i [ w y_i softplus(-x_i) + (1 - y_i) softplus(x_i) ], which equals
/// -mean[w y log sigmoid(x) + (1 - y) log(1 - sigmoid(x))] without overflow.
template <typename T>
Tensor<T> weighted_bce(const Tensor<T>& logits, std::span<const int> labels, double pos_weight);

/// Brute-force search over {0.5, midpoints of sorted unique probabilities,
/// min/2, (max+1)/2}. Ties go to the candidate nearest 0.5, then the smaller.
double optimize_threshold(std::span<const double> probs, std::span<const int> labels);

/// True iff the validation AUC is defined and below 0.5.
bool calibrate_flip(std::span<const double> probs, std::span<const int> labels);

/// Tracks the best value of a higher-is-better metric.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);

  /// Returns true when `value` improves on the best so far.
  bool update(double value);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_value() const noexcept { return best_; }
  std::size_t epochs_seen() const noexcept { return seen_; }

 private:
  std::size_t patience_;
  std::size_t seen_ = 0;
  std::size_t since_best_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> val_auc;
  double val_f1_macro = 0.0;
  bool improved = false;
  bool collapse = false;  // validation predictions all in one class

  nlohmann::ordered_json to_json() const;
};

template <typename T>
struct FoldArtifacts {
  model::MambaGazeParams<T> params;
  double threshold = 0.5;
  bool flip = false;
  double pos_weight = 1.0;
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
  std::vector<std::string> val_participants;  // empty for a window-level split
  std::vector<std::string> warnings;

  nlohmann::ordered_json sidecar_json() const;
};

/// Window indices held out for validation.
struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::string> val_participants;
};

/// Whole participants when at least two remain for training and one
/// participant fits in the validation budget; otherwise a class-stratified
/// window-level split.
ValidationSplit split_validation(const std::vector<const xmd::XmdWindow*>& windows,
                                 double val_fraction, std::uint64_t seed);

/// Probabilities for each window in inference mode.
template <typename T>
std::vector<double> predict_probs(const std::vector<const xmd::XmdWindow*>& windows,
                                  const model::MambaGazeParams<T>& params);

/// Trains one fold end to end, including threshold and flip calibration on
/// the validation split.
template <typename T>
FoldArtifacts<T> train_fold(const std::vector<const xmd::XmdWindow*>& windows,
                            const TrainConfig& cfg, const model::ModelConfig& model_cfg);

/// `<stem>.ckpt` plus `<stem>.json`.
template <typename T>
void save_fold_artifacts(const FoldArtifacts<T>& artifacts, const std::filesystem::path& stem);

}  // namespace mambagaze::train
