// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/metrics.hpp"
#include "mambagaze/model.hpp"
#include "mambagaze/train.hpp"
#include "mambagaze/xmd.hpp"

namespace mambagaze::eval {

enum class Protocol { loso, kfold };

const char* protocol_name(Protocol p) noexcept;
Protocol parse_protocol(const std::string& name);

struct FoldSplit {
  std::size_t fold_id = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  Protocol protocol = Protocol::loso;
};

/// Sorted unique participant ids of a window set.
std::vector<std::string> participants_of(const std::vector<xmd::XmdWindow>& windows);

/// Fold i tests participant i (ids sorted). Fewer than 2 is a protocol error.
std::vector<FoldSplit> make_loso_splits(std::vector<std::string> participants);

/// Participants shuffled by seed, then cut into k groups whose sizes differ
/// by at most one; group i is fold i's test set. Requires 2 <= k <= N.
std::vector<FoldSplit> make_kfold_splits(std::vector<std::string> participants, std::size_t k,
                                         std::uint64_t seed);

/// Throws a protocol error unless train and test are disjoint in every fold
/// and each participant is tested exactly once.
void check_splits(const std::vector<FoldSplit>& splits,
                  const std::vector<std::string>& participants);

struct ProtocolOptions {
  /// When set, each fold's checkpoint and sidecar go to `<dir>/fold_<id>`.
  std::optional<std::filesystem::path> artifact_dir;
};

struct FoldResult {
  FoldSplit split;
  bool degenerate = false;
  std::string error;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  metrics::MetricsReport metrics;
  double pos_weight = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<double> alpha_forward_mean;  // mean attention profile over test windows
  std::vector<double> alpha_backward_mean;
  std::vector<train::EpochRecord> trace;
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population spread over folds
  std::size_t count = 0;
};

struct ProtocolReport {
  Protocol protocol = Protocol::loso;
  std::vector<FoldResult> folds;
  std::size_t degenerate_folds = 0;
  std::size_t auc_undefined = 0;
  Summary accuracy, auc, f1_positive, f1_macro;

  nlohmann::ordered_json to_json(const nlohmann::ordered_json& config_echo) const;
};

Summary summarize(const std::vector<double>& values);

/// For each fold: train on the fold's training participants, calibrate on
/// their validation split, evaluate on the test participants.
template <typename T>
ProtocolReport run_protocol(const std::vector<xmd::XmdWindow>& windows,
                            const std::vector<FoldSplit>& splits, const train::TrainConfig& cfg,
                            const model::ModelConfig& model_cfg,
                            const ProtocolOptions& options = {});

/// Scores a trained model on a window set with a fixed threshold and flip.
template <typename T>
FoldResult evaluate_model(const std::vector<xmd::XmdWindow>& windows,
                          const model::MambaGazeParams<T>& params, double threshold, bool flip);

inline constexpr const char* kReportFormat = "mambagaze.report";
inline constexpr int kReportVersion = 1;

}  // namespace mambagaze::eval
