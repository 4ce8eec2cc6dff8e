// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace mambagaze::metrics {

struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when labels hold a single class
  double f1_positive = 0.0;
  double f1_negative = 0.0;
  double f1_macro = 0.0;
  Confusion confusion;
  double threshold = 0.5;
  bool flip = false;

  nlohmann::ordered_json to_json() const;
};

/// Positive iff p >= threshold.
Confusion confusion_at(std::span<const double> probs, std::span<const int> labels,
                       double threshold);

double accuracy_at(std::span<const double> probs, std::span<const int> labels, double threshold);

/// Fraction of (positive, negative) pairs ranked correctly; ties earn 1/2.
/// Absent when either class is missing.
std::optional<double> auc_pairwise(std::span<const double> scores, std::span<const int> labels);

/// F1 of one class; 0 when precision + recall is 0.
double f1_score(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg);

/// p -> 1 - p.
std::vector<double> flipped(std::span<const double> probs);

/// Applies the flip, then the threshold. Empty input is a contract error.
MetricsReport compute_metrics(std::span<const double> probs, std::span<const int> labels,
                              double threshold, bool flip);

}  // namespace mambagaze::metrics
