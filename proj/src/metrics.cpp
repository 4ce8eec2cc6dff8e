// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/metrics.hpp"

#include <string>

#include "mambagaze/error.hpp"

namespace mambagaze::metrics {

namespace {

void check_inputs(std::span<const double> probs, std::span<const int> labels) {
  require(probs.size() == labels.size(), ErrorCode::dimension,
          "scores and labels differ in length (" + std::to_string(probs.size()) + " vs " +
              std::to_string(labels.size()) + ")");
  for (int y : labels)
    if (y != 0 && y != 1) fail(ErrorCode::contract, "labels must be 0 or 1");
}

}  // namespace

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["auc"] = auc ? nlohmann::ordered_json(*auc) : nlohmann::ordered_json(nullptr);
  j["f1_positive"] = f1_positive;
  j["f1_negative"] = f1_negative;
  j["f1_macro"] = f1_macro;
  j["confusion"] = {{"tp", confusion.tp}, {"tn", confusion.tn}, {"fp", confusion.fp},
                    {"fn", confusion.fn}};
  j["threshold"] = threshold;
  j["flip"] = flip;
  return j;
}

Confusion confusion_at(std::span<const double> probs, std::span<const int> labels,
                       double threshold) {
  check_inputs(probs, labels);
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i] == 1) {
      pred ? ++c.tp : ++c.fn;
    } else {
      pred ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double accuracy_at(std::span<const double> probs, std::span<const int> labels, double threshold) {
  const Confusion c = confusion_at(probs, labels, threshold);
  if (c.total() == 0) return 0.0;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::optional<double> auc_pairwise(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty()) return std::nullopt;
  double credit = 0.0;
  for (double p : pos)
    for (double n : neg) credit += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return credit / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double f1_score(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg) {
  const double denom = 2.0 * static_cast<double>(true_pos) + static_cast<double>(false_pos) +
                       static_cast<double>(false_neg);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(true_pos) / denom;
}

std::vector<double> flipped(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = 1.0 - probs[i];
  return out;
}

MetricsReport compute_metrics(std::span<const double> probs, std::span<const int> labels,
                              double threshold, bool flip) {
  require(!probs.empty(), ErrorCode::contract, "compute_metrics needs at least one prediction");
  const std::vector<double> p = flip ? flipped(probs) : std::vector<double>(probs.begin(), probs.end());
  MetricsReport r;
  r.threshold = threshold;
  r.flip = flip;
  r.confusion = confusion_at(p, labels, threshold);
  const Confusion& c = r.confusion;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.auc = auc_pairwise(p, labels);
  r.f1_positive = f1_score(c.tp, c.fp, c.fn);
  r.f1_negative = f1_score(c.tn, c.fn, c.fp);
  r.f1_macro = 0.5 * (r.f1_positive + r.f1_negative);
  return r;
}

}  // namespace mambagaze::metrics
