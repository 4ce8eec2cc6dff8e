// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/model.hpp"
#include "mambagaze/tensor.hpp"

namespace mambagaze::bench {

struct BenchConfig {
  std::size_t batch_size = 1;
  std::size_t warmup = 20;
  std::size_t iterations = 100;
  double power_interval_ms = 50.0;
  std::size_t steps = 500;
  std::size_t width = 30;
  nx::Precision precision = nx::Precision::f32;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static BenchConfig from_json(const nlohmann::json& j);
};

struct PowerSample {
  double seconds = 0.0;  // since sampling started
  double watts = 0.0;
};

/// Source of instantaneous power readings. Implementations may throw; the
/// monitor counts failures and carries on.
class PowerSampler {
 public:
  virtual ~PowerSampler() = default;
  virtual std::string name() const = 0;
  /// One reading in watts, or nullopt when the source has nothing.
  virtual std::optional<double> read() = 0;
};

/// Produces no readings; the report then omits power.
class NullPowerSampler final : public PowerSampler {
 public:
  std::string name() const override { return "null"; }
  std::optional<double> read() override { return std::nullopt; }
};

/// Reads a sysfs-style text file holding a single number, scaled to watts
/// (e.g. 1e-6 for microwatt counters such as hwmon power*_input).
class FilePowerSampler final : public PowerSampler {
 public:
  FilePowerSampler(std::filesystem::path path, double scale_to_watts);
  std::string name() const override;
  std::optional<double> read() override;

 private:
  std::filesystem::path path_;
  double scale_;
};

/// Polls a sampler on a background thread at a fixed interval.
class PowerMonitor {
 public:
  PowerMonitor(PowerSampler& sampler, std::chrono::duration<double, std::milli> interval);
  ~PowerMonitor();
  PowerMonitor(const PowerMonitor&) = delete;
  PowerMonitor& operator=(const PowerMonitor&) = delete;

  void start();
  void stop();
  std::vector<PowerSample> samples() const;
  std::size_t failures() const noexcept { return failures_.load(); }

 private:
  void run();

  PowerSampler& sampler_;
  std::chrono::duration<double, std::milli> interval_;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> failures_{0};
  mutable std::mutex mutex_;
  std::vector<PowerSample> samples_;
  std::thread thread_;
};

struct LatencyStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

/// Linear-interpolation percentiles over the measured iterations.
LatencyStats latency_stats(std::vector<double> samples_ms);

struct BenchReport {
  BenchConfig config;
  std::size_t warmup_runs = 0;
  std::size_t measured_runs = 0;
  std::vector<double> latencies_ms;  // per measured iteration
  LatencyStats latency;
  double fps = 0.0;  // windows per second, batch_size * 1000 / mean
  std::optional<double> mean_power_watts;
  std::size_t power_samples = 0;
  std::size_t power_failures = 0;
  std::string power_sampler;
  nlohmann::ordered_json host;
  nlohmann::ordered_json model;

  nlohmann::ordered_json to_json() const;
};

/// OS, kernel, architecture, CPU model and core count.
nlohmann::ordered_json host_descriptor();

/// Times model forward passes on fixed seeded windows [steps, width]; each
/// iteration runs `batch_size` windows. Warmup runs are discarded.
template <typename T>
BenchReport benchmark_inference(const model::MambaGazeParams<T>& params, const BenchConfig& cfg,
                                PowerSampler& power);

}  // namespace mambagaze::bench
