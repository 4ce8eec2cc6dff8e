// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "mambagaze/error.hpp"
#include "json_option.hpp"
#include "mambagaze/ingest.hpp"
#include "mambagaze/rng.hpp"

namespace mambagaze::bench {

using nx::Tensor;

void BenchConfig::validate() const {
  require(batch_size >= 1, ErrorCode::config, "bench.batch_size must be positive");
  require(iterations >= 1, ErrorCode::config, "bench.iterations must be at least 1");
  require(power_interval_ms > 0.0 && std::isfinite(power_interval_ms), ErrorCode::config,
          "bench.power_interval_ms must be positive");
  require(steps >= 1 && width >= 1, ErrorCode::config, "bench input shape must be positive");
}

nlohmann::ordered_json BenchConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["warmup"] = warmup;
  j["iterations"] = iterations;
  j["power_interval_ms"] = power_interval_ms;
  j["steps"] = steps;
  j["width"] = width;
  j["precision"] = nx::precision_name(precision);
  j["seed"] = seed;
  return j;
}

BenchConfig BenchConfig::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::config, "bench config must be a JSON object");
  static const std::array<const char*, 8> known = {"batch_size", "warmup", "iterations",
                                                   "power_interval_ms", "steps", "width",
                                                   "precision", "seed"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::config, "unknown bench option '" + key + "'");
  }
  BenchConfig c;
  try {
    c.batch_size = detail::option(j, "batch_size", c.batch_size);
    c.warmup = detail::option(j, "warmup", c.warmup);
    c.iterations = detail::option(j, "iterations", c.iterations);
    c.power_interval_ms = detail::option(j, "power_interval_ms", c.power_interval_ms);
    c.steps = detail::option(j, "steps", c.steps);
    c.width = detail::option(j, "width", c.width);
    c.seed = detail::option(j, "seed", c.seed);
    if (j.contains("precision")) c.precision = nx::parse_precision(j.at("precision").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("bench config: ") + e.what());
  }
  c.validate();
  return c;
}

FilePowerSampler::FilePowerSampler(std::filesystem::path path, double scale_to_watts)
    : path_(std::move(path)), scale_(scale_to_watts) {}

std::string FilePowerSampler::name() const { return "file:" + path_.string(); }

std::optional<double> FilePowerSampler::read() {
  std::ifstream in(path_);
  if (!in) throw Error(ErrorCode::io, "cannot read power source '" + path_.string() + "'");
  double raw = 0.0;
  if (!(in >> raw) || !std::isfinite(raw))
    throw Error(ErrorCode::io, "power source '" + path_.string() + "' holds no number");
  return raw * scale_;
}

PowerMonitor::PowerMonitor(PowerSampler& sampler,
                           std::chrono::duration<double, std::milli> interval)
    : sampler_(sampler), interval_(interval) {}

PowerMonitor::~PowerMonitor() { stop(); }

void PowerMonitor::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { run(); });
}

void PowerMonitor::stop() {
  running_.store(false);
  if (thread_.joinable()) thread_.join();
}

std::vector<PowerSample> PowerMonitor::samples() const {
  std::lock_guard lock(mutex_);
  return samples_;
}

void PowerMonitor::run() {
  using clock = std::chrono::steady_clock;
  const auto begin = clock::now();
  auto next = begin;
  while (running_.load()) {
    try {
      if (const auto w = sampler_.read()) {
        const double t = std::chrono::duration<double>(clock::now() - begin).count();
        std::lock_guard lock(mutex_);
        samples_.push_back({t, *w});
      }
    } catch (...) {
      ++failures_;
    }
    next += std::chrono::duration_cast<clock::duration>(interval_);
    // Sleep in short slices so stop() is not delayed by a long interval.
    while (running_.load() && clock::now() < next)
      std::this_thread::sleep_for(std::min<clock::duration>(next - clock::now(),
                                                            std::chrono::milliseconds(5)));
  }
}

LatencyStats latency_stats(std::vector<double> samples_ms) {
  LatencyStats s;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  s.median_ms = ingest::median_sorted(samples_ms);
  s.p95_ms = ingest::percentile_sorted(samples_ms, 0.95);
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  return s;
}

nlohmann::ordered_json BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "mambagaze.bench";
  j["version"] = 1;
  j["config"] = config.to_json();
  j["model"] = model;
  j["warmup_runs"] = warmup_runs;
  j["measured_runs"] = measured_runs;
  j["latency_ms"] = {{"mean", latency.mean_ms}, {"median", latency.median_ms},
                     {"p95", latency.p95_ms},   {"min", latency.min_ms},
                     {"max", latency.max_ms}};
  j["fps"] = fps;
  nlohmann::ordered_json power;
  power["sampler"] = power_sampler;
  power["samples"] = power_samples;
  power["failures"] = power_failures;
  if (mean_power_watts) power["mean_watts"] = *mean_power_watts;
  j["power"] = power;
  j["host"] = host;
  j["latencies_ms"] = latencies_ms;
  return j;
}

nlohmann::ordered_json host_descriptor() {
  nlohmann::ordered_json h;
  utsname u{};
  if (uname(&u) == 0) {
    h["os"] = u.sysname;
    h["kernel"] = u.release;
    h["arch"] = u.machine;
  }
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line, model;
  std::size_t cores = 0;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("processor", 0) == 0) ++cores;
    if (model.empty() && line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(line.find_first_not_of(' ', colon + 1));
    }
  }
  h["cpu"] = model.empty() ? "unknown" : model;
  h["logical_cores"] = cores != 0 ? cores : std::thread::hardware_concurrency();
  return h;
}

template <typename T>
BenchReport benchmark_inference(const model::MambaGazeParams<T>& params, const BenchConfig& cfg,
                                PowerSampler& power) {
  cfg.validate();
  require(cfg.width == params.config.input_dim, ErrorCode::dimension,
          "bench width " + std::to_string(cfg.width) + " does not match model input_dim " +
              std::to_string(params.config.input_dim));
  Rng rng(cfg.seed);
  std::vector<Tensor<T>> inputs;
  for (std::size_t b = 0; b < cfg.batch_size; ++b) {
    std::vector<T> data(cfg.steps * cfg.width);
    for (auto& v : data) v = static_cast<T>(rng.normal());
    inputs.push_back(Tensor<T>::from({cfg.steps, cfg.width}, std::move(data)));
  }

  BenchReport report;
  report.config = cfg;
  report.host = host_descriptor();
  report.model = params.config.to_json();
  report.model["parameters"] = params.parameter_count();
  report.power_sampler = power.name();

  auto run_once = [&](std::size_t iteration) {
    for (const auto& z : inputs) {
      const auto pred = model::predict(z, params);
      if (!std::isfinite(static_cast<double>(pred.probability)))
        fail(ErrorCode::numeric_domain, "non-finite model output at benchmark iteration " +
                                            std::to_string(iteration));
    }
  };

  for (std::size_t i = 0; i < cfg.warmup; ++i) {
    run_once(i);
    ++report.warmup_runs;
  }
  PowerMonitor monitor(power, std::chrono::duration<double, std::milli>(cfg.power_interval_ms));
  monitor.start();
  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    const auto t0 = clock::now();
    run_once(cfg.warmup + i);
    const auto t1 = clock::now();
    report.latencies_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    ++report.measured_runs;
  }
  monitor.stop();

  report.latency = latency_stats(report.latencies_ms);
  report.fps = report.latency.mean_ms > 0.0
                   ? static_cast<double>(cfg.batch_size) * 1000.0 / report.latency.mean_ms
                   : 0.0;
  const auto samples = monitor.samples();
  report.power_samples = samples.size();
  report.power_failures = monitor.failures();
  if (!samples.empty()) {
    double sum = 0.0;
    for (const auto& s : samples) sum += s.watts;
    report.mean_power_watts = sum / static_cast<double>(samples.size());
  }
  return report;
}

template BenchReport benchmark_inference<float>(const model::MambaGazeParams<float>&,
                                                const BenchConfig&, PowerSampler&);
template BenchReport benchmark_inference<double>(const model::MambaGazeParams<double>&,
                                                 const BenchConfig&, PowerSampler&);

}  // namespace mambagaze::bench
