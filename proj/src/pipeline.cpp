// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>

#include "mambagaze/bench.hpp"
#include "mambagaze/error.hpp"
#include "mambagaze/eval.hpp"
#include "mambagaze/ingest.hpp"
#include "mambagaze/metrics.hpp"
#include "mambagaze/synth.hpp"
#include "mambagaze/train.hpp"
#include "mambagaze/xmd.hpp"

namespace mambagaze::pipeline {

StagedDir::StagedDir(fs::path out_dir) : out_(std::move(out_dir)) {
  require(!out_.empty(), ErrorCode::usage, "an output directory is required");
  std::error_code ec;
  if (fs::exists(out_, ec)) {
    require(fs::is_directory(out_, ec), ErrorCode::io,
            "output path '" + out_.string() + "' exists and is not a directory");
  } else {
    fs::create_directories(out_, ec);
    if (ec) fail(ErrorCode::io, "cannot create '" + out_.string() + "': " + ec.message());
    created_out_ = true;
  }
  staging_ = out_ / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging_, ec);
  fs::create_directories(staging_, ec);
  if (ec) fail(ErrorCode::io, "cannot create '" + staging_.string() + "': " + ec.message());
}

StagedDir::~StagedDir() {
  std::error_code ec;
  fs::remove_all(staging_, ec);
  if (!committed_ && created_out_) fs::remove(out_, ec);  // only succeeds when empty
}

void StagedDir::commit() {
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(staging_)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& src : entries) {
    const auto dst = out_ / src.filename();
    std::error_code ec;
    if (fs::is_directory(dst, ec)) fs::remove_all(dst, ec);
    fs::rename(src, dst, ec);
    if (ec) fail(ErrorCode::io, "cannot move '" + src.string() + "' to '" + dst.string() +
                                    "': " + ec.message());
  }
  committed_ = true;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot write '" + tmp.string() + "'");
    os << j.dump(2) << '\n';
    if (!os) fail(ErrorCode::io, "failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

fs::path resolve_manifest(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return path / "manifest.json";
  return path;
}

namespace {

void check_width(const xmd::WindowSet& set, const model::ModelConfig& m) {
  require(!set.windows.empty(), ErrorCode::contract, "window set is empty");
  const std::size_t width = set.windows.front().width;
  require(width == m.input_dim, ErrorCode::dimension,
          "windows have width " + std::to_string(width) + " but model.input_dim is " +
              std::to_string(m.input_dim));
}

std::vector<eval::FoldSplit> make_splits(const std::vector<xmd::XmdWindow>& windows,
                                         const config::RunConfig& cfg) {
  const auto ids = eval::participants_of(windows);
  if (cfg.protocol.kind == "loso") return eval::make_loso_splits(ids);
  if (cfg.protocol.kind == "kfold") return eval::make_kfold_splits(ids, cfg.protocol.k, cfg.seed);
  fail(ErrorCode::usage, "protocol '" + cfg.protocol.kind + "' does not cross-validate");
}

template <typename T>
nlohmann::ordered_json cross_validate(const xmd::WindowSet& set, const fs::path& staging,
                                      const config::RunConfig& cfg) {
  eval::ProtocolOptions options;
  options.artifact_dir = staging / "folds";
  fs::create_directories(*options.artifact_dir);
  const auto report = eval::run_protocol<T>(set.windows, make_splits(set.windows, cfg), cfg.train,
                                            cfg.model, options);
  return report.to_json(cfg.to_json());
}

template <typename T>
nlohmann::ordered_json train_full(const xmd::WindowSet& set, const fs::path& staging,
                                  const config::RunConfig& cfg) {
  std::vector<const xmd::XmdWindow*> all;
  for (const auto& w : set.windows) all.push_back(&w);
  const auto art = train::train_fold<T>(all, cfg.train, cfg.model);
  train::save_fold_artifacts(art, staging / "model");
  std::vector<double> probs = train::predict_probs(all, art.params);
  std::vector<int> labels;
  for (const auto* w : all) labels.push_back(w->label);
  const auto m = metrics::compute_metrics(probs, labels, art.threshold, art.flip);

  nlohmann::ordered_json j;
  j["format"] = eval::kReportFormat;
  j["version"] = eval::kReportVersion;
  j["protocol"] = "full";
  j["config"] = cfg.to_json();
  j["checkpoint"] = "model.ckpt";
  j["training_metrics"] = m.to_json();
  j["fold"] = art.sidecar_json();
  return j;
}

template <typename T>
nlohmann::ordered_json score_checkpoint(const xmd::WindowSet& set, const fs::path& checkpoint,
                                        const config::RunConfig& cfg) {
  auto loaded = model::load_checkpoint<T>(checkpoint);
  const auto& extra = loaded.header.contains("extra") ? loaded.header.at("extra") : nlohmann::json();
  const double threshold = extra.is_object() ? extra.value("threshold", 0.5) : 0.5;
  const bool flip = extra.is_object() ? extra.value("flip", false) : false;
  check_width(set, loaded.params.config);
  auto result = eval::evaluate_model(set.windows, loaded.params, threshold, flip);

  nlohmann::ordered_json j;
  j["format"] = eval::kReportFormat;
  j["version"] = eval::kReportVersion;
  j["protocol"] = "checkpoint";
  j["config"] = cfg.to_json();
  j["checkpoint"] = checkpoint.string();
  j["model"] = loaded.params.config.to_json();
  const auto ids = eval::participants_of(set.windows);
  nlohmann::ordered_json agg;
  agg["windows"] = set.windows.size();
  agg["participants"] = ids;
  agg["metrics"] = result.metrics.to_json();
  j["aggregate"] = agg;
  j["attention"] = {{"forward_mean", result.alpha_forward_mean},
                    {"backward_mean", result.alpha_backward_mean}};
  return j;
}

}  // namespace

nlohmann::ordered_json run_preprocess(const fs::path& raw_dir, const fs::path& out_dir,
                                      const config::RunConfig& cfg) {
  std::error_code ec;
  if (!fs::is_directory(raw_dir, ec))
    fail(ErrorCode::io, "raw directory '" + raw_dir.string() + "' does not exist");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(raw_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    fail(ErrorCode::empty_recording,
         "raw directory '" + raw_dir.string() + "' holds no participant folders");

  std::vector<xmd::XmdWindow> windows;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::array();
  for (const auto& dir : dirs) {
    const std::string pid = dir.filename().string();
    const auto experiment_path = dir / "experiment.csv";
    const auto baseline_path = dir / "baseline.csv";
    const auto labels_path = dir / "labels.csv";
    if (!fs::exists(experiment_path))
      fail(ErrorCode::io, "participant '" + pid + "' has no experiment.csv");
    if (!fs::exists(baseline_path))
      fail(ErrorCode::contract, "participant '" + pid + "' has no baseline session (baseline.csv)");
    if (!fs::exists(labels_path))
      fail(ErrorCode::io, "participant '" + pid + "' has no labels.csv");
    auto experiment = ingest::parse_recording(experiment_path, cfg.schema_profile, pid,
                                              ingest::SessionKind::experiment);
    auto baseline = ingest::parse_recording(baseline_path, cfg.schema_profile, pid,
                                            ingest::SessionKind::baseline);
    const auto labels = xmd::parse_labels(labels_path, cfg.preprocess.label_interval,
                                          cfg.preprocess.binarize_threshold);
    auto result = xmd::process_participant(std::move(experiment), std::move(baseline), labels,
                                           cfg.preprocess);
    provenance.push_back(result.provenance.to_json());
    windows.insert(windows.end(), std::make_move_iterator(result.windows.begin()),
                   std::make_move_iterator(result.windows.end()));
  }
  if (windows.empty())
    fail(ErrorCode::empty_recording, "no labelled windows were produced from '" +
                                         raw_dir.string() + "'");

  nlohmann::ordered_json extra;
  extra["source"] = "raw";
  extra["schema_profile"] = ingest::profile_name(cfg.schema_profile);
  extra["pipeline"] = cfg.preprocess.to_json();
  extra["config"] = cfg.to_json();
  extra["provenance"] = provenance;

  StagedDir staged(out_dir);
  xmd::save_windows(windows, staged.path(), extra);
  staged.commit();

  nlohmann::ordered_json summary;
  summary["manifest"] = (out_dir / "manifest.json").string();
  summary["windows"] = windows.size();
  summary["participants"] = dirs.size();
  std::size_t pos = 0;
  for (const auto& w : windows) pos += w.label == 1;
  summary["label_distribution"] = {{"0", windows.size() - pos}, {"1", pos}};
  summary["provenance"] = provenance;
  return summary;
}

nlohmann::ordered_json run_synth(const fs::path& out_dir, const config::RunConfig& cfg) {
  auto result = synth::generate_synthetic(cfg.synth);
  result.manifest_extra["config"] = cfg.to_json();
  StagedDir staged(out_dir);
  xmd::save_windows(result.windows, staged.path(), result.manifest_extra);
  staged.commit();

  nlohmann::ordered_json summary;
  summary["manifest"] = (out_dir / "manifest.json").string();
  summary["windows"] = result.windows.size();
  summary["participants"] = result.participants.size();
  summary["null_dataset"] = cfg.synth.is_null();
  std::size_t pos = 0;
  for (const auto& w : result.windows) pos += w.label == 1;
  summary["label_distribution"] = {{"0", result.windows.size() - pos}, {"1", pos}};
  return summary;
}

nlohmann::ordered_json run_train(const fs::path& manifest, const fs::path& out_dir,
                                 const config::RunConfig& cfg) {
  const auto set = xmd::load_windows(resolve_manifest(manifest));
  check_width(set, cfg.model);
  StagedDir staged(out_dir);
  const bool f64 = cfg.train.precision == nx::Precision::f64;
  nlohmann::ordered_json report;
  if (cfg.protocol.kind == "full") {
    report = f64 ? train_full<double>(set, staged.path(), cfg)
                 : train_full<float>(set, staged.path(), cfg);
  } else {
    report = f64 ? cross_validate<double>(set, staged.path(), cfg)
                 : cross_validate<float>(set, staged.path(), cfg);
  }
  write_json(staged.path() / "report.json", report);
  staged.commit();
  return report;
}

nlohmann::ordered_json run_evaluate(const fs::path& manifest, const fs::path& out_dir,
                                    const config::RunConfig& cfg,
                                    const std::optional<fs::path>& checkpoint) {
  const auto set = xmd::load_windows(resolve_manifest(manifest));
  const bool f64 = cfg.train.precision == nx::Precision::f64;
  nlohmann::ordered_json report;
  if (checkpoint) {
    std::error_code ec;
    if (!fs::is_regular_file(*checkpoint, ec))
      fail(ErrorCode::io, "checkpoint '" + checkpoint->string() + "' does not exist");
    StagedDir staged(out_dir);
    report = f64 ? score_checkpoint<double>(set, *checkpoint, cfg)
                 : score_checkpoint<float>(set, *checkpoint, cfg);
    write_json(staged.path() / "report.json", report);
    staged.commit();
    return report;
  }
  if (cfg.protocol.kind == "full")
    fail(ErrorCode::usage, "evaluate needs protocol loso or kfold, or a checkpoint");
  check_width(set, cfg.model);
  StagedDir staged(out_dir);
  report = f64 ? cross_validate<double>(set, staged.path(), cfg)
               : cross_validate<float>(set, staged.path(), cfg);
  write_json(staged.path() / "report.json", report);
  staged.commit();
  return report;
}

nlohmann::ordered_json run_bench(const std::optional<fs::path>& checkpoint,
                                 const std::optional<fs::path>& out_dir,
                                 const config::RunConfig& cfg,
                                 const std::optional<fs::path>& power_file, double power_scale) {
  std::unique_ptr<bench::PowerSampler> sampler;
  if (power_file) {
    sampler = std::make_unique<bench::FilePowerSampler>(*power_file, power_scale);
  } else {
    sampler = std::make_unique<bench::NullPowerSampler>();
  }
  auto run = [&](auto tag) {
    using T = decltype(tag);
    model::MambaGazeParams<T> params;
    std::string source = "initialized";
    if (checkpoint) {
      std::error_code ec;
      if (!fs::is_regular_file(*checkpoint, ec))
        fail(ErrorCode::io, "checkpoint '" + checkpoint->string() + "' does not exist");
      params = model::load_checkpoint<T>(*checkpoint).params;
      source = checkpoint->string();
    } else {
      params = model::init_params<T>(cfg.model);
    }
    bench::BenchConfig bc = cfg.bench;
    bc.width = params.config.input_dim;
    auto report = bench::benchmark_inference(params, bc, *sampler).to_json();
    report["model"]["source"] = source;
    return report;
  };
  nlohmann::ordered_json report =
      cfg.bench.precision == nx::Precision::f64 ? run(double{}) : run(float{});
  if (out_dir) {
    StagedDir staged(*out_dir);
    write_json(staged.path() / "bench.json", report);
    staged.commit();
  }
  return report;
}

}  // namespace mambagaze::pipeline
