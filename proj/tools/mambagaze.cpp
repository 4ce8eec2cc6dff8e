// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mambagaze/mambagaze.h"

namespace {

struct Owned {
  char* s = nullptr;
  ~Owned() { mg_string_free(s); }
};

int report_failure(mg_status st) {
  std::fprintf(stderr, "mambagaze: %s: %s\n", mg_status_name(st), mg_last_error());
  return static_cast<int>(st);
}

const char* c_str_or_null(const std::optional<std::string>& s) {
  return s ? s->c_str() : nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MambaGaze: missingness-aware eye-tracking classification"};
  app.set_version_flag("--version", std::string(mg_version()));
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--seed", seed, "seed for every stochastic component");
  app.add_option("--out", out_dir, "output directory");

  nlohmann::json overlay = nlohmann::json::object();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "raw recordings to XMD windows");
  std::string raw_dir;
  std::optional<std::string> profile;
  pre->add_option("raw_dir", raw_dir, "directory of <participant>/{experiment,baseline,labels}.csv")
      ->required();
  pre->add_option("--schema-profile", profile, "clare, cldrive or generic");

  // synth
  auto* syn = app.add_subcommand("synth", "generate a synthetic window set");
  std::optional<std::size_t> participants, windows, steps;
  std::optional<double> separation;
  syn->add_option("--participants", participants, "number of participants");
  syn->add_option("--windows", windows, "windows per participant");
  syn->add_option("--steps", steps, "steps per window");
  syn->add_option("--separation", separation, "class separation (0 gives a null dataset)");

  // train
  auto* trn = app.add_subcommand("train", "train a model or cross-validate");
  std::string train_manifest;
  std::string train_protocol = "full";
  std::optional<std::size_t> train_k, epochs;
  trn->add_option("manifest", train_manifest, "window manifest or its directory")->required();
  trn->add_option("--protocol", train_protocol, "full, loso or kfold")->capture_default_str();
  trn->add_option("--k", train_k, "folds for kfold");
  trn->add_option("--epochs", epochs, "maximum epochs");

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "cross-validate or score a checkpoint");
  std::string eval_manifest;
  std::optional<std::string> eval_protocol, eval_checkpoint;
  std::optional<std::size_t> eval_k;
  evl->add_option("manifest", eval_manifest, "window manifest or its directory")->required();
  evl->add_option("--protocol", eval_protocol, "loso or kfold (default from config)");
  evl->add_option("--k", eval_k, "folds for kfold");
  evl->add_option("--checkpoint", eval_checkpoint, "score this checkpoint instead");

  // bench
  auto* bnc = app.add_subcommand("bench", "inference latency and throughput");
  std::optional<std::string> bench_checkpoint, power_file;
  std::optional<std::size_t> iterations, warmup, batch, bench_steps;
  double power_scale = 1.0;
  bnc->add_option("--checkpoint", bench_checkpoint, "checkpoint (default: initialized model)");
  bnc->add_option("--iterations", iterations, "measured iterations");
  bnc->add_option("--warmup", warmup, "warmup iterations");
  bnc->add_option("--batch", batch, "windows per iteration");
  bnc->add_option("--steps", bench_steps, "window length");
  bnc->add_option("--power-file", power_file, "file holding an instantaneous power reading");
  bnc->add_option("--power-scale", power_scale, "multiplier from file units to watts")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (seed) overlay["seed"] = *seed;
  if (profile) overlay["preprocess"]["schema_profile"] = *profile;
  if (participants) overlay["synth"]["participants"] = *participants;
  if (windows) overlay["synth"]["windows_per_participant"] = *windows;
  if (steps) overlay["synth"]["steps"] = *steps;
  if (separation) overlay["synth"]["separation"] = *separation;
  if (trn->parsed()) {
    overlay["protocol"]["kind"] = train_protocol;
    if (train_k) overlay["protocol"]["k"] = *train_k;
    if (epochs) overlay["train"]["max_epochs"] = *epochs;
  }
  if (evl->parsed()) {
    if (eval_protocol) overlay["protocol"]["kind"] = *eval_protocol;
    if (eval_k) overlay["protocol"]["k"] = *eval_k;
  }
  if (iterations) overlay["bench"]["iterations"] = *iterations;
  if (warmup) overlay["bench"]["warmup"] = *warmup;
  if (batch) overlay["bench"]["batch_size"] = *batch;
  if (bench_steps) overlay["bench"]["steps"] = *bench_steps;

  Owned resolved;
  const std::string overlay_text = overlay.dump();
  if (auto st = mg_resolve_config(c_str_or_null(config_path), overlay_text.c_str(), &resolved.s);
      st != MG_OK)
    return report_failure(st);

  const bool needs_out = !bnc->parsed();
  if (needs_out && out_dir.empty()) {
    std::fprintf(stderr, "mambagaze: usage: --out is required for this subcommand\n");
    return static_cast<int>(MG_ERR_USAGE);
  }

  Owned result;
  mg_status st = MG_OK;
  if (pre->parsed()) {
    st = mg_preprocess(raw_dir.c_str(), out_dir.c_str(), resolved.s, &result.s);
  } else if (syn->parsed()) {
    st = mg_synth(out_dir.c_str(), resolved.s, &result.s);
  } else if (trn->parsed()) {
    st = mg_train(train_manifest.c_str(), out_dir.c_str(), resolved.s, &result.s);
  } else if (evl->parsed()) {
    st = mg_evaluate(eval_manifest.c_str(), out_dir.c_str(), resolved.s,
                     c_str_or_null(eval_checkpoint), &result.s);
  } else if (bnc->parsed()) {
    st = mg_bench(c_str_or_null(bench_checkpoint), out_dir.empty() ? nullptr : out_dir.c_str(),
                  resolved.s, c_str_or_null(power_file), power_scale, &result.s);
  }
  if (st != MG_OK) return report_failure(st);
  std::fputs(result.s, stdout);
  std::fputc('\n', stdout);
  return 0;
}
