// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/mambagaze.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "mambagaze/config.hpp"
#include "mambagaze/error.hpp"
#include "mambagaze/model.hpp"
#include "mambagaze/pipeline.hpp"

using namespace mambagaze;

struct mg_model {
  model::MambaGazeParams<float> params;
};

namespace {

thread_local std::string last_error;

mg_status to_status(ErrorCode code) { return static_cast<mg_status>(static_cast<int>(code)); }

template <typename F>
mg_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return MG_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MG_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return MG_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::usage, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string(what) + " is not valid JSON: " + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

config::RunConfig run_config(const char* config_json) {
  return config::RunConfig::from_json(parse_json(config_json, "config"));
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

void emit(const nlohmann::ordered_json& j, char** out) {
  if (out != nullptr) *out = dup_string(j.dump(2));
}

}  // namespace

extern "C" {

const char* mg_version(void) { return "1.0.0"; }

const char* mg_status_name(mg_status status) {
  return error_code_name(static_cast<ErrorCode>(static_cast<int>(status)));
}

const char* mg_last_error(void) { return last_error.c_str(); }

void mg_string_free(char* s) { std::free(s); }

mg_status mg_model_create(const char* config_json, mg_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    const auto j = parse_json(config_json, "model config");
    const auto cfg = model::ModelConfig::from_json(j);
    auto m = std::make_unique<mg_model>();
    m->params = model::init_params<float>(cfg);
    *out = m.release();
  });
}

mg_status mg_model_load(const char* checkpoint_path, mg_model** out) {
  return guarded([&] {
    need(out, "out");
    need(checkpoint_path, "checkpoint_path");
    *out = nullptr;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(checkpoint_path, ec))
      fail(ErrorCode::io, std::string("checkpoint '") + checkpoint_path + "' does not exist");
    auto m = std::make_unique<mg_model>();
    m->params = model::load_checkpoint<float>(checkpoint_path).params;
    *out = m.release();
  });
}

mg_status mg_model_save(const mg_model* model, const char* checkpoint_path) {
  return guarded([&] {
    need(model, "model");
    need(checkpoint_path, "checkpoint_path");
    model::save_checkpoint(model->params, checkpoint_path, nlohmann::ordered_json::object());
  });
}

void mg_model_destroy(mg_model* model) { delete model; }

mg_status mg_model_param_count(const mg_model* model, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->params.parameter_count();
  });
}

mg_status mg_model_input_dim(const mg_model* model, size_t* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->params.config.input_dim;
  });
}

mg_status mg_model_predict(const mg_model* model, const float* z, size_t steps, size_t width,
                           double* probability, double* alpha_forward, double* alpha_backward) {
  return guarded([&] {
    need(model, "model");
    need(z, "z");
    need(probability, "probability");
    if (steps == 0) fail(ErrorCode::dimension, "steps must be positive");
    if (width != model->params.config.input_dim)
      fail(ErrorCode::dimension, "width " + std::to_string(width) +
                                     " does not match model input_dim " +
                                     std::to_string(model->params.config.input_dim));
    std::vector<float> data(z, z + steps * width);
    const auto x = nx::Tensor<float>::from({steps, width}, std::move(data));
    const auto pred = model::predict(x, model->params);
    *probability = pred.probability;
    if (alpha_forward != nullptr)
      for (size_t t = 0; t < steps; ++t) alpha_forward[t] = pred.alpha_forward[t];
    if (alpha_backward != nullptr)
      for (size_t t = 0; t < steps; ++t) alpha_backward[t] = pred.alpha_backward[t];
  });
}

mg_status mg_resolve_config(const char* config_path, const char* overlay_json,
                            char** resolved_json) {
  return guarded([&] {
    need(resolved_json, "resolved_json");
    *resolved_json = nullptr;
    nlohmann::json base = nlohmann::json::object();
    if (config_path != nullptr && *config_path != '\0') base = read_json_file(config_path);
    const auto merged = config::merge_config(base, parse_json(overlay_json, "overlay"));
    emit(config::RunConfig::from_json(merged).to_json(), resolved_json);
  });
}

mg_status mg_preprocess(const char* raw_dir, const char* out_dir, const char* config_json,
                        char** result_json) {
  return guarded([&] {
    need(raw_dir, "raw_dir");
    need(out_dir, "out_dir");
    emit(pipeline::run_preprocess(raw_dir, out_dir, run_config(config_json)), result_json);
  });
}

mg_status mg_synth(const char* out_dir, const char* config_json, char** result_json) {
  return guarded([&] {
    need(out_dir, "out_dir");
    emit(pipeline::run_synth(out_dir, run_config(config_json)), result_json);
  });
}

mg_status mg_train(const char* manifest, const char* out_dir, const char* config_json,
                   char** result_json) {
  return guarded([&] {
    need(manifest, "manifest");
    need(out_dir, "out_dir");
    emit(pipeline::run_train(manifest, out_dir, run_config(config_json)), result_json);
  });
}

mg_status mg_evaluate(const char* manifest, const char* out_dir, const char* config_json,
                      const char* checkpoint, char** result_json) {
  return guarded([&] {
    need(manifest, "manifest");
    need(out_dir, "out_dir");
    emit(pipeline::run_evaluate(manifest, out_dir, run_config(config_json), opt_path(checkpoint)),
         result_json);
  });
}

mg_status mg_bench(const char* checkpoint, const char* out_dir, const char* config_json,
                   const char* power_file, double power_scale, char** result_json) {
  return guarded([&] {
    emit(pipeline::run_bench(opt_path(checkpoint), opt_path(out_dir), run_config(config_json),
                             opt_path(power_file), power_scale),
         result_json);
  });
}

}  // extern "C"
