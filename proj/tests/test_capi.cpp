// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/mambagaze.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path;
  Scratch() {
    path = fs::temp_directory_path() / ("mg-capi-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(MG_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mg_string_free(s);
  return out;
}

const char* kTinyModel = R"({"d_model": 8, "d_state": 4, "layers_per_direction": 1})";

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("version and status names") {
    CHECK(std::string(mg_version()) == "1.0.0");
    CHECK(std::string(mg_status_name(MG_OK)) == "ok");
    CHECK(std::string(mg_status_name(MG_ERR_CORRUPTION)) == "corruption");
  }

  TEST_CASE("model lifecycle") {
    mg_model* m = nullptr;
    REQUIRE(mg_model_create(kTinyModel, &m) == MG_OK);
    size_t dim = 0, count = 0;
    CHECK(mg_model_input_dim(m, &dim) == MG_OK);
    CHECK(dim == 30);
    CHECK(mg_model_param_count(m, &count) == MG_OK);
    CHECK(count > 0);
    std::vector<float> z(12 * 30, 0.25f);
    double p = -1, af[12], ab[12];
    CHECK(mg_model_predict(m, z.data(), 12, 30, &p, af, ab) == MG_OK);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    double s = 0;
    for (double a : af) s += a;
    CHECK(s == doctest::Approx(1.0));
    CHECK(mg_model_predict(m, z.data(), 12, 29, &p, nullptr, nullptr) == MG_ERR_DIMENSION);
    CHECK(std::string(mg_last_error()).find("width") != std::string::npos);

    Scratch dir;
    const auto ckpt = (dir.path / "m.ckpt").string();
    CHECK(mg_model_save(m, ckpt.c_str()) == MG_OK);
    mg_model* back = nullptr;
    REQUIRE(mg_model_load(ckpt.c_str(), &back) == MG_OK);
    double q = -1;
    CHECK(mg_model_predict(back, z.data(), 12, 30, &q, nullptr, nullptr) == MG_OK);
    CHECK(q == p);
    mg_model_destroy(back);
    mg_model_destroy(m);
    mg_model_destroy(nullptr);

    mg_model* none = nullptr;
    CHECK(mg_model_load((dir.path / "none.ckpt").string().c_str(), &none) == MG_ERR_IO);
    CHECK(none == nullptr);
    CHECK(mg_model_create(R"({"d_model": -1})", &none) == MG_ERR_CONFIG);
    CHECK(mg_model_create("{", &none) == MG_ERR_CONFIG);
  }

  TEST_CASE("config resolution with overlay") {
    char* out = nullptr;
    REQUIRE(mg_resolve_config(nullptr, R"({"seed": 9, "protocol": {"kind": "kfold"}})", &out) ==
            MG_OK);
    const auto j = nlohmann::json::parse(take(out));
    CHECK(j["seed"] == 9);
    CHECK(j["model"]["seed"] == 9);
    CHECK(j["protocol"]["kind"] == "kfold");
    CHECK(mg_resolve_config(nullptr, R"({"bogus": 1})", &out) == MG_ERR_CONFIG);
  }

  TEST_CASE("synth, train and evaluate through the library") {
    Scratch dir;
    const std::string cfg = std::string(R"({"model": )") + kTinyModel +
                            R"(, "synth": {"participants": 3, "windows_per_participant": 6, "steps": 20},
                                 "train": {"max_epochs": 1, "batch_size": 8, "patience": 1}})";
    char* out = nullptr;
    const auto data = (dir.path / "data").string();
    REQUIRE(mg_synth(data.c_str(), cfg.c_str(), &out) == MG_OK);
    CHECK(nlohmann::json::parse(take(out))["windows"] == 18);
    const auto model_dir = (dir.path / "model").string();
    const std::string full = R"({"protocol": {"kind": "full"}})";
    char* merged = nullptr;
    REQUIRE(mg_resolve_config(nullptr, cfg.c_str(), &merged) == MG_OK);
    const auto train_cfg = nlohmann::json::parse(take(merged));
    auto with_full = train_cfg;
    with_full["protocol"]["kind"] = "full";
    REQUIRE(mg_train(data.c_str(), model_dir.c_str(), with_full.dump().c_str(), &out) == MG_OK);
    take(out);
    CHECK(fs::exists(dir.path / "model" / "model.ckpt"));
    const auto eval_dir = (dir.path / "eval").string();
    const auto ckpt = (dir.path / "model" / "model.ckpt").string();
    REQUIRE(mg_evaluate(data.c_str(), eval_dir.c_str(), cfg.c_str(), ckpt.c_str(), &out) == MG_OK);
    const auto report = nlohmann::json::parse(take(out));
    CHECK(report["aggregate"]["windows"] == 18);
    REQUIRE(mg_bench(ckpt.c_str(), nullptr,
                     R"({"bench": {"warmup": 1, "iterations": 2, "steps": 20}})", nullptr, 1.0,
                     &out) == MG_OK);
    CHECK(nlohmann::json::parse(take(out))["measured_runs"] == 2);
  }

  TEST_CASE("command line exit codes and outputs") {
    Scratch dir;
    const auto d = dir.path.string();
    CHECK(cli("").code != 0);
    CHECK(cli("--help").code == 0);

    auto r = cli("--out " + d + "/syn synth");
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["windows"] == 240);
    CHECK(fs::exists(dir.path / "syn" / "manifest.json"));

    fs::create_directories(dir.path / "empty_raw");
    r = cli("--out " + d + "/pre preprocess " + d + "/empty_raw");
    CHECK(r.code == MG_ERR_EMPTY_RECORDING);
    CHECK_FALSE(fs::exists(dir.path / "pre"));

    r = cli("--out " + d + "/ev evaluate " + d + "/syn --checkpoint " + d + "/missing.ckpt");
    CHECK(r.code == MG_ERR_IO);
    r = cli("--out " + d + "/ev evaluate " + d + "/syn --protocol bogus");
    CHECK(r.code == MG_ERR_USAGE);
    r = cli("--out " + d + "/ev --config " + d + "/nope.json synth");
    CHECK(r.code == MG_ERR_IO);
  }

  TEST_CASE("seed changes k-fold partitions but not leave-one-out") {
    Scratch dir;
    const auto d = dir.path.string();
    const std::string small =
        "--participants 6 --windows 4 --steps 20";
    REQUIRE(cli("--out " + d + "/syn synth " + small).code == 0);
    std::ofstream(dir.path / "c.json")
        << R"({"model": {"d_model": 4, "d_state": 2, "layers_per_direction": 1},
               "train": {"max_epochs": 1, "batch_size": 8, "patience": 1}})";
    auto tests_of = [&](const std::string& flags, const std::string& tag) {
      const auto r = cli("--config " + d + "/c.json --out " + d + "/" + tag + " " + flags +
                         " evaluate " + d + "/syn " + (tag.find("k") == 0 ? "--protocol kfold --k 3"
                                                                           : "--protocol loso"));
      REQUIRE(r.code == 0);
      std::vector<nlohmann::json> out;
      const auto report = nlohmann::json::parse(r.out);
      for (const auto& f : report.at("folds")) out.push_back(f.at("test_participants"));
      return out;
    };
    CHECK(tests_of("--seed 1", "k1") != tests_of("--seed 2", "k2"));
    CHECK(tests_of("--seed 1", "l1") == tests_of("--seed 2", "l2"));
  }
}
