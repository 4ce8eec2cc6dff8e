// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <unistd.h>
#include <string>
#include <vector>

#include "mambagaze/error.hpp"
#include "mambagaze/ops.hpp"
#include "mambagaze/rng.hpp"
#include "mambagaze/tensor.hpp"

namespace mgtest {

using mambagaze::nx::Tensor64;

inline Tensor64 random_tensor(mambagaze::Rng& rng, mambagaze::nx::Shape shape, double scale = 1.0,
                              bool requires_grad = true) {
  std::vector<double> data(mambagaze::nx::numel(shape));
  for (auto& v : data) v = rng.normal(0.0, scale);
  return Tensor64::from(std::move(shape), std::move(data), requires_grad);
}

/// Central-difference check written independently of the library helper.
/// Returns the max over all coordinates of
/// |analytic - numeric| / max(|numeric|, |analytic|, 1e-3).
inline double fd_relative_error(const std::function<Tensor64()>& loss_fn,
                                std::vector<Tensor64> params, double h = 1e-6) {
  for (auto& p : params) p.zero_grad();
  const auto loss = loss_fn();
  mambagaze::nx::backward(loss);
  double worst = 0.0;
  for (auto& p : params) {
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      double up;
      {
        mambagaze::nx::NoGradGuard guard;
        up = loss_fn().item();
      }
      data[i] = saved - h;
      double down;
      {
        mambagaze::nx::NoGradGuard guard;
        down = loss_fn().item();
      }
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mg-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path source_dir() { return MG_SOURCE_DIR; }

template <typename F>
mambagaze::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const mambagaze::Error& e) {
    return e.code();
  }
  return mambagaze::ErrorCode::ok;
}

}  // namespace mgtest
