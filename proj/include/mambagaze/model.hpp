// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/rng.hpp"
#include "mambagaze/ssm.hpp"
#include "mambagaze/tensor.hpp"
#include "mambagaze/xmd.hpp"

namespace mambagaze::model {

using nx::Tensor;

struct ModelConfig {
  std::size_t input_dim = 30;
  std::size_t d_model = 128;
  std::size_t d_state = 16;
  std::size_t d_conv = 4;
  std::size_t expand = 2;
  std::size_t layers_per_direction = 4;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  ssm::BlockShape block_shape() const { return {d_model, d_state, d_conv, expand}; }
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

template <typename T>
struct PoolParams {
  Tensor<T> w_a;    // [D, D]
  Tensor<T> b_a;    // [D]
  Tensor<T> query;  // [1, D]
};

template <typename T>
struct MambaGazeParams {
  ModelConfig config;
  Tensor<T> in_proj;  // [D, input_dim]
  Tensor<T> in_bias;  // [D]
  std::vector<ssm::BlockParams<T>> forward_blocks;
  std::vector<ssm::BlockParams<T>> backward_blocks;
  PoolParams<T> pool_forward;
  PoolParams<T> pool_backward;
  Tensor<T> head_gamma;  // [2D]
  Tensor<T> head_beta;   // [2D]
  Tensor<T> head_w;      // [1, 2D]
  Tensor<T> head_b;      // [1]

  /// Stable order used by checkpoints and optimizers.
  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const;
  std::vector<Tensor<T>> parameters() const;
  std::size_t parameter_count() const;
};

/// Deterministic in cfg.seed.
template <typename T>
MambaGazeParams<T> init_params(const ModelConfig& cfg);

/// Independent copy (no shared buffers) at another precision.
template <typename To, typename From>
MambaGazeParams<To> convert_params(const MambaGazeParams<From>& params);

template <typename T>
MambaGazeParams<T> clone_params(const MambaGazeParams<T>& params) {
  return convert_params<T, T>(params);
}

enum class Direction { forward, backward };

/// h_0 = z W_in^T + b_in, per timestep.
template <typename T>
Tensor<T> project_input(const Tensor<T>& z, const MambaGazeParams<T>& params);

template <typename T>
Tensor<T> run_stack(const Tensor<T>& h, const std::vector<ssm::BlockParams<T>>& blocks,
                    double dropout, bool training, Rng& rng);

/// Forward: stack_fwd(project(z)). Backward: flip(stack_bwd(flip(project(z)))).
template <typename T>
Tensor<T> branch_forward(const Tensor<T>& z, Direction direction,
                         const MambaGazeParams<T>& params, bool training, Rng& rng);

template <typename T>
struct Pooled {
  Tensor<T> context;  // [D]
  Tensor<T> weights;  // [steps]
};

/// e_t = query . tanh(W_a h_t + b_a); alpha = softmax_t(e); c = sum_t alpha_t h_t.
template <typename T>
Pooled<T> attn_pool(const Tensor<T>& hidden, const PoolParams<T>& pool);

template <typename T>
struct HeadOutput {
  Tensor<T> logit;  // [1]
  T probability;
};

/// sigmoid(w_c . layer_norm([c_fwd | c_bwd]) + b_c)
template <typename T>
HeadOutput<T> classify(const Tensor<T>& c_forward, const Tensor<T>& c_backward,
                       const MambaGazeParams<T>& params);

template <typename T>
struct Prediction {
  Tensor<T> logit;  // [1], on the tape when recording
  T probability;
  std::vector<T> alpha_forward;
  std::vector<T> alpha_backward;
};

/// Complete forward pass for one window z [steps, input_dim].
template <typename T>
Prediction<T> predict_window(const Tensor<T>& z, const MambaGazeParams<T>& params, bool training,
                             Rng& rng);

/// Inference-mode convenience (no tape, no dropout).
template <typename T>
Prediction<T> predict(const Tensor<T>& z, const MambaGazeParams<T>& params);

template <typename T>
Tensor<T> window_tensor(const xmd::XmdWindow& window);

// Checkpoint: 8-byte magic, u64 LE header length, JSON header (config, seed,
// names and shapes), then float32 LE values of every parameter in order.
inline constexpr char kCheckpointMagic[8] = {'M', 'G', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void save_checkpoint(const MambaGazeParams<T>& params, const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

template <typename T>
struct LoadedCheckpoint {
  MambaGazeParams<T> params;
  nlohmann::json header;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace mambagaze::model
