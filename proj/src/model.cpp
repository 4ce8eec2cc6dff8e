// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/model.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "mambagaze/error.hpp"
#include "json_option.hpp"
#include "mambagaze/ops.hpp"

namespace mambagaze::model {

using nx::Shape;

void ModelConfig::validate() const {
  require(input_dim >= 1, ErrorCode::config, "model.input_dim must be positive");
  require(d_model >= 1, ErrorCode::config, "model.d_model must be positive");
  require(d_state >= 1, ErrorCode::config, "model.d_state must be positive");
  require(d_conv >= 1 && d_conv <= nx::kMaxConvWidth, ErrorCode::config,
          "model.d_conv must lie in [1, " + std::to_string(nx::kMaxConvWidth) + "]");
  require(expand >= 1, ErrorCode::config, "model.expand must be positive");
  require(layers_per_direction >= 1, ErrorCode::config,
          "model.layers_per_direction must be positive");
  require(dropout >= 0.0 && dropout < 1.0, ErrorCode::config, "model.dropout must lie in [0, 1)");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["input_dim"] = input_dim;
  j["d_model"] = d_model;
  j["d_state"] = d_state;
  j["d_conv"] = d_conv;
  j["expand"] = expand;
  j["layers_per_direction"] = layers_per_direction;
  j["dropout"] = dropout;
  j["seed"] = seed;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::config, "model config must be a JSON object");
  ModelConfig c;
  static const std::array<const char*, 8> known = {"input_dim", "d_model", "d_state", "d_conv",
                                                   "expand", "layers_per_direction", "dropout",
                                                   "seed"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::config, "unknown model option '" + key + "'");
  }
  try {
    c.input_dim = detail::option(j, "input_dim", c.input_dim);
    c.d_model = detail::option(j, "d_model", c.d_model);
    c.d_state = detail::option(j, "d_state", c.d_state);
    c.d_conv = detail::option(j, "d_conv", c.d_conv);
    c.expand = detail::option(j, "expand", c.expand);
    c.layers_per_direction = detail::option(j, "layers_per_direction", c.layers_per_direction);
    c.dropout = detail::option(j, "dropout", c.dropout);
    c.seed = detail::option(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

template <typename T>
Tensor<T> uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<T> data(nx::numel(shape));
  for (auto& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

template <typename T>
PoolParams<T> init_pool(std::size_t d, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  return {uniform_param<T>({d, d}, bound, rng), uniform_param<T>({d}, bound, rng),
          uniform_param<T>({1, d}, bound, rng)};
}

template <typename T>
void collect_pool(const PoolParams<T>& p, const std::string& prefix,
                  std::vector<std::pair<std::string, Tensor<T>>>& out) {
  out.emplace_back(prefix + "w_a", p.w_a);
  out.emplace_back(prefix + "b_a", p.b_a);
  out.emplace_back(prefix + "query", p.query);
}

// Re-throws numeric failures with the stage that produced them.
template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::numeric_domain) throw;
    throw Error(ErrorCode::numeric_domain, std::string(stage) + ": " + e.what());
  }
}

template <typename To, typename From>
Tensor<To> convert(const Tensor<From>& t) {
  const auto src = t.data();
  std::vector<To> data(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) data[i] = static_cast<To>(src[i]);
  return Tensor<To>::from(t.shape(), std::move(data), t.requires_grad());
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> MambaGazeParams<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  out.emplace_back("input.weight", in_proj);
  out.emplace_back("input.bias", in_bias);
  for (std::size_t l = 0; l < forward_blocks.size(); ++l) {
    auto block = forward_blocks[l];
    ssm::collect_block_params(block, "forward." + std::to_string(l) + ".", out);
  }
  for (std::size_t l = 0; l < backward_blocks.size(); ++l) {
    auto block = backward_blocks[l];
    ssm::collect_block_params(block, "backward." + std::to_string(l) + ".", out);
  }
  collect_pool(pool_forward, "pool_forward.", out);
  collect_pool(pool_backward, "pool_backward.", out);
  out.emplace_back("head.norm.gamma", head_gamma);
  out.emplace_back("head.norm.beta", head_beta);
  out.emplace_back("head.weight", head_w);
  out.emplace_back("head.bias", head_b);
  return out;
}

template <typename T>
std::vector<Tensor<T>> MambaGazeParams<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& [_, t] : named_parameters()) out.push_back(t);
  return out;
}

template <typename T>
std::size_t MambaGazeParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : named_parameters()) n += t.size();
  return n;
}

template <typename T>
MambaGazeParams<T> init_params(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t d = cfg.d_model;
  MambaGazeParams<T> p;
  p.config = cfg;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
  p.in_proj = uniform_param<T>({d, cfg.input_dim}, in_bound, rng);
  p.in_bias = uniform_param<T>({d}, in_bound, rng);
  const auto shape = cfg.block_shape();
  for (std::size_t l = 0; l < cfg.layers_per_direction; ++l)
    p.forward_blocks.push_back(ssm::init_block<T>(shape, rng));
  for (std::size_t l = 0; l < cfg.layers_per_direction; ++l)
    p.backward_blocks.push_back(ssm::init_block<T>(shape, rng));
  p.pool_forward = init_pool<T>(d, rng);
  p.pool_backward = init_pool<T>(d, rng);
  p.head_gamma = Tensor<T>::full({2 * d}, T(1), true);
  p.head_beta = Tensor<T>::zeros({2 * d}, true);
  p.head_w = uniform_param<T>({1, 2 * d}, 1.0 / std::sqrt(static_cast<double>(2 * d)), rng);
  p.head_b = Tensor<T>::zeros({1}, true);
  return p;
}

template <typename To, typename From>
MambaGazeParams<To> convert_params(const MambaGazeParams<From>& src) {
  MambaGazeParams<To> p;
  p.config = src.config;
  p.in_proj = convert<To>(src.in_proj);
  p.in_bias = convert<To>(src.in_bias);
  auto blocks = [](const std::vector<ssm::BlockParams<From>>& in) {
    std::vector<ssm::BlockParams<To>> out;
    for (const auto& b : in) {
      ssm::BlockParams<To> c;
      c.norm_gamma = convert<To>(b.norm_gamma);
      c.norm_beta = convert<To>(b.norm_beta);
      c.in_proj = convert<To>(b.in_proj);
      c.conv_kernel = convert<To>(b.conv_kernel);
      c.conv_bias = convert<To>(b.conv_bias);
      c.ssm.x_proj = convert<To>(b.ssm.x_proj);
      c.ssm.dt_proj = convert<To>(b.ssm.dt_proj);
      c.ssm.dt_bias = convert<To>(b.ssm.dt_bias);
      c.ssm.a_log = convert<To>(b.ssm.a_log);
      c.ssm.d_skip = convert<To>(b.ssm.d_skip);
      c.out_proj = convert<To>(b.out_proj);
      out.push_back(std::move(c));
    }
    return out;
  };
  p.forward_blocks = blocks(src.forward_blocks);
  p.backward_blocks = blocks(src.backward_blocks);
  auto pool = [](const PoolParams<From>& in) {
    return PoolParams<To>{convert<To>(in.w_a), convert<To>(in.b_a), convert<To>(in.query)};
  };
  p.pool_forward = pool(src.pool_forward);
  p.pool_backward = pool(src.pool_backward);
  p.head_gamma = convert<To>(src.head_gamma);
  p.head_beta = convert<To>(src.head_beta);
  p.head_w = convert<To>(src.head_w);
  p.head_b = convert<To>(src.head_b);
  return p;
}

template <typename T>
Tensor<T> project_input(const Tensor<T>& z, const MambaGazeParams<T>& params) {
  if (z.rank() != 2 || z.dim(1) != params.config.input_dim)
    fail(ErrorCode::dimension, "window has shape " + nx::shape_string(z.shape()) +
                                   ", model expects [steps, " +
                                   std::to_string(params.config.input_dim) + "]");
  if (z.dim(0) == 0) fail(ErrorCode::dimension, "window has no timesteps");
  return nx::linear(z, params.in_proj, params.in_bias);
}

template <typename T>
Tensor<T> run_stack(const Tensor<T>& h, const std::vector<ssm::BlockParams<T>>& blocks,
                    double dropout, bool training, Rng& rng) {
  Tensor<T> x = h;
  for (const auto& b : blocks) x = ssm::block_forward(x, b, dropout, training, rng);
  return x;
}

template <typename T>
Tensor<T> branch_forward(const Tensor<T>& z, Direction direction,
                         const MambaGazeParams<T>& params, bool training, Rng& rng) {
  const Tensor<T> h0 = project_input(z, params);
  const double rate = params.config.dropout;
  if (direction == Direction::forward)
    return run_stack(h0, params.forward_blocks, rate, training, rng);
  return nx::flip_rows(run_stack(nx::flip_rows(h0), params.backward_blocks, rate, training, rng));
}

template <typename T>
Pooled<T> attn_pool(const Tensor<T>& hidden, const PoolParams<T>& pool) {
  const std::size_t steps = hidden.dim(0), d = hidden.dim(1);
  const Tensor<T> energy_proj = nx::apply_unary(nx::linear(hidden, pool.w_a, pool.b_a),
                                                nx::Unary::tanh);
  const Tensor<T> energy = nx::reshape(nx::linear(energy_proj, pool.query), {steps});
  const Tensor<T> alpha = nx::softmax(energy, 0);
  const Tensor<T> context = nx::reshape(nx::matmul(nx::reshape(alpha, {1, steps}), hidden), {d});
  return {context, alpha};
}

template <typename T>
HeadOutput<T> classify(const Tensor<T>& c_forward, const Tensor<T>& c_backward,
                       const MambaGazeParams<T>& params) {
  const Tensor<T> joined = nx::concat<T>({c_forward, c_backward});
  const Tensor<T> normed =
      nx::layer_norm(joined, params.head_gamma, params.head_beta, ssm::kNormEps);
  const Tensor<T> logit =
      nx::reshape(nx::linear(nx::reshape(normed, {1, joined.size()}), params.head_w,
                             params.head_b),
                  {1});
  return {logit, static_cast<T>(nx::stable_sigmoid(static_cast<double>(logit[0])))};
}

template <typename T>
Prediction<T> predict_window(const Tensor<T>& z, const MambaGazeParams<T>& params, bool training,
                             Rng& rng) {
  const Tensor<T> h_fwd = staged("forward branch", [&] {
    return branch_forward(z, Direction::forward, params, training, rng);
  });
  const Tensor<T> h_bwd = staged("backward branch", [&] {
    return branch_forward(z, Direction::backward, params, training, rng);
  });
  const Pooled<T> p_fwd = staged("forward pooling", [&] { return attn_pool(h_fwd, params.pool_forward); });
  const Pooled<T> p_bwd =
      staged("backward pooling", [&] { return attn_pool(h_bwd, params.pool_backward); });
  const HeadOutput<T> head =
      staged("classifier head", [&] { return classify(p_fwd.context, p_bwd.context, params); });
  Prediction<T> out;
  out.logit = head.logit;
  out.probability = head.probability;
  out.alpha_forward.assign(p_fwd.weights.data().begin(), p_fwd.weights.data().end());
  out.alpha_backward.assign(p_bwd.weights.data().begin(), p_bwd.weights.data().end());
  return out;
}

template <typename T>
Prediction<T> predict(const Tensor<T>& z, const MambaGazeParams<T>& params) {
  nx::NoGradGuard guard;
  Rng unused(0);
  return predict_window(z, params, false, unused);
}

template <typename T>
Tensor<T> window_tensor(const xmd::XmdWindow& window) {
  if (window.z.size() != window.steps * window.width)
    fail(ErrorCode::dimension, "window payload does not match its shape");
  std::vector<T> data(window.z.begin(), window.z.end());
  return Tensor<T>::from({window.steps, window.width}, std::move(data));
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

std::uint64_t get_u64(const unsigned char* b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

template <typename T>
void save_checkpoint(const MambaGazeParams<T>& params, const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra) {
  const auto named = params.named_parameters();
  nlohmann::ordered_json header;
  header["format"] = "mambagaze-checkpoint";
  header["version"] = 1;
  header["dtype"] = "float32";
  header["config"] = params.config.to_json();
  header["seed"] = params.config.seed;
  auto& list = header["parameters"] = nlohmann::ordered_json::array();
  std::size_t total = 0;
  for (const auto& [name, t] : named) {
    list.push_back({{"name", name}, {"shape", t.shape()}, {"count", t.size()}});
    total += t.size();
  }
  header["total"] = total;
  header["extra"] = extra;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot write checkpoint '" + tmp.string() + "'");
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<char> buf;
    for (const auto& [_, t] : named) {
      buf.resize(t.size() * 4);
      for (std::size_t i = 0; i < t.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t[i]));
        for (int k = 0; k < 4; ++k) buf[i * 4 + k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      }
      os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!os) fail(ErrorCode::io, "failed writing checkpoint '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open checkpoint '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  const std::string where = "checkpoint '" + path.string() + "'";
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    fail(ErrorCode::corruption, where + " has a bad magic number");
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) fail(ErrorCode::corruption, where + " header is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_len);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::corruption, where + " header is not valid JSON: " + e.what());
  }
  if (header.value("format", "") != "mambagaze-checkpoint" || header.value("version", 0) != 1)
    fail(ErrorCode::corruption, where + " has an unsupported format or version");

  LoadedCheckpoint<T> out;
  out.header = header;
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::corruption, where + " header lacks a model config");
  }
  out.params = init_params<T>(cfg);
  auto named = out.params.named_parameters();
  const auto& list = header.at("parameters");
  if (!list.is_array() || list.size() != named.size())
    fail(ErrorCode::corruption, where + " parameter list does not match the model layout");
  std::size_t offset = 16 + header_len;
  std::size_t expected = offset;
  for (const auto& [_, t] : named) expected += t.size() * 4;
  if (bytes.size() != expected)
    fail(ErrorCode::corruption, where + " has " + std::to_string(bytes.size()) +
                                    " bytes, expected " + std::to_string(expected));
  for (std::size_t k = 0; k < named.size(); ++k) {
    auto& [name, t] = named[k];
    const auto& entry = list[k];
    if (entry.value("name", "") != name ||
        entry.at("shape").get<std::vector<std::size_t>>() != t.shape())
      fail(ErrorCode::corruption, where + " entry " + std::to_string(k) + " does not match '" +
                                      name + "' " + nx::shape_string(t.shape()));
    auto dst = t.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i, offset += 4) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[offset + b];
      dst[i] = static_cast<T>(std::bit_cast<float>(bits));
    }
  }
  return out;
}

#define MG_INSTANTIATE_MODEL(T)                                                                  \
  template struct MambaGazeParams<T>;                                                            \
  template MambaGazeParams<T> init_params<T>(const ModelConfig&);                                \
  template Tensor<T> project_input<T>(const Tensor<T>&, const MambaGazeParams<T>&);              \
  template Tensor<T> run_stack<T>(const Tensor<T>&, const std::vector<ssm::BlockParams<T>>&,     \
                                  double, bool, Rng&);                                           \
  template Tensor<T> branch_forward<T>(const Tensor<T>&, Direction, const MambaGazeParams<T>&,   \
                                       bool, Rng&);                                              \
  template Pooled<T> attn_pool<T>(const Tensor<T>&, const PoolParams<T>&);                       \
  template HeadOutput<T> classify<T>(const Tensor<T>&, const Tensor<T>&,                         \
                                     const MambaGazeParams<T>&);                                 \
  template Prediction<T> predict_window<T>(const Tensor<T>&, const MambaGazeParams<T>&, bool,    \
                                           Rng&);                                                \
  template Prediction<T> predict<T>(const Tensor<T>&, const MambaGazeParams<T>&);                \
  template Tensor<T> window_tensor<T>(const xmd::XmdWindow&);                                    \
  template void save_checkpoint<T>(const MambaGazeParams<T>&, const std::filesystem::path&,      \
                                   const nlohmann::ordered_json&);                               \
  template LoadedCheckpoint<T> load_checkpoint<T>(const std::filesystem::path&);

MG_INSTANTIATE_MODEL(float)
MG_INSTANTIATE_MODEL(double)

#undef MG_INSTANTIATE_MODEL

template MambaGazeParams<float> convert_params<float, float>(const MambaGazeParams<float>&);
template MambaGazeParams<double> convert_params<double, double>(const MambaGazeParams<double>&);
template MambaGazeParams<float> convert_params<float, double>(const MambaGazeParams<double>&);
template MambaGazeParams<double> convert_params<double, float>(const MambaGazeParams<float>&);

}  // namespace mambagaze::model
