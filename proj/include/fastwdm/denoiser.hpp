#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fastwdm/tensor.hpp"

namespace fastwdm {

using Activations = ChannelTensor<double>;

struct DenoiserConfig {
  int hidden_channels = 16;
  int num_hidden_convs = 2;
  int time_embed_dim = 16;  // must be even (sin/cos pairs)

  void validate() const;
  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

// Parameters (or their gradients) in declaration order: conv_in.{weight,bias}, time.{weight,bias},
// hidden.<i>.{weight,bias} ..., conv_out.{weight,bias}.
using ParamSet = std::vector<ParamTensor>;

/// x0-predicting conditional convnet: 24 input channels (v, m and x_t coefficients) to 8 output
/// channels, 3x3x3 same-padded convolutions, SiLU, time embedding added after conv_in.
class DenoiserModel {
 public:
  static constexpr std::size_t kInputChannels = 24;
  static constexpr std::size_t kOutputChannels = 8;
  static constexpr std::size_t kTaps = 27;

  // All parameters zero.
  explicit DenoiserModel(const DenoiserConfig& cfg);

  const DenoiserConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  // A zeroed set with the same layout, for gradient accumulation.
  ParamSet zeros_like() const;

  // Forward pass that keeps the intermediate activations needed by backward().
  struct Trace {
    const Activations* input = nullptr;
    std::vector<double> emb;
    std::vector<Activations> pre;  // per hidden layer, before SiLU
    std::vector<Activations> act;  // per hidden layer, after SiLU
    Activations output;
  };

  Activations forward(const Activations& input, int t, int T) const;
  // `input` must outlive the returned trace.
  Trace trace(const Activations& input, int t, int T) const;

  // Gradient of sum(grad_out * forward(input, t, T)) with respect to every parameter.
  ParamSet backward(const Activations& input, int t, int T, const Activations& grad_out) const;
  ParamSet backward(const Trace& trace, const Activations& grad_out) const;

 private:
  std::size_t conv_count() const { return static_cast<std::size_t>(cfg_.num_hidden_convs) + 1; }

  DenoiserConfig cfg_;
  ParamSet params_;
};

DenoiserModel init_model(const DenoiserConfig& cfg, std::uint64_t seed);

// Sinusoidal embedding of 1000 * t / T: [sin(f_0 s) .. sin(f_{h-1} s), cos(f_0 s) .. cos(f_{h-1} s)],
// f_i = 10000^{-i/h}, h = dim / 2.
std::vector<double> time_embedding(int t, int T, int dim);

// FWCK: "FWCK" | u16 version | u32 hidden_channels | u32 num_hidden_convs | u32 time_embed_dim |
// u32 kernel (3) | u32 tensor count | per tensor: u32 rank, u32 dims[rank], float32 values.
void save_checkpoint(const DenoiserModel& model, const std::filesystem::path& path);
DenoiserModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fastwdm
