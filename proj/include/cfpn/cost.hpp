#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cfpn/model.hpp"

namespace cfpn {

/// FLOP convention used by every cost figure in this library.
inline constexpr const char* kFlopConvention =
    "MAC=2 FLOPs; dense=2*in*out+out; conv=2*kh*kw*Cin*Cout*Hout*Wout+Cout*Hout*Wout; "
    "gru_step=3*(2*f*h+2*h*h+h)+9*h; skip_add=width; branch_average=k*h; "
    "activations, pooling and softmax not counted; per single-epoch inference";

namespace layer {
struct Dense { std::size_t in, out; };
struct Conv { std::size_t in_channels, out_channels, kernel_h, kernel_w, out_h, out_w; };
struct GruSteps { std::size_t input, hidden, steps; };
struct Elementwise { std::size_t count; };
}  // namespace layer

using LayerCost = std::variant<layer::Dense, layer::Conv, layer::GruSteps, layer::Elementwise>;

/// Inference graph of the model as countable layers.
std::vector<LayerCost> inference_layers(const ModelConfig& cfg);

std::uint64_t count_flops(const std::vector<LayerCost>& layers);
std::uint64_t count_flops(const ModelConfig& cfg);

/// Closed-form trainable parameter count.
std::uint64_t count_params(const ModelConfig& cfg);
std::uint64_t count_ae_params(const AeDims& dims);
std::uint64_t count_gru_branch_params(std::size_t input, std::size_t hidden);
std::uint64_t count_head_params(std::size_t hidden);

struct CostReport {
  std::uint64_t trainable_params = 0;
  std::uint64_t flops_per_inference = 0;
  double wall_ms = 0.0;  // median single-epoch inference
  double cpu_ms = 0.0;

  /// "key: value" lines, including the FLOP convention.
  std::string to_text() const;
};

/// Median wall-clock milliseconds of `repetitions` forward passes after one warm-up.
double time_inference(const ModelParams& p, const ModelConfig& cfg, std::span<const double> x,
                      int repetitions, double* cpu_ms = nullptr);

CostReport cost_report(const ModelParams& p, const ModelConfig& cfg, std::span<const double> x,
                       int repetitions = 5);

}  // namespace cfpn
