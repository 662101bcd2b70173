#include "cfpn/cost.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>

namespace cfpn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::vector<LayerCost> inference_layers(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.input_width(), f = cfg.features(), T = cfg.steps();
  const std::size_t C = cfg.nsdru_channels;
  return {
      layer::Dense{d, cfg.e1},
      layer::Dense{cfg.e1, cfg.e2},
      layer::Dense{cfg.e2, cfg.z},
      layer::Dense{cfg.z, cfg.e2},
      layer::Elementwise{cfg.e2},  // h4 + h2
      layer::Dense{cfg.e2, cfg.e1},
      layer::Elementwise{cfg.e1},  // h5 + h1
      layer::Dense{cfg.e1, d},
      layer::Conv{1, C, kNsdruKernel, kNsdruKernel, cfg.channels, cfg.samples},
      layer::Conv{C, 1, kNsdruKernel, kNsdruKernel, f, T},
      layer::GruSteps{f, cfg.hidden, T * cfg.branches},
      layer::Elementwise{cfg.branches * cfg.hidden},
      layer::Dense{cfg.hidden, kClasses},
  };
}

std::uint64_t count_flops(const std::vector<LayerCost>& layers) {
  std::uint64_t total = 0;
  for (const auto& l : layers) {
    total += std::visit(
        overloaded{
            [](const layer::Dense& x) -> std::uint64_t { return 2ull * x.in * x.out + x.out; },
            [](const layer::Conv& x) -> std::uint64_t {
              const std::uint64_t cells = std::uint64_t{x.out_channels} * x.out_h * x.out_w;
              return 2ull * x.kernel_h * x.kernel_w * x.in_channels * cells + cells;
            },
            [](const layer::GruSteps& x) -> std::uint64_t {
              const std::uint64_t f = x.input, h = x.hidden;
              return x.steps * (3 * (2 * f * h + 2 * h * h + h) + 9 * h);
            },
            [](const layer::Elementwise& x) -> std::uint64_t { return x.count; },
        },
        l);
  }
  return total;
}

std::uint64_t count_flops(const ModelConfig& cfg) { return count_flops(inference_layers(cfg)); }

std::uint64_t count_ae_params(const AeDims& dims) {
  auto dense = [](std::uint64_t in, std::uint64_t out) { return in * out + out; };
  return dense(dims.d, dims.e1) + dense(dims.e1, dims.e2) + dense(dims.e2, dims.z) +
         dense(dims.z, dims.e2) + dense(dims.e2, dims.e1) + dense(dims.e1, dims.d);
}

std::uint64_t count_gru_branch_params(std::size_t input, std::size_t hidden) {
  const std::uint64_t f = input, h = hidden;
  return 3 * (f * h + h * h + h);
}

std::uint64_t count_head_params(std::size_t hidden) { return kClasses * hidden + kClasses; }

std::uint64_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::uint64_t C = cfg.nsdru_channels, area = kNsdruKernel * kNsdruKernel;
  const std::uint64_t nsdru = (C * area + C) + (C * area + 1);
  return count_ae_params(cfg.ae_dims()) + nsdru +
         cfg.branches * count_gru_branch_params(cfg.features(), cfg.hidden) + count_head_params(cfg.hidden);
}

std::string CostReport::to_text() const {
  std::ostringstream os;
  os << "flop_convention: " << kFlopConvention << '\n'
     << "trainable_params: " << trainable_params << '\n'
     << "flops_per_inference: " << flops_per_inference << '\n'
     << "wall_ms_median: " << wall_ms << '\n'
     << "cpu_ms_median: " << cpu_ms << '\n';
  return os.str();
}

double time_inference(const ModelParams& p, const ModelConfig& cfg, std::span<const double> x,
                      int repetitions, double* cpu_ms) {
  if (repetitions < 3) throw ConfigError("time_inference needs at least 3 repetitions");
  (void)forward(p, cfg, x);  // warm-up
  std::vector<double> wall, cpu;
  for (int i = 0; i < repetitions; ++i) {
    const auto c0 = std::clock();
    const auto t0 = std::chrono::steady_clock::now();
    const auto trace = forward(p, cfg, x);
    const auto t1 = std::chrono::steady_clock::now();
    const auto c1 = std::clock();
    (void)trace;
    wall.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    cpu.push_back(1000.0 * static_cast<double>(c1 - c0) / CLOCKS_PER_SEC);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  if (cpu_ms) *cpu_ms = median(cpu);
  return median(wall);
}

CostReport cost_report(const ModelParams& p, const ModelConfig& cfg, std::span<const double> x, int repetitions) {
  CostReport r;
  r.trainable_params = count_params(cfg);
  r.flops_per_inference = count_flops(cfg);
  r.wall_ms = time_inference(p, cfg, x, repetitions, &r.cpu_ms);
  return r;
}

}  // namespace cfpn
