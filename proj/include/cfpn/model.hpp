#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfpn/autoencoder.hpp"
#include "cfpn/csie.hpp"
#include "cfpn/head.hpp"
#include "cfpn/nsdru.hpp"
#include "cfpn/signal.hpp"

namespace cfpn {

/// Architecture plus the preprocessing it was trained with.
struct ModelConfig {
  std::size_t channels = 0;
  std::size_t samples = 0;
  std::size_t e1 = 128, e2 = 64, z = 32;
  OutputActivation ae_output = OutputActivation::relu;
  std::size_t nsdru_channels = 8;
  std::size_t branches = 6;
  std::size_t hidden = 32;
  FilterSpec filter;

  std::size_t input_width() const { return channels * samples; }
  std::size_t features() const { return channels / 2; }
  std::size_t steps() const { return samples / 2; }
  AeDims ae_dims() const { return {input_width(), e1, e2, z}; }
  void validate() const;
};

/// Every learnable tensor of the pipeline.
struct ModelParams {
  AeParams ae;
  NsdruParams nsdru;
  CsieParams csie;
  HeadParams head;

  /// Segments in checkpoint order with dotted names ("ae.W1", "csie.0.U_z", ...).
  template <typename F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <typename F>
  void visit(F&& f) const { visit_impl(*this, f); }

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const ModelParams& o) const { return flatten() == o.flatten(); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    s.ae.visit([&](std::string_view n, auto& t) { f("ae." + std::string(n), t); });
    s.nsdru.visit([&](std::string_view n, auto& t) { f("nsdru." + std::string(n), t); });
    s.csie.visit([&](std::string_view n, auto& t) { f("csie." + std::string(n), t); });
    s.head.visit([&](std::string_view n, auto& t) { f("head." + std::string(n), t); });
  }
};

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);
ModelParams zero_model(const ModelConfig& cfg);
/// Same shapes as `p`, all zeros.
ModelParams zeros_like(const ModelParams& p);
void accumulate(ModelParams& acc, const ModelParams& g, double scale = 1.0);

struct ForwardTrace {
  AeTrace ae;
  NsdruTrace nsdru;
  CsieTrace csie;
  Prediction prediction;
};

/// One epoch through AE → NSDRU → CSIE → head. `x` is the flattened,
/// preprocessed epoch of width ch·t.
ForwardTrace forward(const ModelParams& p, const ModelConfig& cfg, std::span<const double> x);

struct LossParts {
  double total = 0.0;
  double classification = 0.0;
  double reconstruction = 0.0;
};

/// cross_entropy(ŷ, label) + λ·MSE(X̂, target)
LossParts total_loss(const ForwardTrace& trace, int label, const Tensor& target, double lambda);

/// Gradient of total_loss with the reconstruction target set to the input.
ModelParams backward(const ForwardTrace& trace, const ModelParams& p, const ModelConfig& cfg,
                     int label, double lambda);

struct BatchResult {
  double loss_sum = 0.0;
  std::vector<int> predicted;
  ModelParams grad;  // summed over the batch, not averaged
};

/// Summed total_loss and its gradient over a mini-batch, equal to summing
/// `backward` per sample up to rounding. The autoencoder runs once on the
/// stacked n×d batch; later stages run per sample. With `ordered` set the
/// per-sample terms are added in index order, otherwise per-thread partial
/// sums are merged as threads finish.
BatchResult batch_gradient(const ModelParams& p, const ModelConfig& cfg,
                           std::span<const std::span<const double>> inputs, std::span<const int> labels,
                           double lambda, bool ordered);

/// Bandpass, min-max scaling, then channel-major flattening of one epoch.
std::vector<double> preprocess(const Epoch& epoch, const BiquadCascade& cascade);

}  // namespace cfpn
