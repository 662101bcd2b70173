#pragma once

#include <cstdint>

#include "cfpn/tensor.hpp"

namespace cfpn {

// Convolutional compressor: conv 3×3 → ReLU → maxpool 2×2 → conv 3×3 → ReLU.
// A 1×ch×t map comes out as ⌊ch/2⌋×⌊t/2⌋.

struct NsdruParams {
  Tensor conv1_kernels, conv1_bias;  // C×1×3×3, C
  Tensor conv2_kernels, conv2_bias;  // 1×C×3×3, 1

  std::size_t hidden_channels() const { return conv1_kernels.dim(0); }

  template <typename F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <typename F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("conv1.kernels", s.conv1_kernels);
    f("conv1.bias", s.conv1_bias);
    f("conv2.kernels", s.conv2_kernels);
    f("conv2.bias", s.conv2_bias);
  }
};

inline constexpr std::size_t kNsdruKernel = 3;

struct NsdruTrace {
  Tensor input;   // 1×ch×t
  Tensor conv1;   // C×ch×t after ReLU
  Tensor pooled;  // C×⌊ch/2⌋×⌊t/2⌋
  std::vector<std::size_t> argmax;
  Tensor output;  // ⌊ch/2⌋×⌊t/2⌋ after ReLU
};

struct NsdruGrads {
  NsdruParams params;
  Tensor input;  // 1×ch×t
};

NsdruParams init_nsdru(std::size_t hidden_channels, std::uint64_t seed);
NsdruParams zero_nsdru(std::size_t hidden_channels);

/// Inverse of channel-major flattening: d values → 1×ch×t.
Tensor reshape_to_map(std::span<const double> row, std::size_t channels, std::size_t samples);

NsdruTrace nsdru_forward(const Tensor& map, const NsdruParams& p);
/// `upstream` is dL/d(output), shape ⌊ch/2⌋×⌊t/2⌋.
NsdruGrads nsdru_backward(const NsdruTrace& trace, const NsdruParams& p, const Tensor& upstream);

}  // namespace cfpn
