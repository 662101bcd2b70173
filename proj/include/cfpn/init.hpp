#pragma once

#include <cmath>
#include <random>

#include "cfpn/tensor.hpp"

namespace cfpn {

/// Fills `w` with uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
inline void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : w.values()) v = dist(rng);
}

}  // namespace cfpn
