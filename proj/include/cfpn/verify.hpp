#pragma once

#include <cstdint>
#include <string>

#include "cfpn/grad_check.hpp"
#include "cfpn/model.hpp"

namespace cfpn {

/// ch=4, t=16, widths 16/8/4, 4 NSDRU channels, k=2 branches of h=4.
ModelConfig toy_model_config();

// Finite-difference checks of each backward pass on small random problems.
// Each loss contracts the stage output with fixed random weights so every
// output element receives a distinct upstream gradient.
GradCheckReport check_ae_gradients(std::uint64_t seed, double epsilon = 1e-5);
GradCheckReport check_nsdru_gradients(std::uint64_t seed, double epsilon = 1e-5);
GradCheckReport check_csie_gradients(std::uint64_t seed, double epsilon = 1e-5);
/// Full pipeline under total_loss on the toy config.
GradCheckReport check_pipeline_gradients(std::uint64_t seed, double lambda = 0.1, double epsilon = 1e-5);

/// Name of the segment holding flat parameter index `index`.
std::string segment_of(const ModelParams& p, std::size_t index);

}  // namespace cfpn
