#pragma once

#include <cstdint>
#include <string_view>

#include "cfpn/tensor.hpp"

namespace cfpn {

/// Activation applied to the last decoder layer before the sigmoid.
enum class OutputActivation { relu, linear };

struct AeDims {
  std::size_t d = 0;
  std::size_t e1 = 128;
  std::size_t e2 = 64;
  std::size_t z = 32;

  void validate() const;
};

/// Dense weights are stored out×in; a batch x (n×d) maps to x·Wᵀ + b.
struct AeParams {
  Tensor W1, b1, W2, b2, W3, b3;  // encoder
  Tensor W4, b4, W5, b5, W6, b6;  // decoder

  template <typename F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <typename F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("W1", s.W1); f("b1", s.b1); f("W2", s.W2); f("b2", s.b2);
    f("W3", s.W3); f("b3", s.b3); f("W4", s.W4); f("b4", s.b4);
    f("W5", s.W5); f("b5", s.b5); f("W6", s.W6); f("b6", s.b6);
  }
};

struct AeEncoding {
  Tensor h1, h2, z;
};

/// Activations of one forward pass; every tensor is n×width.
struct AeTrace {
  Tensor x;
  AeEncoding enc;
  Tensor h4, h4_skip, h5, h5_skip, h6, x_hat;
  OutputActivation output = OutputActivation::relu;
};

struct AeGrads {
  AeParams params;
  Tensor input;
  // Exposed for skip-path checks.
  Tensor h2;
  Tensor h4_skip;
};

/// Glorot-uniform weights, zero biases.
AeParams init_ae(const AeDims& dims, std::uint64_t seed);
AeParams zero_ae(const AeDims& dims);
AeDims dims_of(const AeParams& p);

AeEncoding encode(const Tensor& x, const AeParams& p);
/// Decoder with additive skips: h4+h2 feeds layer 5, h5+h1 feeds layer 6.
AeTrace decode(const AeEncoding& enc, const AeParams& p,
               OutputActivation output = OutputActivation::relu);
AeTrace ae_forward(const Tensor& x, const AeParams& p,
                   OutputActivation output = OutputActivation::relu);

/// Mean squared error over all elements.
double reconstruction_loss(const Tensor& x_hat, const Tensor& x);
Tensor reconstruction_loss_grad(const Tensor& x_hat, const Tensor& x);

/// Backprop from dL/dX̂ through decoder and encoder.
AeGrads ae_backward(const AeTrace& trace, const AeParams& p, const Tensor& grad_x_hat);

std::string_view to_string(OutputActivation a);
OutputActivation parse_output_activation(std::string_view s);

}  // namespace cfpn
