#include "cfpn/autoencoder.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cfpn/init.hpp"

namespace cfpn {

void AeDims::validate() const {
  if (d == 0 || z == 0 || e1 < e2 || e2 < z)
    throw ConfigError("autoencoder widths need d >= 1 and e1 >= e2 >= z >= 1, got d=" +
                      std::to_string(d) + " e1=" + std::to_string(e1) + " e2=" +
                      std::to_string(e2) + " z=" + std::to_string(z));
}

AeParams zero_ae(const AeDims& dims) {
  dims.validate();
  AeParams p;
  auto layer = [](Tensor& w, Tensor& b, std::size_t in, std::size_t out) {
    w = Tensor({out, in});
    b = Tensor({out});
  };
  layer(p.W1, p.b1, dims.d, dims.e1);
  layer(p.W2, p.b2, dims.e1, dims.e2);
  layer(p.W3, p.b3, dims.e2, dims.z);
  layer(p.W4, p.b4, dims.z, dims.e2);
  layer(p.W5, p.b5, dims.e2, dims.e1);
  layer(p.W6, p.b6, dims.e1, dims.d);
  return p;
}

AeParams init_ae(const AeDims& dims, std::uint64_t seed) {
  AeParams p = zero_ae(dims);
  std::mt19937_64 rng(seed);
  for (Tensor* w : {&p.W1, &p.W2, &p.W3, &p.W4, &p.W5, &p.W6})
    glorot_uniform(*w, w->dim(1), w->dim(0), rng);
  return p;
}

AeDims dims_of(const AeParams& p) {
  return AeDims{p.W1.dim(1), p.W1.dim(0), p.W2.dim(0), p.W3.dim(0)};
}

namespace {

// y = act(x·Wᵀ + b)
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b, bool rectify) {
  if (x.rank() != 2 || x.dim(1) != w.dim(1))
    throw ShapeError("dense layer: input " + shape_string(x.shape()) + " does not match weights " +
                     shape_string(w.shape()));
  Tensor y = matmul_bt(x, w);
  const std::size_t out = w.dim(0);
  for (std::size_t i = 0; i < y.dim(0); ++i)
    for (std::size_t j = 0; j < out; ++j) {
      const double v = y.at(i, j) + b[j];
      y.at(i, j) = rectify ? relu(v) : v;
    }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("skip connection: shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

// Given dL/dy for y = act(x·Wᵀ + b), accumulates dW, db and returns dL/dx.
Tensor dense_backward(const Tensor& x, const Tensor& y, const Tensor& w, Tensor grad_y,
                      bool rectify, Tensor& grad_w, Tensor& grad_b) {
  if (rectify)
    for (std::size_t i = 0; i < grad_y.size(); ++i)
      if (!(y[i] > 0.0)) grad_y[i] = 0.0;
  grad_w = matmul_at(grad_y, x);
  grad_b = Tensor({w.dim(0)});
  for (std::size_t i = 0; i < grad_y.dim(0); ++i)
    for (std::size_t j = 0; j < grad_y.dim(1); ++j) grad_b[j] += grad_y.at(i, j);
  return matmul(grad_y, w);
}

void require(const Tensor& t, const char* name) {
  if (t.empty()) throw StateError(std::string("ae_backward: trace is missing ") + name);
}

}  // namespace

AeEncoding encode(const Tensor& x, const AeParams& p) {
  AeEncoding enc;
  enc.h1 = dense(x, p.W1, p.b1, true);
  enc.h2 = dense(enc.h1, p.W2, p.b2, true);
  enc.z = dense(enc.h2, p.W3, p.b3, true);
  return enc;
}

AeTrace decode(const AeEncoding& enc, const AeParams& p, OutputActivation output) {
  AeTrace t;
  t.enc = enc;
  t.output = output;
  t.h4 = dense(enc.z, p.W4, p.b4, true);
  t.h4_skip = add(t.h4, enc.h2);
  t.h5 = dense(t.h4_skip, p.W5, p.b5, true);
  t.h5_skip = add(t.h5, enc.h1);
  t.h6 = dense(t.h5_skip, p.W6, p.b6, output == OutputActivation::relu);
  t.x_hat = sigmoid(t.h6);
  return t;
}

AeTrace ae_forward(const Tensor& x, const AeParams& p, OutputActivation output) {
  AeTrace t = decode(encode(x, p), p, output);
  t.x = x;
  return t;
}

double reconstruction_loss(const Tensor& x_hat, const Tensor& x) {
  if (x_hat.shape() != x.shape())
    throw ShapeError("reconstruction_loss: shapes " + shape_string(x_hat.shape()) + " and " +
                     shape_string(x.shape()) + " differ");
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x_hat[i] - x[i];
    s += e * e;
  }
  return s / static_cast<double>(x.size());
}

Tensor reconstruction_loss_grad(const Tensor& x_hat, const Tensor& x) {
  if (x_hat.shape() != x.shape())
    throw ShapeError("reconstruction_loss_grad: shapes " + shape_string(x_hat.shape()) + " and " +
                     shape_string(x.shape()) + " differ");
  Tensor g(x.shape());
  const double scale = 2.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = scale * (x_hat[i] - x[i]);
  return g;
}

AeGrads ae_backward(const AeTrace& t, const AeParams& p, const Tensor& grad_x_hat) {
  require(t.x, "input x");
  require(t.enc.h1, "h1");
  require(t.enc.h2, "h2");
  require(t.enc.z, "Z");
  require(t.h4_skip, "h4 skip sum");
  require(t.h5_skip, "h5 skip sum");
  require(t.x_hat, "reconstruction");
  if (grad_x_hat.shape() != t.x_hat.shape())
    throw ShapeError("ae_backward: upstream gradient " + shape_string(grad_x_hat.shape()) +
                     " does not match reconstruction " + shape_string(t.x_hat.shape()));

  AeGrads g;
  Tensor grad_h6 = grad_x_hat;
  for (std::size_t i = 0; i < grad_h6.size(); ++i)
    grad_h6[i] *= t.x_hat[i] * (1.0 - t.x_hat[i]);

  // Skip sums route the same gradient to both addends.
  const Tensor grad_h5_skip = dense_backward(t.h5_skip, t.h6, p.W6, std::move(grad_h6),
                                             t.output == OutputActivation::relu, g.params.W6,
                                             g.params.b6);
  g.h4_skip = dense_backward(t.h4_skip, t.h5, p.W5, grad_h5_skip, true, g.params.W5, g.params.b5);
  const Tensor grad_z = dense_backward(t.enc.z, t.h4, p.W4, g.h4_skip, true, g.params.W4, g.params.b4);
  g.h2 = add(g.h4_skip, dense_backward(t.enc.h2, t.enc.z, p.W3, grad_z, true, g.params.W3, g.params.b3));
  const Tensor grad_h1 = add(
      grad_h5_skip, dense_backward(t.enc.h1, t.enc.h2, p.W2, g.h2, true, g.params.W2, g.params.b2));
  g.input = dense_backward(t.x, t.enc.h1, p.W1, grad_h1, true, g.params.W1, g.params.b1);
  return g;
}

std::string_view to_string(OutputActivation a) {
  return a == OutputActivation::relu ? "relu" : "linear";
}

OutputActivation parse_output_activation(std::string_view s) {
  if (s == "relu") return OutputActivation::relu;
  if (s == "linear") return OutputActivation::linear;
  throw ConfigError("unknown output activation '" + std::string(s) + "' (expected relu|linear)");
}

}  // namespace cfpn
