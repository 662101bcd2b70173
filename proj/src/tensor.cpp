#include "cfpn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "cfpn/kernels.hpp"

namespace cfpn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size())
    throw ShapeError("tensor shape " + shape_string(shape_) + " does not hold " +
                     std::to_string(data_.size()) + " values");
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(std::move(shape), data_);
}

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2)
    throw ShapeError(std::string(what) + " must be a matrix, got shape " +
                     shape_string(t.shape()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                   " and " + shape_string(b.shape()));
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  if (a.dim(1) != b.dim(0)) mismatch("matmul", a, b);
  Tensor c({a.dim(0), b.dim(1)});
  kernels::parallel::matmul(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_bt lhs");
  require_matrix(b, "matmul_bt rhs");
  if (a.dim(1) != b.dim(1)) mismatch("matmul_bt", a, b);
  Tensor c({a.dim(0), b.dim(0)});
  kernels::parallel::matmul_bt(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(0));
  return c;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_at lhs");
  require_matrix(b, "matmul_at rhs");
  if (a.dim(0) != b.dim(0)) mismatch("matmul_at", a, b);
  Tensor c({a.dim(1), b.dim(1)});
  kernels::parallel::matmul_at(a.data(), b.data(), c.data(), a.dim(1), a.dim(0), b.dim(1));
  return c;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor relu(const Tensor& x) { return map(x, [](double v) { return relu(v); }); }
Tensor sigmoid(const Tensor& x) { return map(x, [](double v) { return sigmoid(v); }); }
Tensor tanh(const Tensor& x) { return map(x, [](double v) { return std::tanh(v); }); }

double relu_derivative(double x) { return x > 0.0 ? 1.0 : 0.0; }

double sigmoid_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

namespace {

kernels::ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels,
                                    std::size_t stride, Padding padding) {
  if (input.rank() != 3 || kernels.rank() != 4)
    throw ShapeError("conv2d expects a C×H×W input and Co×Ci×kh×kw kernels, got " +
                     shape_string(input.shape()) + " and " + shape_string(kernels.shape()));
  if (kernels.dim(1) != input.dim(0))
    throw ShapeError("conv2d: kernel input channels " + shape_string(kernels.shape()) +
                     " do not match input " + shape_string(input.shape()));
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");

  kernels::ConvGeometry g{};
  g.in_channels = input.dim(0);
  g.in_h = input.dim(1);
  g.in_w = input.dim(2);
  g.out_channels = kernels.dim(0);
  g.kernel_h = kernels.dim(2);
  g.kernel_w = kernels.dim(3);
  g.stride = stride;
  if (padding == Padding::same) {
    g.out_h = (g.in_h + stride - 1) / stride;
    g.out_w = (g.in_w + stride - 1) / stride;
    const std::size_t need_h = (g.out_h - 1) * stride + g.kernel_h;
    const std::size_t need_w = (g.out_w - 1) * stride + g.kernel_w;
    g.pad_top = need_h > g.in_h ? (need_h - g.in_h) / 2 : 0;
    g.pad_left = need_w > g.in_w ? (need_w - g.in_w) / 2 : 0;
  } else {
    if (g.kernel_h > g.in_h || g.kernel_w > g.in_w)
      throw ShapeError("conv2d: kernel " + shape_string(kernels.shape()) +
                       " larger than padded input " + shape_string(input.shape()));
    g.out_h = (g.in_h - g.kernel_h) / stride + 1;
    g.out_w = (g.in_w - g.kernel_w) / stride + 1;
    g.pad_top = g.pad_left = 0;
  }
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
              Padding padding) {
  const auto g = conv_geometry(input, kernels, stride, padding);
  if (bias.size() != g.out_channels)
    throw ShapeError("conv2d: bias " + shape_string(bias.shape()) + " does not match kernels " +
                     shape_string(kernels.shape()));
  Tensor out({g.out_channels, g.out_h, g.out_w});
  kernels::parallel::conv2d(input.data(), kernels.data(), bias.data(), out.data(), g);
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output,
                            std::size_t stride, Padding padding) {
  const auto g = conv_geometry(input, kernels, stride, padding);
  if (grad_output.shape() != std::vector<std::size_t>{g.out_channels, g.out_h, g.out_w})
    throw ShapeError("conv2d_backward: upstream gradient " + shape_string(grad_output.shape()) +
                     " does not match output shape");
  Conv2dGrads grads{Tensor(input.shape()), Tensor(kernels.shape()), Tensor({g.out_channels})};
  const auto in_h = static_cast<std::int64_t>(g.in_h);
  const auto in_w = static_cast<std::int64_t>(g.in_w);
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        const double go = grad_output.at(co, oy, ox);
        grads.bias[co] += go;
        if (go == 0.0) continue;
        for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
          const std::size_t kbase = (co * g.in_channels + ci) * g.kernel_h * g.kernel_w;
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            const auto iy = static_cast<std::int64_t>(oy * stride + ky) -
                            static_cast<std::int64_t>(g.pad_top);
            if (iy < 0 || iy >= in_h) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const auto ix = static_cast<std::int64_t>(ox * stride + kx) -
                              static_cast<std::int64_t>(g.pad_left);
              if (ix < 0 || ix >= in_w) continue;
              const std::size_t k = kbase + ky * g.kernel_w + kx;
              const std::size_t in = (ci * g.in_h + iy) * g.in_w + ix;
              grads.kernels[k] += go * input[in];
              grads.input[in] += go * kernels[k];
            }
          }
        }
      }
    }
  }
  return grads;
}

PoolResult maxpool2d(const Tensor& input) {
  if (input.rank() != 3) throw ShapeError("maxpool2d expects C×H×W, got " + shape_string(input.shape()));
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < 2 || w < 2)
    throw ShapeError("maxpool2d needs H>=2 and W>=2, got " + shape_string(input.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult r{Tensor({c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (ch * h + 2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + y) * ow + x;
        r.output[o] = input[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor maxpool2d_backward(const std::vector<std::size_t>& input_shape,
                          const std::vector<std::size_t>& argmax, const Tensor& grad_output) {
  if (argmax.size() != grad_output.size())
    throw ShapeError("maxpool2d_backward: argmax table does not match upstream gradient " +
                     shape_string(grad_output.shape()));
  Tensor grad(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) grad[argmax[o]] += grad_output[o];
  return grad;
}

}  // namespace cfpn
