#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "cfpn/errors.hpp"

namespace cfpn {

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  /// Row-major matrix from nested rows; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& at(std::size_t ch, std::size_t r, std::size_t c) {
    return data_[(ch * shape_[1] + r) * shape_[2] + c];
  }
  double at(std::size_t ch, std::size_t r, std::size_t c) const {
    return data_[(ch * shape_[1] + r) * shape_[2] + c];
  }

  void fill(double v);
  /// Same data under a new shape with equal element count.
  Tensor reshaped(std::vector<std::size_t> shape) const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);
std::size_t shape_product(const std::vector<std::size_t>& shape);
bool all_finite(std::span<const double> values);

// Matrix products. Shapes: A m×k, B k×p.
Tensor matmul(const Tensor& a, const Tensor& b);
/// A·Bᵀ with A m×k, B p×k.
Tensor matmul_bt(const Tensor& a, const Tensor& b);
/// Aᵀ·B with A k×m, B k×p.
Tensor matmul_at(const Tensor& a, const Tensor& b);

// Elementwise activations and their derivatives.
double relu(double x);
double sigmoid(double x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

/// d relu / dx; 0 at the kink.
double relu_derivative(double x);
double sigmoid_derivative(double x);
double tanh_derivative(double x);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

enum class Padding { same, valid };

/// Cross-correlation of a C_in×H×W map with C_out×C_in×kh×kw kernels.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              std::size_t stride = 1, Padding padding = Padding::same);

struct Conv2dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

/// Gradients of conv2d given the upstream gradient of its output.
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& grad_output, std::size_t stride = 1,
                            Padding padding = Padding::same);

struct PoolResult {
  Tensor output;
  /// Flat input index of the selected element per output cell.
  std::vector<std::size_t> argmax;
};

/// 2×2 stride-2 max pooling with floor semantics; ties go to the first
/// element in row-major window order.
PoolResult maxpool2d(const Tensor& input);
Tensor maxpool2d_backward(const std::vector<std::size_t>& input_shape,
                          const std::vector<std::size_t>& argmax, const Tensor& grad_output);

}  // namespace cfpn
