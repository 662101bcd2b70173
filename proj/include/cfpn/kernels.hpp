#pragma once

// Raw dense kernels behind the Tensor ops. Each kernel has an OpenMP
// version (used by the library) and a plain serial reference kept for
// tests and the benchmark. Both accumulate in the same order per output
// element, so their results are bitwise equal.

#include <cstddef>

namespace cfpn::kernels {

struct ConvGeometry {
  std::size_t in_channels, in_h, in_w;
  std::size_t out_channels, kernel_h, kernel_w;
  std::size_t stride, pad_top, pad_left;
  std::size_t out_h, out_w;
};

namespace reference {

// C[m×p] = A[m×k]·B[k×p]
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t p);
// C[m×p] = A[m×k]·B[p×k]ᵀ
void matmul_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p);
// C[m×p] = A[k×m]ᵀ·B[k×p]
void matmul_at(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p);
void conv2d(const double* input, const double* kernels, const double* bias, double* output,
            const ConvGeometry& g);

}  // namespace reference

namespace parallel {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t p);
void matmul_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p);
void matmul_at(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p);
void conv2d(const double* input, const double* kernels, const double* bias, double* output,
            const ConvGeometry& g);

}  // namespace parallel

}  // namespace cfpn::kernels
