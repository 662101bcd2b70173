#include "cfpn/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

namespace cfpn::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 1u << 15;

inline double conv_cell(const double* input, const double* kernels, const double* bias,
                        const ConvGeometry& g, std::size_t co, std::size_t oy, std::size_t ox) {
  double acc = bias[co];
  for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
    const double* kern = kernels + (co * g.in_channels + ci) * g.kernel_h * g.kernel_w;
    const double* plane = input + ci * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      const auto iy = static_cast<std::int64_t>(oy * g.stride + ky) -
                      static_cast<std::int64_t>(g.pad_top);
      if (iy < 0 || iy >= static_cast<std::int64_t>(g.in_h)) continue;
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const auto ix = static_cast<std::int64_t>(ox * g.stride + kx) -
                        static_cast<std::int64_t>(g.pad_left);
        if (ix < 0 || ix >= static_cast<std::int64_t>(g.in_w)) continue;
        acc += plane[iy * g.in_w + ix] * kern[ky * g.kernel_w + kx];
      }
    }
  }
  return acc;
}

}  // namespace

namespace reference {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a[i * k + l] * b[l * p + j];
      c[i * p + j] = s;
    }
  }
}

void matmul_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a[i * k + l] * b[j * k + l];
      c[i * p + j] = s;
    }
  }
}

void matmul_at(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a[l * m + i] * b[l * p + j];
      c[i * p + j] = s;
    }
  }
}

void conv2d(const double* input, const double* kernels, const double* bias, double* output,
            const ConvGeometry& g) {
  for (std::size_t co = 0; co < g.out_channels; ++co)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        output[(co * g.out_h + oy) * g.out_w + ox] = conv_cell(input, kernels, bias, g, co, oy, ox);
}

}  // namespace reference

namespace parallel {

namespace {

// C[i][j] = Σ_l A(i,l)·B[l][j] with A(i,l) = a[i·si + l·sl]. A 4 × 8 tile of C
// lives in eight 4-wide vector registers across the l loop. Lanes are
// independent, so every element is still summed from zero in increasing l,
// as in the reference.
typedef double v4 __attribute__((vector_size(32)));

inline v4 load4(const double* p) {
  v4 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store4(double* p, v4 v) { std::memcpy(p, &v, sizeof v); }

constexpr std::size_t kTileRows = 4, kTileCols = 8;

void tile(const double* a, std::size_t si, std::size_t sl, const double* b, double* c, std::size_t i0,
          std::size_t j0, std::size_t k, std::size_t p) {
  v4 c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{};
  const double* a0 = a + i0 * si;
  for (std::size_t l = 0; l < k; ++l) {
    const double* br = b + l * p + j0;
    const v4 b0 = load4(br), b1 = load4(br + 4);
    const double x0 = a0[l * sl], x1 = a0[si + l * sl], x2 = a0[2 * si + l * sl], x3 = a0[3 * si + l * sl];
    c00 += x0 * b0;
    c01 += x0 * b1;
    c10 += x1 * b0;
    c11 += x1 * b1;
    c20 += x2 * b0;
    c21 += x2 * b1;
    c30 += x3 * b0;
    c31 += x3 * b1;
  }
  double* cr = c + i0 * p + j0;
  store4(cr, c00);
  store4(cr + 4, c01);
  store4(cr + p, c10);
  store4(cr + p + 4, c11);
  store4(cr + 2 * p, c20);
  store4(cr + 2 * p + 4, c21);
  store4(cr + 3 * p, c30);
  store4(cr + 3 * p + 4, c31);
}

void row_strip(const double* a, std::size_t si, std::size_t sl, const double* b, double* c, std::size_t i,
               std::size_t k, std::size_t p) {
  double* crow = c + i * p;
  std::size_t j0 = 0;
  for (; j0 + kTileCols <= p; j0 += kTileCols) {
    v4 c0{}, c1{};
    for (std::size_t l = 0; l < k; ++l) {
      const double x = a[i * si + l * sl];
      c0 += x * load4(b + l * p + j0);
      c1 += x * load4(b + l * p + j0 + 4);
    }
    store4(crow + j0, c0);
    store4(crow + j0 + 4, c1);
  }
  for (; j0 < p; ++j0) {
    double acc = 0.0;
    for (std::size_t l = 0; l < k; ++l) acc += a[i * si + l * sl] * b[l * p + j0];
    crow[j0] = acc;
  }
}

void blocked(const double* a, std::size_t si, std::size_t sl, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p) {
  const auto tiles = static_cast<std::int64_t>(m / kTileRows);
#pragma omp parallel for schedule(static) if (m * k * p > kParallelThreshold)
  for (std::int64_t t = 0; t < tiles; ++t) {
    const std::size_t i0 = static_cast<std::size_t>(t) * kTileRows;
    std::size_t j0 = 0;
    for (; j0 + kTileCols <= p; j0 += kTileCols) tile(a, si, sl, b, c, i0, j0, k, p);
    for (; j0 < p; ++j0)
      for (std::size_t r = 0; r < kTileRows; ++r) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += a[(i0 + r) * si + l * sl] * b[l * p + j0];
        c[(i0 + r) * p + j0] = acc;
      }
  }
  for (std::size_t i = static_cast<std::size_t>(tiles) * kTileRows; i < m; ++i) row_strip(a, si, sl, b, c, i, k, p);
}

// out (cols × rows) = in (rows × cols)ᵀ, in 16 × 16 blocks.
void transpose(const double* in, double* out, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kB = 16;
  for (std::size_t r0 = 0; r0 < rows; r0 += kB)
    for (std::size_t c0 = 0; c0 < cols; c0 += kB) {
      const std::size_t r1 = std::min(rows, r0 + kB), c1 = std::min(cols, c0 + kB);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t cc = c0; cc < c1; ++cc) out[cc * rows + r] = in[r * cols + cc];
    }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t p) {
  blocked(a, k, 1, b, c, m, k, p);
}

void matmul_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p) {
  if (m < 4) {  // transposing B would cost more than the product itself
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[j * k + l];
        c[i * p + j] = acc;
      }
    return;
  }
  std::vector<double> bt(k * p);
  transpose(b, bt.data(), p, k);
  blocked(a, k, 1, bt.data(), c, m, k, p);
}

void matmul_at(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t p) {
  blocked(a, 1, m, b, c, m, k, p);
}

void conv2d(const double* input, const double* kernels, const double* bias, double* output,
            const ConvGeometry& g) {
  const auto planes = static_cast<std::int64_t>(g.out_channels * g.out_h);
  const std::size_t work =
      g.out_channels * g.out_h * g.out_w * g.in_channels * g.kernel_h * g.kernel_w;
  // Columns whose window never touches the left or right padding.
  std::size_t lo = g.out_w, hi = g.out_w;
  if (g.stride == 1 && g.in_w + g.pad_left + 1 >= g.kernel_w) {
    lo = std::min(g.pad_left, g.out_w);
    hi = std::max(lo, std::min(g.out_w, g.in_w + g.pad_left + 1 - g.kernel_w));
  }
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (std::int64_t row = 0; row < planes; ++row) {
    const std::size_t co = static_cast<std::size_t>(row) / g.out_h;
    const std::size_t oy = static_cast<std::size_t>(row) % g.out_h;
    double* out = output + (co * g.out_h + oy) * g.out_w;
    for (std::size_t ox = 0; ox < lo; ++ox) out[ox] = conv_cell(input, kernels, bias, g, co, oy, ox);
    std::size_t ox = lo;
    for (; ox + 8 <= hi; ox += 8) {
      v4 a0 = v4{} + bias[co], a1 = a0;
      for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
        const double* kern = kernels + (co * g.in_channels + ci) * g.kernel_h * g.kernel_w;
        const double* plane = input + ci * g.in_h * g.in_w;
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const auto iy = static_cast<std::int64_t>(oy + ky) - static_cast<std::int64_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::int64_t>(g.in_h)) continue;
          const double* src = plane + iy * g.in_w + ox - g.pad_left;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const double w = kern[ky * g.kernel_w + kx];
            a0 += load4(src + kx) * w;
            a1 += load4(src + kx + 4) * w;
          }
        }
      }
      store4(out + ox, a0);
      store4(out + ox + 4, a1);
    }
    for (; ox < g.out_w; ++ox) out[ox] = conv_cell(input, kernels, bias, g, co, oy, ox);
  }
}

}  // namespace parallel

}  // namespace cfpn::kernels
