#include "cfpn/csie.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "cfpn/init.hpp"

namespace cfpn {

GruBranchParams zero_branch(std::size_t input_size, std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) throw ConfigError("GRU branch needs positive input and hidden sizes");
  GruBranchParams p;
  for (Tensor* w : {&p.W_z, &p.W_r, &p.W_h}) *w = Tensor({hidden_size, input_size});
  for (Tensor* u : {&p.U_z, &p.U_r, &p.U_h}) *u = Tensor({hidden_size, hidden_size});
  for (Tensor* b : {&p.b_z, &p.b_r, &p.b_h}) *b = Tensor({hidden_size});
  return p;
}

CsieParams init_csie(std::size_t branches, std::size_t input_size, std::size_t hidden_size,
                     std::uint64_t seed) {
  if (branches == 0) throw ConfigError("CSIE needs at least one GRU branch");
  CsieParams p;
  for (std::size_t i = 0; i < branches; ++i) {
    GruBranchParams b = zero_branch(input_size, hidden_size);
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ull * (i + 1));
    for (Tensor* w : {&b.W_z, &b.W_r, &b.W_h}) glorot_uniform(*w, input_size, hidden_size, rng);
    for (Tensor* u : {&b.U_z, &b.U_r, &b.U_h}) glorot_uniform(*u, hidden_size, hidden_size, rng);
    p.branches.push_back(std::move(b));
  }
  return p;
}

namespace {

// Column-major copies of a branch's matrices so each step is a run of
// column updates over the hidden dimension. Every output element still sums
// b + Σ_j W[i][j]·x[j] + Σ_j U[i][j]·h[j] in increasing j.
struct Transposed {
  std::vector<double> wz, wr, wh;  // f×h
  std::vector<double> uz, ur, uh;  // h×h

  explicit Transposed(const GruBranchParams& p) {
    auto t = [](const Tensor& m) {
      const std::size_t rows = m.dim(0), cols = m.dim(1);
      std::vector<double> out(rows * cols);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = m.at(i, j);
      return out;
    };
    wz = t(p.W_z); wr = t(p.W_r); wh = t(p.W_h);
    uz = t(p.U_z); ur = t(p.U_r); uh = t(p.U_h);
  }
};

typedef double v4 __attribute__((vector_size(32)));

inline v4 load4(const double* p) {
  v4 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store4(double* p, v4 v) { std::memcpy(p, &v, sizeof v); }

// out[i] += Σ_j a[j]·cols[j·n + i], summed in increasing j. Sixteen
// outputs at a time stay in registers across the whole j loop.
inline void gemv_cols(double* out, const double* a, std::size_t m, const double* cols, std::size_t n) {
  std::size_t i0 = 0;
  for (; i0 + 16 <= n; i0 += 16) {
    v4 c0 = load4(out + i0), c1 = load4(out + i0 + 4), c2 = load4(out + i0 + 8), c3 = load4(out + i0 + 12);
    for (std::size_t j = 0; j < m; ++j) {
      const double aj = a[j];
      const double* c = cols + j * n + i0;
      c0 += aj * load4(c);
      c1 += aj * load4(c + 4);
      c2 += aj * load4(c + 8);
      c3 += aj * load4(c + 12);
    }
    store4(out + i0, c0);
    store4(out + i0 + 4, c1);
    store4(out + i0 + 8, c2);
    store4(out + i0 + 12, c3);
  }
  for (; i0 < n; ++i0) {
    double acc = out[i0];
    for (std::size_t j = 0; j < m; ++j) acc += a[j] * cols[j * n + i0];
    out[i0] = acc;
  }
}

// Writes one step into row pointers; rh is scratch of length h.
void step_into(std::span<const double> x, std::span<const double> h_prev, const GruBranchParams& p,
               const Transposed& tp, double* z, double* r, double* cand, double* h, double* rh) {
  const std::size_t n = p.hidden_size(), f = x.size();
  std::copy_n(p.b_z.data(), n, z);
  std::copy_n(p.b_r.data(), n, r);
  std::copy_n(p.b_h.data(), n, cand);
  gemv_cols(z, x.data(), f, tp.wz.data(), n);
  gemv_cols(r, x.data(), f, tp.wr.data(), n);
  gemv_cols(cand, x.data(), f, tp.wh.data(), n);
  gemv_cols(z, h_prev.data(), n, tp.uz.data(), n);
  gemv_cols(r, h_prev.data(), n, tp.ur.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
    rh[i] = r[i] * h_prev[i];
  }
  gemv_cols(cand, rh, n, tp.uh.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    cand[i] = std::tanh(cand[i]);
    h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
  }
}

void check_step_shapes(std::size_t nx, std::size_t nh, const GruBranchParams& p) {
  if (nx != p.input_size() || nh != p.hidden_size())
    throw ShapeError("gru_step: input " + std::to_string(nx) + " / state " + std::to_string(nh) +
                     " do not match branch (f=" + std::to_string(p.input_size()) +
                     ", h=" + std::to_string(p.hidden_size()) + ")");
}

}  // namespace

GruStep gru_step(std::span<const double> x, std::span<const double> h_prev, const GruBranchParams& p) {
  check_step_shapes(x.size(), h_prev.size(), p);
  const std::size_t n = p.hidden_size();
  GruStep s{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  std::vector<double> rh(n);
  step_into(x, h_prev, p, Transposed(p), s.z.data(), s.r.data(), s.candidate.data(), s.h.data(), rh.data());
  return s;
}

BranchTrace run_branch(const Tensor& sequence, const GruBranchParams& p, std::span<const double> h0) {
  if (sequence.rank() != 2 || sequence.dim(0) == 0)
    throw ShapeError("run_branch: empty sequence " + shape_string(sequence.shape()));
  const std::size_t steps = sequence.dim(0), f = sequence.dim(1), n = p.hidden_size();
  BranchTrace t;
  t.sequence = sequence;
  t.h0 = h0.empty() ? std::vector<double>(n, 0.0) : std::vector<double>(h0.begin(), h0.end());
  check_step_shapes(f, t.h0.size(), p);
  t.z = Tensor({steps, n});
  t.r = Tensor({steps, n});
  t.candidate = Tensor({steps, n});
  t.h = Tensor({steps, n});
  std::vector<double> rh(n);
  const Transposed tp(p);
  for (std::size_t s = 0; s < steps; ++s) {
    std::span<const double> prev = s == 0 ? std::span<const double>(t.h0)
                                          : std::span<const double>(t.h.data() + (s - 1) * n, n);
    step_into({sequence.data() + s * f, f}, prev, p, tp, t.z.data() + s * n, t.r.data() + s * n,
              t.candidate.data() + s * n, t.h.data() + s * n, rh.data());
  }
  return t;
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& hiddens) {
  if (hiddens.empty()) throw ShapeError("aggregate: no branch states");
  const std::size_t n = hiddens.front().size();
  for (const auto& h : hiddens)
    if (h.size() != n) throw ShapeError("aggregate: branch states differ in length");
  // Sorted running mean: branch order cannot change the rounding, and equal
  // states come back unchanged, which a plain sum/k does not guarantee.
  std::vector<double> out(n), column(hiddens.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < hiddens.size(); ++b) column[b] = hiddens[b][i];
    std::sort(column.begin(), column.end());
    double m = column[0];
    for (std::size_t b = 1; b < column.size(); ++b) m += (column[b] - m) / static_cast<double>(b + 1);
    out[i] = m;
  }
  return out;
}

CsieTrace csie_forward(const Tensor& compressed, const CsieParams& p) {
  if (compressed.rank() != 2) throw ShapeError("csie_forward expects an f×T map, got " + shape_string(compressed.shape()));
  if (p.branches.empty()) throw ConfigError("csie_forward: no GRU branches");
  const std::size_t f = compressed.dim(0), steps = compressed.dim(1);
  CsieTrace t;
  t.sequence = Tensor({steps, f});
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t s = 0; s < steps; ++s) t.sequence.at(s, i) = compressed.at(i, s);

  std::vector<std::vector<double>> finals;
  for (const auto& b : p.branches) {
    t.branches.push_back(run_branch(t.sequence, b));
    const auto last = t.branches.back().final_state();
    finals.emplace_back(last.begin(), last.end());
  }
  t.aggregate = aggregate(finals);
  return t;
}

namespace {

// Σ_s a[s][i]·b[s][j] over the rows of two step-major matrices.
Tensor sum_outer(const Tensor& a, const Tensor& b) { return matmul_at(a, b); }

Tensor column_sums(const Tensor& a) {
  const std::size_t n = a.dim(1);
  Tensor out({n});
  double* o = out.data();
  for (std::size_t s = 0; s < a.dim(0); ++s) {
    const double* row = a.data() + s * n;
    for (std::size_t i = 0; i < n; ++i) o[i] += row[i];
  }
  return out;
}

}  // namespace

BranchGrads branch_backward(const BranchTrace& t, const GruBranchParams& p, std::span<const double> grad_final) {
  if (t.h.empty() || t.z.empty() || t.r.empty() || t.candidate.empty() || t.sequence.empty())
    throw StateError("branch_backward: forward trace is incomplete");
  const std::size_t steps = t.h.dim(0), n = t.h.dim(1), f = t.sequence.dim(1);
  if (grad_final.size() != n) throw ShapeError("branch_backward: upstream length does not match hidden size");

  // Gate pre-activation gradients per step; weight gradients are formed
  // from them once the sweep is done.
  Tensor da_z({steps, n}), da_r({steps, n}), da_h({steps, n});
  Tensor prev_all({steps, n}), rh_all({steps, n});
  BranchGrads g;
  g.sequence = Tensor({steps, f});
  std::vector<double> dh(grad_final.begin(), grad_final.end());
  std::vector<double> dprev(n), d_rh(n);

  for (std::size_t s = steps; s-- > 0;) {
    const double* prev = s == 0 ? t.h0.data() : t.h.data() + (s - 1) * n;
    const double* z = t.z.data() + s * n;
    const double* r = t.r.data() + s * n;
    const double* cand = t.candidate.data() + s * n;
    double* az = da_z.data() + s * n;
    double* ar = da_r.data() + s * n;
    double* ah = da_h.data() + s * n;
    double* rh = rh_all.data() + s * n;
    std::copy_n(prev, n, prev_all.data() + s * n);

    for (std::size_t i = 0; i < n; ++i) {
      const double dz = dh[i] * (cand[i] - prev[i]);
      const double dcand = dh[i] * z[i];
      dprev[i] = dh[i] * (1.0 - z[i]);
      ah[i] = dcand * (1.0 - cand[i] * cand[i]);
      az[i] = dz * z[i] * (1.0 - z[i]);
      rh[i] = r[i] * prev[i];
      d_rh[i] = 0.0;
    }
    // Row-major W and U read as columns give the transposed products.
    gemv_cols(d_rh.data(), ah, n, p.U_h.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      ar[i] = d_rh[i] * prev[i] * r[i] * (1.0 - r[i]);
      dprev[i] += d_rh[i] * r[i];
    }
    gemv_cols(dprev.data(), az, n, p.U_z.data(), n);
    gemv_cols(dprev.data(), ar, n, p.U_r.data(), n);
    double* dx = g.sequence.data() + s * f;
    gemv_cols(dx, az, n, p.W_z.data(), f);
    gemv_cols(dx, ar, n, p.W_r.data(), f);
    gemv_cols(dx, ah, n, p.W_h.data(), f);
    dh.swap(dprev);
  }

  g.params.W_z = sum_outer(da_z, t.sequence);
  g.params.W_r = sum_outer(da_r, t.sequence);
  g.params.W_h = sum_outer(da_h, t.sequence);
  g.params.U_z = sum_outer(da_z, prev_all);
  g.params.U_r = sum_outer(da_r, prev_all);
  g.params.U_h = sum_outer(da_h, rh_all);
  g.params.b_z = column_sums(da_z);
  g.params.b_r = column_sums(da_r);
  g.params.b_h = column_sums(da_h);
  g.h0 = std::move(dh);
  return g;
}

CsieGrads csie_backward(const CsieTrace& t, const CsieParams& p, std::span<const double> upstream) {
  if (t.branches.size() != p.branches.size() || t.sequence.empty())
    throw StateError("csie_backward: forward trace is incomplete");
  const double share = 1.0 / static_cast<double>(p.branches.size());
  std::vector<double> per_branch(upstream.begin(), upstream.end());
  for (auto& v : per_branch) v *= share;

  const std::size_t steps = t.sequence.dim(0), f = t.sequence.dim(1);
  CsieGrads g;
  Tensor dseq({steps, f});
  for (std::size_t i = 0; i < p.branches.size(); ++i) {
    auto bg = branch_backward(t.branches[i], p.branches[i], per_branch);
    for (std::size_t j = 0; j < dseq.size(); ++j) dseq[j] += bg.sequence[j];
    g.params.branches.push_back(std::move(bg.params));
  }
  g.input = Tensor({f, steps});
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t s = 0; s < steps; ++s) g.input.at(i, s) = dseq.at(s, i);
  return g;
}

}  // namespace cfpn
