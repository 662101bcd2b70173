#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfpn/tensor.hpp"

namespace cfpn {

// Parallel GRU ensemble. Each branch runs the same compressed sequence from
// a zero state; the final hidden states are averaged.

struct GruBranchParams {
  Tensor W_z, U_z, b_z;
  Tensor W_r, U_r, b_r;
  Tensor W_h, U_h, b_h;

  std::size_t input_size() const { return W_z.dim(1); }
  std::size_t hidden_size() const { return W_z.dim(0); }

  template <typename F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <typename F>
  void visit(F&& f) const { visit_impl(*this, f); }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("W_z", s.W_z); f("U_z", s.U_z); f("b_z", s.b_z);
    f("W_r", s.W_r); f("U_r", s.U_r); f("b_r", s.b_r);
    f("W_h", s.W_h); f("U_h", s.U_h); f("b_h", s.b_h);
  }
};

struct CsieParams {
  std::vector<GruBranchParams> branches;

  std::size_t hidden_size() const { return branches.at(0).hidden_size(); }
  std::size_t input_size() const { return branches.at(0).input_size(); }

  template <typename F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < branches.size(); ++i)
      branches[i].visit([&](std::string_view n, Tensor& t) { f(std::to_string(i) + "." + std::string(n), t); });
  }
  template <typename F>
  void visit(F&& f) const {
    for (std::size_t i = 0; i < branches.size(); ++i)
      branches[i].visit([&](std::string_view n, const Tensor& t) { f(std::to_string(i) + "." + std::string(n), t); });
  }
};

struct GruStep {
  std::vector<double> z, r, candidate, h;
};

/// Per-step activations of one branch; each tensor is T×h.
struct BranchTrace {
  Tensor sequence;  // T×f
  std::vector<double> h0;
  Tensor z, r, candidate, h;

  std::span<const double> final_state() const {
    return {h.data() + (h.dim(0) - 1) * h.dim(1), h.dim(1)};
  }
};

struct CsieTrace {
  Tensor sequence;  // T×f
  std::vector<BranchTrace> branches;
  std::vector<double> aggregate;  // H_T
};

struct BranchGrads {
  GruBranchParams params;
  Tensor sequence;  // T×f
  std::vector<double> h0;
};

struct CsieGrads {
  CsieParams params;
  Tensor input;  // f×T, same layout as the compressed map
};

GruBranchParams zero_branch(std::size_t input_size, std::size_t hidden_size);
/// Glorot-uniform matrices, zero biases, independent seed per branch.
CsieParams init_csie(std::size_t branches, std::size_t input_size, std::size_t hidden_size,
                     std::uint64_t seed);

GruStep gru_step(std::span<const double> x, std::span<const double> h_prev, const GruBranchParams& p);
/// Runs a T×f sequence left to right from h0 (zeros when empty).
BranchTrace run_branch(const Tensor& sequence, const GruBranchParams& p, std::span<const double> h0 = {});
std::vector<double> aggregate(const std::vector<std::vector<double>>& hiddens);

/// `compressed` is f×T: row = feature (compressed channel), column = time step.
CsieTrace csie_forward(const Tensor& compressed, const CsieParams& p);

/// BPTT for one branch from dL/dh_T.
BranchGrads branch_backward(const BranchTrace& trace, const GruBranchParams& p,
                            std::span<const double> grad_final);
/// Splits dL/dH_T evenly across branches, then BPTT.
CsieGrads csie_backward(const CsieTrace& trace, const CsieParams& p, std::span<const double> upstream);

}  // namespace cfpn
