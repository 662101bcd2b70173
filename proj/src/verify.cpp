#include "cfpn/verify.hpp"

#include <random>

namespace cfpn {

ModelConfig toy_model_config() {
  ModelConfig c;
  c.channels = 4;
  c.samples = 16;
  c.e1 = 16;
  c.e2 = 8;
  c.z = 4;
  c.nsdru_channels = 4;
  c.branches = 2;
  c.hidden = 4;
  return c;
}

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename P>
std::vector<double> flat_of(const P& p) {
  std::vector<double> out;
  p.visit([&](auto&&, const Tensor& t) { out.insert(out.end(), t.values().begin(), t.values().end()); });
  return out;
}

template <typename P>
void assign_flat(P& p, std::span<const double> flat) {
  std::size_t off = 0;
  p.visit([&](auto&&, Tensor& t) {
    for (auto& v : t.values()) v = flat[off++];
  });
}

}  // namespace

GradCheckReport check_ae_gradients(std::uint64_t seed, double epsilon) {
  std::mt19937_64 rng(seed);
  const AeDims dims{12, 16, 8, 4};
  const AeParams base = init_ae(dims, seed);
  AeParams work = base;
  std::mt19937_64 brng(seed + 1);
  for (Tensor* b : {&work.b1, &work.b2, &work.b3, &work.b4, &work.b5, &work.b6})
    for (auto& v : b->values()) v = std::uniform_real_distribution<double>(-0.1, 0.1)(brng);
  const Tensor x({4, 12}, uniform(48, 0.0, 1.0, rng));
  const auto weights = uniform(48, -1.0, 1.0, rng);

  auto loss = [&](std::span<const double> params, std::span<double> grad) {
    assign_flat(work, params);
    const auto t = ae_forward(x, work);
    const double l = reconstruction_loss(t.x_hat, x) + dot(t.x_hat.values(), weights);
    if (!grad.empty()) {
      Tensor up = reconstruction_loss_grad(t.x_hat, x);
      for (std::size_t i = 0; i < up.size(); ++i) up[i] += weights[i];
      const auto g = flat_of(ae_backward(t, work, up).params);
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return l;
  };
  return grad_check(loss, flat_of(work), epsilon);
}

GradCheckReport check_nsdru_gradients(std::uint64_t seed, double epsilon) {
  std::mt19937_64 rng(seed);
  NsdruParams work = init_nsdru(4, seed);
  for (auto& v : work.conv1_bias.values()) v = std::uniform_real_distribution<double>(0.2, 0.4)(rng);
  work.conv2_bias[0] = 1.0;  // keeps the output ReLU open so every parameter is exercised
  const Tensor map({1, 4, 6}, uniform(24, 0.5, 1.0, rng));
  const auto weights = uniform(6, -1.0, 1.0, rng);

  auto loss = [&](std::span<const double> params, std::span<double> grad) {
    assign_flat(work, params);
    const auto t = nsdru_forward(map, work);
    const double l = dot(t.output.values(), weights);
    if (!grad.empty()) {
      const Tensor up(t.output.shape(), weights);
      const auto g = flat_of(nsdru_backward(t, work, up).params);
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return l;
  };
  return grad_check(loss, flat_of(work), epsilon);
}

GradCheckReport check_csie_gradients(std::uint64_t seed, double epsilon) {
  std::mt19937_64 rng(seed);
  CsieParams work = init_csie(2, 2, 4, seed);
  for (auto& b : work.branches)
    for (Tensor* bias : {&b.b_z, &b.b_r, &b.b_h})
      for (auto& v : bias->values()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  const Tensor compressed({2, 3}, uniform(6, -1.0, 1.0, rng));  // f=2 features, T=3 steps
  const auto weights = uniform(4, -1.0, 1.0, rng);

  auto loss = [&](std::span<const double> params, std::span<double> grad) {
    assign_flat(work, params);
    const auto t = csie_forward(compressed, work);
    const double l = dot(t.aggregate, weights);
    if (!grad.empty()) {
      const auto g = flat_of(csie_backward(t, work, weights).params);
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return l;
  };
  return grad_check(loss, flat_of(work), epsilon);
}

GradCheckReport check_pipeline_gradients(std::uint64_t seed, double lambda, double epsilon) {
  const ModelConfig cfg = toy_model_config();
  std::mt19937_64 rng(seed);
  ModelParams work = init_model(cfg, seed);
  // Zero biases can close the compressor's output ReLU entirely, and then
  // nothing past it is exercised. Same bias setup as the stage checks.
  work.visit([&](const std::string& name, Tensor& t) {
    if (name[name.rfind('.') + 1] == 'b')
      for (auto& v : t.values()) v = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
  });
  for (auto& v : work.nsdru.conv1_bias.values()) v = std::uniform_real_distribution<double>(0.2, 0.4)(rng);
  work.nsdru.conv2_bias[0] = 1.0;
  const auto x = uniform(cfg.input_width(), 0.0, 1.0, rng);
  const int label = static_cast<int>(seed % 2);
  const Tensor target({1, x.size()}, x);

  auto loss = [&](std::span<const double> params, std::span<double> grad) {
    work.assign(params);
    const auto t = forward(work, cfg, x);
    const double l = total_loss(t, label, target, lambda).total;
    if (!grad.empty()) {
      const auto g = backward(t, work, cfg, label, lambda).flatten();
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return l;
  };
  return grad_check(loss, work.flatten(), epsilon);
}

std::string segment_of(const ModelParams& p, std::size_t index) {
  std::string found;
  std::size_t off = 0;
  p.visit([&](const std::string& name, const Tensor& t) {
    if (found.empty() && index < off + t.size()) found = name + "[" + std::to_string(index - off) + "]";
    off += t.size();
  });
  return found;
}

}  // namespace cfpn
