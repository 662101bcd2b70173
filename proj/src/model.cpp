#include "cfpn/model.hpp"

#include <algorithm>

namespace cfpn {

void ModelConfig::validate() const {
  if (channels < 2 || samples < 2)
    throw ConfigError("model needs at least 2 channels and 2 samples, got " + std::to_string(channels) +
                      "x" + std::to_string(samples));
  ae_dims().validate();
  if (nsdru_channels == 0 || branches == 0 || hidden == 0)
    throw ConfigError("nsdru_channels, branches and hidden must be positive");
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  visit([&](const std::string&, const Tensor& t) { out.insert(out.end(), t.values().begin(), t.values().end()); });
  return out;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw ShapeError("ModelParams::assign: " + std::to_string(flat.size()) + " values for " +
                     std::to_string(parameter_count()) + " parameters");
  std::size_t off = 0;
  visit([&](const std::string&, Tensor& t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.size(), t.data());
    off += t.size();
  });
}

namespace {

// Distinct, reproducible seeds for each pipeline stage.
std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage) {
  std::uint64_t x = seed + 0xD1B54A32D192ED03ull * (stage + 1);
  x ^= x >> 31;
  return x;
}

}  // namespace

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p;
  p.ae = init_ae(cfg.ae_dims(), stage_seed(seed, 0));
  p.nsdru = init_nsdru(cfg.nsdru_channels, stage_seed(seed, 1));
  p.csie = init_csie(cfg.branches, cfg.features(), cfg.hidden, stage_seed(seed, 2));
  p.head = init_head(cfg.hidden, stage_seed(seed, 3));
  return p;
}

ModelParams zero_model(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.ae = zero_ae(cfg.ae_dims());
  p.nsdru = zero_nsdru(cfg.nsdru_channels);
  for (std::size_t i = 0; i < cfg.branches; ++i) p.csie.branches.push_back(zero_branch(cfg.features(), cfg.hidden));
  p.head = zero_head(cfg.hidden);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.visit([](const std::string&, Tensor& t) { t.fill(0.0); });
  return z;
}

void accumulate(ModelParams& acc, const ModelParams& g, double scale) {
  std::vector<const Tensor*> src;
  g.visit([&](const std::string&, const Tensor& t) { src.push_back(&t); });
  std::size_t i = 0;
  acc.visit([&](const std::string& name, Tensor& t) {
    if (i >= src.size() || src[i]->size() != t.size())
      throw ShapeError("accumulate: gradient segment " + name + " does not match");
    const Tensor& s = *src[i++];
    for (std::size_t j = 0; j < t.size(); ++j) t[j] += scale * s[j];
  });
}

namespace {

// NSDRU → CSIE → head on one reconstructed row.
void tail_forward(ForwardTrace& t, const ModelParams& p, const ModelConfig& cfg, std::span<const double> x_hat) {
  t.nsdru = nsdru_forward(reshape_to_map(x_hat, cfg.channels, cfg.samples), p.nsdru);
  t.csie = csie_forward(t.nsdru.output, p.csie);
  t.prediction = predict(logits(t.csie.aggregate, p.head));
}

// Cross-entropy gradient back to the NSDRU input map; fills g's head,
// csie and nsdru segments.
Tensor tail_backward(const ForwardTrace& t, const ModelParams& p, int label, ModelParams& g) {
  const auto grad_logits = cross_entropy_logit_grad(t.prediction.probabilities, label);
  auto head = head_backward(t.csie.aggregate, p.head, grad_logits);
  g.head = std::move(head.params);
  auto csie = csie_backward(t.csie, p.csie, head.hidden);
  g.csie = std::move(csie.params);
  auto nsdru = nsdru_backward(t.nsdru, p.nsdru, csie.input);
  g.nsdru = std::move(nsdru.params);
  return std::move(nsdru.input);
}

void add_into(Tensor& acc, const Tensor& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

// Adds the non-autoencoder segments of g into acc.
void add_tail(ModelParams& acc, const ModelParams& g) {
  add_into(acc.nsdru.conv1_kernels, g.nsdru.conv1_kernels);
  add_into(acc.nsdru.conv1_bias, g.nsdru.conv1_bias);
  add_into(acc.nsdru.conv2_kernels, g.nsdru.conv2_kernels);
  add_into(acc.nsdru.conv2_bias, g.nsdru.conv2_bias);
  for (std::size_t b = 0; b < acc.csie.branches.size(); ++b) {
    std::vector<const Tensor*> src;
    g.csie.branches[b].visit([&](std::string_view, const Tensor& t) { src.push_back(&t); });
    std::size_t i = 0;
    acc.csie.branches[b].visit([&](std::string_view, Tensor& t) { add_into(t, *src[i++]); });
  }
  add_into(acc.head.W_fc, g.head.W_fc);
  add_into(acc.head.b_fc, g.head.b_fc);
}

}  // namespace

ForwardTrace forward(const ModelParams& p, const ModelConfig& cfg, std::span<const double> x) {
  if (x.size() != cfg.input_width())
    throw ShapeError("forward: input width " + std::to_string(x.size()) + " does not match ch*t = " +
                     std::to_string(cfg.input_width()));
  ForwardTrace t;
  t.ae = ae_forward(Tensor({1, x.size()}, std::vector<double>(x.begin(), x.end())), p.ae, cfg.ae_output);
  tail_forward(t, p, cfg, t.ae.x_hat.values());
  return t;
}

LossParts total_loss(const ForwardTrace& trace, int label, const Tensor& target, double lambda) {
  LossParts l;
  l.classification = cross_entropy(trace.prediction.probabilities, label);
  l.reconstruction = reconstruction_loss(trace.ae.x_hat, target);
  l.total = l.classification + lambda * l.reconstruction;
  return l;
}

ModelParams backward(const ForwardTrace& t, const ModelParams& p, const ModelConfig& cfg, int label,
                     double lambda) {
  ModelParams g;
  Tensor grad_x_hat = tail_backward(t, p, label, g).reshaped({1, cfg.input_width()});
  if (lambda != 0.0) {
    const Tensor rec = reconstruction_loss_grad(t.ae.x_hat, t.ae.x);
    for (std::size_t i = 0; i < grad_x_hat.size(); ++i) grad_x_hat[i] += lambda * rec[i];
  }
  g.ae = ae_backward(t.ae, p.ae, grad_x_hat).params;
  return g;
}

BatchResult batch_gradient(const ModelParams& p, const ModelConfig& cfg,
                           std::span<const std::span<const double>> inputs, std::span<const int> labels,
                           double lambda, bool ordered) {
  const std::size_t n = inputs.size(), d = cfg.input_width();
  if (n == 0 || labels.size() != n)
    throw ShapeError("batch_gradient: " + std::to_string(n) + " inputs with " + std::to_string(labels.size()) +
                     " labels");
  Tensor x({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    if (inputs[i].size() != d)
      throw ShapeError("batch_gradient: input width " + std::to_string(inputs[i].size()) +
                       " does not match ch*t = " + std::to_string(d));
    std::copy(inputs[i].begin(), inputs[i].end(), x.data() + i * d);
  }
  const AeTrace ae = ae_forward(x, p.ae, cfg.ae_output);

  BatchResult out;
  out.predicted.resize(n);
  out.grad.nsdru = p.nsdru;
  out.grad.csie = p.csie;
  out.grad.head = p.head;
  out.grad = zeros_like(out.grad);
  Tensor grad_x_hat({n, d});
  std::vector<double> losses(n);
  std::vector<ModelParams> per_sample(ordered ? n : 0);
  const double rec_scale = 2.0 * lambda / static_cast<double>(d);

  // Per-sample body; writes row i of grad_x_hat and returns the tail gradient.
  auto sample = [&](std::size_t i, ModelParams& g) {
    const std::span<const double> row(ae.x_hat.data() + i * d, d);
    ForwardTrace t;
    tail_forward(t, p, cfg, row);
    const Tensor grad_map = tail_backward(t, p, labels[i], g);
    double sq = 0.0;
    double* gx = grad_x_hat.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double e = row[j] - x.data()[i * d + j];
      sq += e * e;
      gx[j] = grad_map[j] + rec_scale * e;
    }
    losses[i] = cross_entropy(t.prediction.probabilities, labels[i]) + lambda * (sq / static_cast<double>(d));
    out.predicted[i] = t.prediction.label;
  };

  const auto count = static_cast<std::int64_t>(n);
  if (ordered) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) sample(static_cast<std::size_t>(i), per_sample[i]);
    for (const auto& g : per_sample) add_tail(out.grad, g);
  } else {
#pragma omp parallel
    {
      ModelParams local = zeros_like(out.grad);
#pragma omp for schedule(dynamic)
      for (std::int64_t i = 0; i < count; ++i) {
        ModelParams g;
        sample(static_cast<std::size_t>(i), g);
        add_tail(local, g);
      }
#pragma omp critical
      add_tail(out.grad, local);
    }
  }
  for (double l : losses) out.loss_sum += l;
  out.grad.ae = ae_backward(ae, p.ae, grad_x_hat).params;
  return out;
}

std::vector<double> preprocess(const Epoch& epoch, const BiquadCascade& cascade) {
  return minmax_normalize(apply_bandpass(epoch, cascade)).data;
}

}  // namespace cfpn
