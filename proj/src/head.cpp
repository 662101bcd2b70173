#include "cfpn/head.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cfpn/init.hpp"

namespace cfpn {

HeadParams zero_head(std::size_t hidden_size) {
  if (hidden_size == 0) throw ConfigError("head needs a positive hidden size");
  return HeadParams{Tensor({kClasses, hidden_size}), Tensor({kClasses})};
}

HeadParams init_head(std::size_t hidden_size, std::uint64_t seed) {
  HeadParams p = zero_head(hidden_size);
  std::mt19937_64 rng(seed);
  glorot_uniform(p.W_fc, hidden_size, kClasses, rng);
  return p;
}

std::vector<double> logits(std::span<const double> hidden, const HeadParams& p) {
  if (p.W_fc.rank() != 2 || hidden.size() != p.W_fc.dim(1))
    throw ShapeError("logits: hidden width " + std::to_string(hidden.size()) +
                     " does not match W_fc " + shape_string(p.W_fc.shape()));
  std::vector<double> out(p.W_fc.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = p.b_fc[i];
    for (std::size_t j = 0; j < hidden.size(); ++j) s += p.W_fc.at(i, j) * hidden[j];
    out[i] = s;
  }
  return out;
}

Prediction predict(std::span<const double> o) {
  Prediction pr;
  pr.logits.assign(o.begin(), o.end());
  pr.probabilities = softmax(o);
  // max_element returns the first maximum.
  pr.label = static_cast<int>(std::max_element(pr.probabilities.begin(), pr.probabilities.end()) -
                              pr.probabilities.begin());
  return pr;
}

double cross_entropy(std::span<const double> probabilities, int label) {
  const auto idx = static_cast<std::size_t>(label);
  if (idx >= probabilities.size()) throw ShapeError("cross_entropy: label out of range");
  return -std::log(std::max(probabilities[idx], 1e-12));
}

std::vector<double> cross_entropy_logit_grad(std::span<const double> probabilities, int label) {
  std::vector<double> g(probabilities.begin(), probabilities.end());
  g.at(static_cast<std::size_t>(label)) -= 1.0;
  return g;
}

HeadGrads head_backward(std::span<const double> hidden, const HeadParams& p,
                        std::span<const double> grad_logits) {
  if (grad_logits.size() != p.W_fc.dim(0) || hidden.size() != p.W_fc.dim(1))
    throw ShapeError("head_backward: gradient or hidden width does not match W_fc");
  HeadGrads g{zero_head(hidden.size()), std::vector<double>(hidden.size(), 0.0)};
  for (std::size_t i = 0; i < grad_logits.size(); ++i) {
    g.params.b_fc[i] = grad_logits[i];
    for (std::size_t j = 0; j < hidden.size(); ++j) {
      g.params.W_fc.at(i, j) = grad_logits[i] * hidden[j];
      g.hidden[j] += grad_logits[i] * p.W_fc.at(i, j);
    }
  }
  return g;
}

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw ShapeError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == 1, truth = labels[i] == 1;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ShapeError("compute_metrics: no samples");
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.counts = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

std::string metrics_csv_row(const std::string& subject_id, const Metrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f", subject_id.c_str(), m.accuracy,
                m.precision, m.recall, m.f1);
  return buf;
}

}  // namespace cfpn
