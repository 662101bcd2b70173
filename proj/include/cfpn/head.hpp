#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfpn/tensor.hpp"

namespace cfpn {

inline constexpr std::size_t kClasses = 2;

struct HeadParams {
  Tensor W_fc;  // 2×h
  Tensor b_fc;  // 2

  template <typename F>
  void visit(F&& f) { f("W_fc", W_fc); f("b_fc", b_fc); }
  template <typename F>
  void visit(F&& f) const { f("W_fc", W_fc); f("b_fc", b_fc); }
};

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
  int label = 0;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

HeadParams zero_head(std::size_t hidden_size);
HeadParams init_head(std::size_t hidden_size, std::uint64_t seed);

/// O = W_fc·H + b_fc
std::vector<double> logits(std::span<const double> hidden, const HeadParams& p);
/// Softmax plus argmax, ties to the lowest index.
Prediction predict(std::span<const double> logits);

/// -ln(max(ŷ_label, 1e-12))
double cross_entropy(std::span<const double> probabilities, int label);
/// dL/dO for softmax followed by cross-entropy.
std::vector<double> cross_entropy_logit_grad(std::span<const double> probabilities, int label);

struct HeadGrads {
  HeadParams params;
  std::vector<double> hidden;
};
HeadGrads head_backward(std::span<const double> hidden, const HeadParams& p,
                        std::span<const double> grad_logits);

/// Positive class is label 1.
ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);
/// Zero denominators give 0; throws on empty counts.
Metrics compute_metrics(const ConfusionCounts& counts);

/// "subject_id,accuracy,precision,recall,f1"
inline constexpr const char* kMetricsCsvHeader = "subject_id,accuracy,precision,recall,f1";
std::string metrics_csv_row(const std::string& subject_id, const Metrics& m);

}  // namespace cfpn
