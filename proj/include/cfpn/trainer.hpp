#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cfpn/model.hpp"

namespace cfpn {

/// Every hyperparameter of a training run.
struct RunConfig {
  std::size_t e1 = 128, e2 = 64, z = 32;
  OutputActivation ae_output = OutputActivation::relu;
  std::size_t nsdru_channels = 8;
  std::size_t branches = 6;
  std::size_t hidden = 32;
  FilterSpec filter;
  double lambda_recon = 0.1;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  bool deterministic_mode = true;
  /// Stop once validation accuracy hits 1.0: the retained best checkpoint
  /// can no longer change because ties keep the earlier epoch.
  bool stop_at_perfect_validation = true;

  void validate() const;
  ModelConfig model_for(std::size_t channels, std::size_t samples) const;
};

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamSettings& s);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;

  std::size_t epochs() const { return train_loss.size(); }
  /// "epoch,train_loss,val_loss,val_accuracy" with one row per epoch.
  std::string to_csv() const;
  bool operator==(const TrainHistory&) const = default;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Per-class seeded shuffle, then the first round(fraction·n_c) of each
/// class go to training (at least one sample stays on each side).
Split stratified_split(std::span<const int> labels, double fraction, std::uint64_t seed);

struct TrainResult {
  ModelConfig model;
  ModelParams best;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_accuracy = 0.0;
  TrainHistory history;
  Split split;
};

using EpochCallback = std::function<void(std::size_t epoch, const TrainHistory&)>;

TrainResult train(const RunConfig& cfg, const std::vector<Epoch>& dataset, const EpochCallback& on_epoch = {});

/// Preprocessed, flattened inputs plus labels.
struct PreparedData {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
};
PreparedData prepare(const std::vector<Epoch>& dataset, const FilterSpec& filter);

std::vector<int> predict_labels(const ModelParams& p, const ModelConfig& cfg, const PreparedData& data);
Metrics evaluate(const ModelParams& p, const ModelConfig& cfg, const std::vector<Epoch>& dataset);

enum class EmbeddingStage { raw, latent };
EmbeddingStage parse_embedding_stage(std::string_view s);

/// CSV with a header row, then one row per epoch: label followed by either
/// the preprocessed flat features (raw) or the aggregate GRU state (latent).
std::string export_embeddings(const ModelParams& p, const ModelConfig& cfg,
                              const std::vector<Epoch>& dataset, EmbeddingStage stage);

}  // namespace cfpn
