#include "cfpn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace cfpn {

void RunConfig::validate() const {
  if (!(lambda_recon >= 0.0)) throw ConfigError("lambda_recon must be >= 0");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
}

ModelConfig RunConfig::model_for(std::size_t channels, std::size_t samples) const {
  ModelConfig m;
  m.channels = channels;
  m.samples = samples;
  m.e1 = e1;
  m.e2 = e2;
  m.z = z;
  m.ae_output = ae_output;
  m.nsdru_channels = nsdru_channels;
  m.branches = branches;
  m.hidden = hidden;
  m.filter = filter;
  m.validate();
  return m;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& st, const AdamSettings& s) {
  if (grads.size() != params.size())
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameters");
  ++st.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    st.m[i] = s.beta1 * st.m[i] + (1.0 - s.beta1) * g;
    st.v[i] = s.beta2 * st.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = st.m[i] / c1;
    const double v_hat = st.v[i] / c2;
    params[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,val_accuracy\n";
  char buf[128];
  for (std::size_t i = 0; i < train_loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i + 1, train_loss[i], val_loss[i], val_accuracy[i]);
    out += buf;
  }
  return out;
}

namespace {

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

Split stratified_split(std::span<const int> labels, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Split s;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (idx.size() < 2)
      throw ConfigError("stratified split needs at least 2 epochs of class " + std::to_string(cls));
    shuffle(idx, rng);
    auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.insert(s.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

PreparedData prepare(const std::vector<Epoch>& dataset, const FilterSpec& filter) {
  if (dataset.empty()) throw ShapeError("empty dataset");
  PreparedData out;
  const double fs = dataset.front().sampling_rate;
  const auto cascade = design_bandpass(filter, fs);
  for (const auto& e : dataset) {
    if (e.sampling_rate != fs) throw ShapeError("dataset mixes sampling rates");
    if (e.channels != dataset.front().channels || e.samples != dataset.front().samples)
      throw ShapeError("dataset mixes epoch shapes");
  }
  out.inputs.resize(dataset.size());
  out.labels.resize(dataset.size());
  const auto n = static_cast<std::int64_t>(dataset.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out.inputs[i] = preprocess(dataset[i], cascade);
    out.labels[i] = dataset[i].label;
  }
  return out;
}

namespace {

struct SampleResult {
  double loss = 0.0;
  int predicted = 0;
};

// Loss and prediction for each listed sample.
std::vector<SampleResult> run_samples(const ModelParams& p, const ModelConfig& cfg, const PreparedData& data,
                                      std::span<const std::size_t> indices, double lambda) {
  std::vector<SampleResult> out(indices.size());
  const auto n = static_cast<std::int64_t>(indices.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& x = data.inputs[indices[i]];
    const int label = data.labels[indices[i]];
    const auto trace = forward(p, cfg, x);
    out[i].loss = total_loss(trace, label, trace.ae.x, lambda).total;
    out[i].predicted = trace.prediction.label;
  }
  return out;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::vector<Epoch>& dataset, const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw ConfigError("train: empty dataset");
  const PreparedData data = prepare(dataset, cfg.filter);
  bool has0 = false, has1 = false;
  for (int l : data.labels) (l == 0 ? has0 : has1) = true;
  if (!has0 || !has1) throw ConfigError("train: dataset must contain both classes");

  TrainResult r;
  r.model = cfg.model_for(dataset.front().channels, dataset.front().samples);
  r.split = stratified_split(data.labels, cfg.split_fraction, cfg.seed);

  ModelParams params = init_model(r.model, cfg.seed);
  r.best = params;
  AdamState adam;
  const AdamSettings settings{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon};
  std::mt19937_64 order_rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ull);
  std::vector<std::size_t> order = r.split.train;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, count);
      std::vector<std::span<const double>> inputs;
      std::vector<int> labels;
      for (std::size_t i : batch) {
        inputs.emplace_back(data.inputs[i]);
        labels.push_back(data.labels[i]);
      }
      const auto res = batch_gradient(params, r.model, inputs, labels, cfg.lambda_recon, cfg.deterministic_mode);
      loss_sum += res.loss_sum;
      const ModelParams& grad = res.grad;
      auto flat = params.flatten();
      auto g = grad.flatten();
      for (auto& v : g) v /= static_cast<double>(count);
      adam_step(flat, g, adam, settings);
      params.assign(flat);
    }
    if (!all_finite(params.flatten())) throw NumericError("train: parameters became non-finite at epoch " + std::to_string(epoch));

    const auto val = run_samples(params, r.model, data, r.split.validation, cfg.lambda_recon);
    double val_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      val_loss += val[i].loss;
      if (val[i].predicted == data.labels[r.split.validation[i]]) ++correct;
    }
    const double n_val = static_cast<double>(val.size());
    const double acc = static_cast<double>(correct) / n_val;
    r.history.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    r.history.val_loss.push_back(val_loss / n_val);
    r.history.val_accuracy.push_back(acc);

    if (!have_best || acc > r.best_val_accuracy) {
      have_best = true;
      r.best = params;
      r.best_epoch = epoch;
      r.best_val_accuracy = acc;
    }
    if (on_epoch) on_epoch(epoch, r.history);
    if (cfg.stop_at_perfect_validation && acc >= 1.0) break;
  }
  return r;
}

std::vector<int> predict_labels(const ModelParams& p, const ModelConfig& cfg, const PreparedData& data) {
  std::vector<std::size_t> all(data.inputs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto res = run_samples(p, cfg, data, all, 0.0);
  std::vector<int> out;
  out.reserve(res.size());
  for (const auto& s : res) out.push_back(s.predicted);
  return out;
}

Metrics evaluate(const ModelParams& p, const ModelConfig& cfg, const std::vector<Epoch>& dataset) {
  if (dataset.empty()) throw ShapeError("evaluate: empty dataset");
  const auto data = prepare(dataset, cfg.filter);
  return compute_metrics(confusion(predict_labels(p, cfg, data), data.labels));
}

EmbeddingStage parse_embedding_stage(std::string_view s) {
  if (s == "raw") return EmbeddingStage::raw;
  if (s == "latent") return EmbeddingStage::latent;
  throw ConfigError("unknown embedding stage '" + std::string(s) + "' (expected raw|latent)");
}

std::string export_embeddings(const ModelParams& p, const ModelConfig& cfg, const std::vector<Epoch>& dataset,
                              EmbeddingStage stage) {
  const auto data = prepare(dataset, cfg.filter);
  std::vector<std::vector<double>> rows(data.inputs.size());
  if (stage == EmbeddingStage::raw) {
    rows = data.inputs;
  } else {
    const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) rows[i] = forward(p, cfg, data.inputs[i]).csie.aggregate;
  }
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  std::ostringstream os;
  os << "label";
  for (std::size_t j = 0; j < width; ++j) os << ",x" << j;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << data.labels[i];
    for (double v : rows[i]) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cfpn
