#include "cfpn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>

#include <CLI11.hpp>

#include "cfpn/checkpoint.hpp"
#include "cfpn/config.hpp"
#include "cfpn/cost.hpp"
#include "cfpn/epoch_file.hpp"
#include "cfpn/verify.hpp"

namespace cfpn::cli {

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  std::string out;
  std::size_t n = 100, ch = 8, t = 256;
  double fs = 250.0, snr = 10.0;
  std::uint64_t seed = 0;
};

struct FilterArgs {
  std::string data, out;
  FilterSpec spec;
};

struct TrainArgs {
  std::string data, config, out;
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct EvalArgs {
  std::string ckpt, data;
  bool per_subject = false;
};

struct GradcheckArgs {
  bool toy = false;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

struct CostArgs {
  std::string config, ckpt, out;
  std::size_t ch = 8, t = 256;
  int reps = 5;
  std::uint64_t seed = 0;
};

struct ExportArgs {
  std::string ckpt, data, stage = "latent", out;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  const auto epochs = generate_synthetic(a.n, a.ch, a.t, a.fs, a.snr, a.seed);
  fs::create_directories(a.out);
  std::vector<std::string> names;
  char buf[32];
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "epoch_%05zu.eeg", i);
    write_epoch_file(epochs[i], fs::path(a.out) / buf);
    names.emplace_back(buf);
  }
  write_manifest(names, fs::path(a.out) / "manifest.txt");
  out << "wrote " << epochs.size() << " epochs to " << a.out << "\n";
  return ok;
}

int do_filter(const FilterArgs& a, std::ostream& out) {
  const auto entries = read_manifest(a.data);
  const auto base = fs::path(a.data).parent_path();
  fs::create_directories(a.out);
  std::vector<std::string> names;
  for (const auto& rel : entries) {
    const Epoch e = read_epoch_file(base / rel);
    const auto cascade = design_bandpass(a.spec, e.sampling_rate);
    const auto name = rel.filename().string();
    write_epoch_file(apply_bandpass(e, cascade), fs::path(a.out) / name);
    names.push_back(name);
  }
  write_manifest(names, fs::path(a.out) / "manifest.txt");
  out << "filtered " << names.size() << " epochs into " << a.out << "\n";
  return ok;
}

int do_train(TrainArgs a, bool seed_given, std::ostream& out, std::ostream& err) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : parse_config(a.config);
  if (seed_given) cfg.seed = a.seed;
  const auto dataset = load_dataset(a.data);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_file_atomic(dir / "config.txt", format_config(cfg));

  const auto result = train(cfg, dataset, [&](std::size_t epoch, const TrainHistory& h) {
    if (!a.quiet)
      err << "epoch " << epoch << " train_loss " << h.train_loss.back() << " val_loss " << h.val_loss.back()
          << " val_acc " << h.val_accuracy.back() << "\n";
  });
  write_file_atomic(dir / "history.csv", result.history.to_csv());
  save_checkpoint(result.best, result.model, dir / "best.cfpn");

  const auto sample = prepare({dataset.front()}, cfg.filter);
  const auto report = cost_report(result.best, result.model, sample.inputs.front(), 5);
  write_file_atomic(dir / "cost.txt", report.to_text());

  out << "best_epoch " << result.best_epoch << " val_accuracy " << result.best_val_accuracy << " epochs_run "
      << result.history.epochs() << "\n";
  return ok;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  const auto ck = load_checkpoint(a.ckpt);
  const auto dataset = load_dataset(a.data);
  const auto data = prepare(dataset, ck.config.filter);
  const auto preds = predict_labels(ck.params, ck.config, data);

  out << kMetricsCsvHeader << "\n";
  if (a.per_subject) {
    std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_subject;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      auto& [p, l] = by_subject[dataset[i].subject_id];
      p.push_back(preds[i]);
      l.push_back(data.labels[i]);
    }
    for (const auto& [id, pl] : by_subject)
      out << metrics_csv_row(id, compute_metrics(confusion(pl.first, pl.second))) << "\n";
  }
  out << metrics_csv_row("all", compute_metrics(confusion(preds, data.labels))) << "\n";
  return ok;
}

int do_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  struct Stage {
    const char* name;
    GradCheckReport report;
  };
  const Stage stages[] = {
      {"autoencoder", check_ae_gradients(a.seed)},
      {"nsdru", check_nsdru_gradients(a.seed)},
      {"csie", check_csie_gradients(a.seed)},
      {"pipeline", check_pipeline_gradients(a.seed)},
  };
  double worst = 0.0;
  for (const auto& s : stages) {
    out << s.name << " max_relative_error " << s.report.max_relative_error << "\n";
    worst = std::max(worst, s.report.max_relative_error);
  }
  out << "max_relative_error " << worst << "\n";
  return worst < a.tolerance ? ok : numeric;
}

int do_cost(const CostArgs& a, bool seed_given, std::ostream& out) {
  ModelConfig model;
  ModelParams params;
  if (!a.ckpt.empty()) {
    auto ck = load_checkpoint(a.ckpt);
    model = ck.config;
    params = std::move(ck.params);
  } else {
    RunConfig cfg = a.config.empty() ? RunConfig{} : parse_config(a.config);
    if (seed_given) cfg.seed = a.seed;
    model = cfg.model_for(a.ch, a.t);
    params = init_model(model, cfg.seed);
  }
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(model.input_width());
  for (auto& v : x) v = u(rng);
  const auto text = cost_report(params, model, x, a.reps).to_text();
  if (a.out.empty())
    out << text;
  else
    write_file_atomic(a.out, text);
  return ok;
}

int do_export(const ExportArgs& a, std::ostream& out) {
  const auto stage = parse_embedding_stage(a.stage);
  const auto ck = load_checkpoint(a.ckpt);
  const auto csv = export_embeddings(ck.params, ck.config, load_dataset(a.data), stage);
  if (a.out.empty())
    out << csv;
  else
    write_file_atomic(a.out, csv);
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature-pyramid EEG sentiment classifier"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic two-class EEG dataset");
  c_synth->add_option("--out", synth.out, "output directory")->required();
  c_synth->add_option("--n", synth.n, "epochs per class");
  c_synth->add_option("--ch", synth.ch, "channels");
  c_synth->add_option("--t", synth.t, "samples per epoch");
  c_synth->add_option("--fs", synth.fs, "sampling rate in Hz");
  c_synth->add_option("--snr", synth.snr, "signal-to-noise ratio in dB");
  c_synth->add_option("--seed", synth.seed, "random seed");

  FilterArgs filter;
  auto* c_filter = app.add_subcommand("filter", "bandpass every epoch in a manifest");
  c_filter->add_option("--data", filter.data, "input manifest")->required();
  c_filter->add_option("--out", filter.out, "output directory")->required();
  c_filter->add_option("--f-low", filter.spec.f_low, "low cutoff in Hz");
  c_filter->add_option("--f-high", filter.spec.f_high, "high cutoff in Hz");
  c_filter->add_option("--order", filter.spec.order, "bandpass order (even)");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train on a dataset manifest");
  c_train->add_option("--data", tr.data, "dataset manifest")->required();
  c_train->add_option("--config", tr.config, "key = value config file");
  c_train->add_option("--out", tr.out, "run directory")->required();
  auto* train_seed = c_train->add_option("--seed", tr.seed, "overrides the config seed");
  c_train->add_flag("--quiet", tr.quiet, "no per-epoch progress");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint, print metrics CSV");
  c_eval->add_option("--ckpt", ev.ckpt, "checkpoint file")->required();
  c_eval->add_option("--data", ev.data, "dataset manifest")->required();
  c_eval->add_flag("--per-subject", ev.per_subject, "one row per subject before the overall row");

  GradcheckArgs gc;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  c_grad->add_flag("--toy", gc.toy, "use the built-in toy configuration")->required();
  c_grad->add_option("--seed", gc.seed, "random seed");
  c_grad->add_option("--tolerance", gc.tolerance, "maximum relative error");

  CostArgs cost;
  auto* c_cost = app.add_subcommand("cost", "parameter, FLOP and timing report");
  c_cost->add_option("--config", cost.config, "key = value config file");
  c_cost->add_option("--ckpt", cost.ckpt, "use a trained checkpoint instead of a config");
  c_cost->add_option("--ch", cost.ch, "channels");
  c_cost->add_option("--t", cost.t, "samples per epoch");
  c_cost->add_option("--reps", cost.reps, "timed repetitions (>= 3)");
  auto* cost_seed = c_cost->add_option("--seed", cost.seed, "random seed");
  c_cost->add_option("--out", cost.out, "write the report here instead of stdout");

  ExportArgs ex;
  auto* c_export = app.add_subcommand("export-embeddings", "write raw or latent features as CSV");
  c_export->add_option("--ckpt", ex.ckpt, "checkpoint file")->required();
  c_export->add_option("--data", ex.data, "dataset manifest")->required();
  c_export->add_option("--stage", ex.stage, "raw|latent");
  c_export->add_option("--out", ex.out, "output CSV (stdout when omitted)");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? ok : usage;
  }

  try {
    if (c_synth->parsed()) return do_synth(synth, out);
    if (c_filter->parsed()) return do_filter(filter, out);
    if (c_train->parsed()) return do_train(tr, train_seed->count() > 0, out, err);
    if (c_eval->parsed()) return do_eval(ev, out);
    if (c_grad->parsed()) return do_gradcheck(gc, out);
    if (c_cost->parsed()) return do_cost(cost, cost_seed->count() > 0, out);
    if (c_export->parsed()) return do_export(ex, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return usage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return numeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return data;
  }
  return usage;
}

}  // namespace cfpn::cli
