// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsmixer/app/run_config.h"
#include "tsmixer/data/synthetic.h"
#include "tsmixer/error.h"
#include "tsmixer/model/checkpoint.h"
#include "tsmixer/profile/profiler.h"
#include "tsmixer/train/embeddings.h"
#include "tsmixer/train/report.h"
#include "tsmixer/train/workflows.h"

namespace tsmixer::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Holds an exclusive advisory lock on <dir>/.lock for the object's lifetime.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path file = dir / ".lock";
    fd_ = ::open(file.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file '" + file.string() + "': " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("output directory '" + dir.string() + "' is in use by another run");
    }
  }
  ~DirectoryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string data;
  std::string variant;
  std::string out;
  std::string seeds;
  std::optional<std::size_t> epochs;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override a config entry, e.g. --set model.nl=3 (repeatable)");
  cmd->add_option("--data", o.data, "Dataset CSV (data.path)");
  cmd->add_option("--variant", o.variant, "Model variant, e.g. \"CI-TSMixer(G,H)\" (model.variant)");
  cmd->add_option("--out", o.out, "Output directory (output.dir)");
  cmd->add_option("--seeds", o.seeds, "Seed list or range, e.g. 42-46 (train.seeds)");
  cmd->add_option("--epochs", o.epochs, "Epoch budget (train.epochs)");
}

app::RunConfig resolve(const CommonOptions& o) {
  std::vector<std::string> overrides = o.sets;
  if (!o.data.empty()) overrides.push_back("data.path=" + o.data);
  if (!o.variant.empty()) overrides.push_back("model.variant=" + o.variant);
  if (!o.out.empty()) overrides.push_back("output.dir=" + o.out);
  if (!o.seeds.empty()) overrides.push_back("train.seeds=" + o.seeds);
  if (o.epochs) overrides.push_back("train.epochs=" + std::to_string(*o.epochs));
  std::optional<fs::path> path;
  if (!o.config.empty()) path = o.config;
  return app::load_run_config(path, overrides);
}

data::SeriesFrame load_dataset(const app::RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset given (use --data or data.path)");
  if (!fs::exists(cfg.dataset)) throw DataError("dataset '" + cfg.dataset.string() + "' does not exist");
  return data::load_csv(cfg.dataset, cfg.date_column);
}

// Validates everything that does not depend on the data, then binds the
// model to the dataset's channel count and validates again.
void bind_channels(model::ModelConfig& config, std::size_t channels) {
  config.channels = channels;
  model::validate(config);
}

std::string seed_stem(std::uint64_t seed) { return "model-seed" + std::to_string(seed); }

profile::CostReport cost_of(const model::ForecastModel& m, std::size_t windows) {
  profile::CostReport cost;
  cost.params = profile::count_params(m);
  cost.macs = profile::count_macs(m.config(), {.windows = windows, .channels = m.config().channels, .sl = 0});
  cost.measured_macs_per_window = profile::measure_macs_per_window(m);
  return cost;
}

void summarize(std::ostream& out, const train::RunReport& report, const fs::path& path) {
  out << model::to_string(report.config.variant) << " on " << report.dataset << " (fl=" << report.config.fl
      << ", loss=" << report.loss_tag << ")\n";
  for (const auto& s : report.seeds) {
    out << "  seed " << s.seed << ": epochs " << s.curve.size() << ", best " << s.best_epoch << ", test mse "
        << s.test.mse << ", mae " << s.test.mae << '\n';
  }
  out << "  mean mse " << report.summary.mse_mean << " +/- " << report.summary.mse_std << ", mean mae "
      << report.summary.mae_mean << " +/- " << report.summary.mae_std << '\n';
  out << "report: " << path.string() << '\n';
}

train::RunReport base_report(const char* command, const app::RunConfig& cfg, const model::ModelConfig& mc,
                             const train::PreparedData& data) {
  train::RunReport report;
  report.command = command;
  report.dataset = cfg.dataset_name;
  report.config = mc;
  report.plan = cfg.plan;
  report.split = data.split;
  report.scaler = data.scaler;
  return report;
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
  app::RunConfig cfg = resolve(o);
  cfg.plan.mode = train::Mode::kSupervised;
  model::validate(cfg.model);
  cfg.plan.validate();
  const data::SeriesFrame frame = load_dataset(cfg);
  model::ModelConfig mc = cfg.model;
  bind_channels(mc, frame.channels);
  DirectoryLock lock(cfg.output_dir);
  const train::PreparedData data = train::prepare_data(frame, cfg.split, mc.sl, mc.fl, cfg.plan.window_stride);

  train::MultiSeedRun run =
      train::run_seeds([&](std::uint64_t seed) { return model::ForecastModel(mc, seed); }, data, cfg.plan);
  train::RunReport report = base_report("train", cfg, mc, data);
  report.loss_tag = run.models.front().loss_tag();
  report.selection_metric = data.val.empty() ? "train_" + report.loss_tag : "val_" + report.loss_tag;
  report.seeds = run.seeds;
  report.summary = train::aggregate(report.seeds);
  report.cost = cost_of(run.models.front(), data.train.size());
  for (std::size_t i = 0; i < run.models.size(); ++i) {
    model::save_forecast_model(cfg.output_dir / seed_stem(cfg.plan.seeds[i]), run.models[i]);
  }
  const fs::path path = cfg.output_dir / "report.json";
  train::write_report(path, report);
  summarize(out, report, path);
  return 0;
}

int cmd_pretrain(const CommonOptions& o, std::ostream& out) {
  app::RunConfig cfg = resolve(o);
  cfg.plan.mode = train::Mode::kPretrain;
  if (cfg.model.stride != cfg.model.pl) {
    throw ConfigError("pretraining needs non-overlapping patches; set model.pl and model.stride equal (e.g. 8)");
  }
  model::validate(cfg.model);
  cfg.plan.validate();
  const data::SeriesFrame frame = load_dataset(cfg);
  model::ModelConfig mc = cfg.model;
  bind_channels(mc, frame.channels);
  DirectoryLock lock(cfg.output_dir);
  const train::PreparedData data = train::prepare_data(frame, cfg.split, mc.sl, mc.fl, cfg.plan.window_stride);

  const std::uint64_t seed = cfg.plan.seeds.front();
  model::PretrainModel pm(mc, seed);
  const train::PretrainResult result = train::pretrain_mtsm(pm, data, cfg.plan, seed);
  const fs::path stem = cfg.output_dir / "backbone";
  model::save_backbone(stem, pm.backbone(), mc);

  train::RunReport report = base_report("pretrain", cfg, mc, data);
  report.plan.seeds = {seed};
  report.loss_tag = "masked_mse";
  report.selection_metric = data.val.empty() ? "train_masked_mse" : "val_masked_mse";
  train::SeedResult s;
  s.seed = seed;
  s.curve = result.curve;
  s.best_epoch = result.best_epoch;
  s.best_val_loss = result.best_val_loss;
  s.stopped_early = result.stopped_early;
  report.seeds.push_back(s);
  const fs::path path = cfg.output_dir / "pretrain_report.json";
  train::write_report(path, report);
  out << "pretrained " << model::to_string(mc.variant) << " backbone for " << result.curve.size()
      << " epochs, best masked loss " << result.best_val_loss << " at epoch " << result.best_epoch << '\n';
  out << "checkpoint: " << stem.string() << ".json\n";
  return 0;
}

// Backbone fields come from the checkpoint; heads, horizon and training
// settings from the run configuration.
model::ModelConfig finetune_config(const model::ModelConfig& run, const model::ModelConfig& ckpt, bool variant_given) {
  model::ModelConfig mc = run;
  if (variant_given) {
    if (run.variant.backbone != ckpt.variant.backbone ||
        run.variant.enhancements.gated != ckpt.variant.enhancements.gated) {
      throw ConfigError("variant " + model::to_string(run.variant) + " does not match the checkpoint backbone " +
                        model::to_string(ckpt.variant));
    }
  } else {
    mc.variant.backbone = ckpt.variant.backbone;
    mc.variant.enhancements.gated = ckpt.variant.enhancements.gated;
  }
  mc.sl = ckpt.sl;
  mc.pl = ckpt.pl;
  mc.stride = ckpt.stride;
  mc.nl = ckpt.nl;
  mc.fs = ckpt.fs;
  mc.hf = ckpt.hidden();
  mc.ef = ckpt.expansion();
  return mc;
}

int cmd_finetune(const CommonOptions& o, const std::string& backbone_stem, std::ostream& out) {
  app::RunConfig cfg = resolve(o);
  cfg.plan.mode = train::Mode::kFinetune;
  cfg.plan.validate();
  const model::Checkpoint ckpt = model::read_checkpoint(backbone_stem);
  const bool variant_given = !o.variant.empty() || std::any_of(o.sets.begin(), o.sets.end(), [](const std::string& s) {
    return s.rfind("model.variant", 0) == 0;
  });
  model::ModelConfig mc = finetune_config(cfg.model, ckpt.config, variant_given);
  model::validate(mc);
  const data::SeriesFrame frame = load_dataset(cfg);
  if (ckpt.config.variant.backbone == model::BackboneType::kVanilla && ckpt.config.channels != frame.channels) {
    throw ConfigError("V-TSMixer checkpoint was trained on " + std::to_string(ckpt.config.channels) +
                      " channels but the dataset has " + std::to_string(frame.channels));
  }
  bind_channels(mc, frame.channels);
  DirectoryLock lock(cfg.output_dir);
  const train::PreparedData data = train::prepare_data(frame, cfg.split, mc.sl, mc.fl, cfg.plan.window_stride);

  train::MultiSeedRun run = train::run_seeds(
      [&](std::uint64_t seed) { return model::ForecastModel(mc, model::load_backbone(ckpt), seed); }, data,
      cfg.plan);
  train::RunReport report = base_report("finetune", cfg, mc, data);
  report.loss_tag = run.models.front().loss_tag();
  report.selection_metric = data.val.empty() ? "train_" + report.loss_tag : "val_" + report.loss_tag;
  report.seeds = run.seeds;
  report.summary = train::aggregate(report.seeds);
  report.cost = cost_of(run.models.front(), data.train.size());
  for (std::size_t i = 0; i < run.models.size(); ++i) {
    model::save_forecast_model(cfg.output_dir / seed_stem(cfg.plan.seeds[i]), run.models[i]);
  }
  const fs::path path = cfg.output_dir / "report.json";
  train::write_report(path, report);
  summarize(out, report, path);
  return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint, const std::vector<std::string>& best_of,
             bool raw_units, std::ostream& out) {
  if (!best_of.empty()) {
    if (!checkpoint.empty()) throw ConfigError("--best-of and --checkpoint are mutually exclusive");
    std::vector<fs::path> paths(best_of.begin(), best_of.end());
    out << train::best_of(paths) << '\n';
    return 0;
  }
  if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --best-of");
  app::RunConfig cfg = resolve(o);
  const model::ForecastModel m = model::load_forecast_model(checkpoint);
  const data::SeriesFrame frame = load_dataset(cfg);
  if (frame.channels != m.config().channels) {
    throw ConfigError("checkpoint expects " + std::to_string(m.config().channels) + " channels, dataset has " +
                      std::to_string(frame.channels));
  }
  const train::PreparedData data =
      train::prepare_data(frame, cfg.split, m.config().sl, m.config().fl, cfg.plan.window_stride);
  const train::Metrics metrics = train::evaluate(m, data.test, 64, raw_units ? &data.scaler : nullptr);
  out << json{{"dataset", cfg.dataset_name},
              {"variant", model::to_string(m.config().variant)},
              {"fl", m.config().fl},
              {"test_mse", metrics.mse},
              {"test_mae", metrics.mae},
              {"test_windows", metrics.windows},
              {"metric_scale", raw_units ? "raw" : "standardized"}}
             .dump(2)
      << '\n';
  return 0;
}

std::string millions(std::uint64_t v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << static_cast<double>(v) / 1e6 << "M";
  return s.str();
}

int cmd_profile(const CommonOptions& o, std::size_t windows, std::size_t channels, bool measure,
                const std::string& json_path, std::ostream& out) {
  app::RunConfig cfg = resolve(o);
  model::ModelConfig mc = cfg.model;
  if (channels != 0) mc.channels = channels;
  model::validate(mc);
  std::optional<train::PreparedData> data;
  if (!cfg.dataset.empty()) {
    const data::SeriesFrame frame = load_dataset(cfg);
    bind_channels(mc, frame.channels);
    data.emplace(train::prepare_data(frame, cfg.split, mc.sl, mc.fl, cfg.plan.window_stride));
    windows = data->train.size();
  }
  model::ForecastModel m(mc, cfg.plan.seeds.front());
  profile::CostReport cost = cost_of(m, windows);
  if (measure) {
    std::optional<data::WindowSet> synthetic;
    if (!data) {
      std::vector<data::SineChannel> sines(mc.channels);
      for (std::size_t ch = 0; ch < mc.channels; ++ch) sines[ch].period = 24.0 + 3.0 * static_cast<double>(ch);
      synthetic.emplace(data::make_windows(data::sinusoid_frame(mc.sl + mc.fl + 31, sines), mc.sl, mc.fl));
    }
    const data::WindowSet& train_windows = data ? data->train : *synthetic;
    cost.epoch = profile::measure_epoch(m, train_windows, cfg.plan.batch_size);
  }

  out << std::left;
  auto line = [&](const std::string& k, const std::string& v) { out << "  " << std::setw(26) << k << v << '\n'; };
  out << model::to_string(mc.variant) << " (c=" << mc.channels << ", sl=" << mc.sl << ", pl=" << mc.pl
      << ", s=" << mc.stride << ", fl=" << mc.fl << ", nl=" << mc.nl << ", hf=" << mc.hidden()
      << ", ef=" << mc.expansion() << ")\n";
  line("NPARAMS", std::to_string(cost.params.total) + " (" + millions(cost.params.total) + ")");
  for (const auto& mod : cost.params.breakdown) line("  " + mod.module, std::to_string(mod.params));
  line("MACs / window", std::to_string(cost.macs.per_window));
  line("windows / epoch", std::to_string(windows));
  line("MACs / epoch", std::to_string(cost.macs.per_epoch) + " (" +
                           std::to_string(static_cast<double>(cost.macs.per_epoch) / 1e12) + " T)");
  line("measured MACs / window", std::to_string(cost.measured_macs_per_window));
  if (cost.epoch) {
    line("epoch time (s)", std::to_string(cost.epoch->epoch_time_sec));
    line("peak tensor bytes", std::to_string(cost.epoch->peak_bytes));
  }
  out << "  MAC convention: " << profile::kMacConvention << '\n';
  const std::string text = train::to_json(cost);
  if (json_path.empty()) {
    out << text << '\n';
  } else {
    std::ofstream file(json_path, std::ios::trunc);
    if (!file) throw DataError("cannot write '" + json_path + "'");
    file << text << '\n';
  }
  return 0;
}

int cmd_embeddings(const CommonOptions& o, const std::string& backbone_stem, const train::EmbeddingOptions& options,
                   const std::string& csv, std::ostream& out) {
  app::RunConfig cfg = resolve(o);
  const model::Checkpoint ckpt = model::read_checkpoint(backbone_stem);
  const model::Backbone backbone = model::load_backbone(ckpt);
  const data::SeriesFrame frame = load_dataset(cfg);
  const model::BackboneConfig& bb = backbone.config();
  if (bb.type != model::BackboneType::kChannelIndependent && bb.channels != frame.channels) {
    throw ConfigError("backbone expects " + std::to_string(bb.channels) + " channels, dataset has " +
                      std::to_string(frame.channels));
  }
  const train::PreparedData data =
      train::prepare_data(frame, cfg.split, ckpt.config.sl, ckpt.config.fl, cfg.plan.window_stride);
  const train::EmbeddingExport result = train::export_embeddings(backbone, data.train, ckpt.config.stride, options);
  const fs::path path = csv.empty() ? cfg.output_dir / "embeddings.csv" : fs::path(csv);
  train::write_embeddings_csv(path, result);
  out << "wrote " << result.anchors.size() << " anchors over " << result.corpus.size() << " patches to "
      << path.string() << '\n';
  return 0;
}

void error_record(std::ostream& err, const char* kind, const std::string& message, int code,
                  std::optional<int> epoch = std::nullopt) {
  json j{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  if (epoch) j["error"]["epoch"] = *epoch;
  err << j.dump() << '\n';
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TSMixer forecasting: train, pretrain, finetune, evaluate and profile patched MLP-Mixer models",
               "tsmixer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tsmixer 0.1.0");

  CommonOptions train_o, pre_o, fine_o, eval_o, prof_o, emb_o;
  auto* train_cmd = app.add_subcommand("train", "Supervised training over every seed");
  add_common(train_cmd, train_o);

  auto* pre_cmd = app.add_subcommand("pretrain", "Masked self-supervised pretraining of a backbone");
  add_common(pre_cmd, pre_o);

  std::string fine_backbone;
  auto* fine_cmd = app.add_subcommand("finetune", "Linear probing then full finetuning from a pretrained backbone");
  add_common(fine_cmd, fine_o);
  fine_cmd->add_option("--backbone-checkpoint", fine_backbone, "Checkpoint stem written by pretrain")->required();

  std::string eval_ckpt;
  std::vector<std::string> eval_best;
  bool raw_units = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split, or merge reports");
  add_common(eval_cmd, eval_o);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Forecast model checkpoint stem");
  eval_cmd->add_option("--best-of", eval_best, "Report files; keeps the lowest mean MSE per (dataset, fl)")
      ->expected(2, -1);
  eval_cmd->add_flag("--raw-units", raw_units, "Report metrics in the data's original units");

  std::size_t prof_windows = 1;
  std::size_t prof_channels = 0;
  bool prof_measure = false;
  std::string prof_json;
  auto* prof_cmd = app.add_subcommand("profile", "Parameter, MAC, epoch-time and memory accounting");
  add_common(prof_cmd, prof_o);
  prof_cmd->add_option("--windows", prof_windows, "Windows per epoch when no dataset is given");
  prof_cmd->add_option("--channels", prof_channels, "Channel count when no dataset is given");
  prof_cmd->add_flag("--measure", prof_measure, "Time training epochs and record peak tensor memory");
  prof_cmd->add_option("--json", prof_json, "Write the JSON cost report here instead of standard output");

  std::string emb_backbone;
  std::string emb_csv;
  train::EmbeddingOptions emb_options;
  auto* emb_cmd = app.add_subcommand("export-embeddings", "Nearest-neighbour table of backbone patch embeddings");
  add_common(emb_cmd, emb_o);
  emb_cmd->add_option("--backbone-checkpoint", emb_backbone, "Backbone checkpoint stem")->required();
  emb_cmd->add_option("--anchors", emb_options.anchors, "Number of sampled anchor patches");
  emb_cmd->add_option("--k", emb_options.k, "Neighbours per anchor");
  emb_cmd->add_option("--max-windows", emb_options.max_windows, "Windows drawn into the corpus (0 = all)");
  emb_cmd->add_option("--anchor-seed", emb_options.seed, "Anchor sampling seed");
  emb_cmd->add_option("--csv", emb_csv, "Output CSV (default <out>/embeddings.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    error_record(err, "config", e.what(), 2);
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(train_o, out);
    if (*pre_cmd) return cmd_pretrain(pre_o, out);
    if (*fine_cmd) return cmd_finetune(fine_o, fine_backbone, out);
    if (*eval_cmd) return cmd_eval(eval_o, eval_ckpt, eval_best, raw_units, out);
    if (*prof_cmd) return cmd_profile(prof_o, prof_windows, prof_channels, prof_measure, prof_json, out);
    if (*emb_cmd) return cmd_embeddings(emb_o, emb_backbone, emb_options, emb_csv, out);
  } catch (const DivergenceError& e) {
    error_record(err, e.kind(), e.what(), e.exit_code(), e.epoch());
    return e.exit_code();
  } catch (const Error& e) {
    error_record(err, e.kind(), e.what(), e.exit_code());
    return e.exit_code();
  } catch (const std::exception& e) {
    error_record(err, "internal", e.what(), 1);
    return 1;
  }
  return 1;
}

}  // namespace tsmixer::cli
