// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/train/workflows.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "tsmixer/error.h"
#include "tsmixer/log.h"
#include "tsmixer/nn/adam.h"
#include "tsmixer/nn/tape.h"

namespace tsmixer::train {
namespace {

constexpr std::size_t kEvalBatch = 64;

// Hooks the generic loop needs from one workflow.
struct LoopHooks {
  nn::ParameterSet params;  // everything the optimizer owns and the snapshot restores
  // Loss of one training batch, with the tape recording.
  std::function<nn::Tensor(const data::WindowBatch&, std::mt19937_64&)> train_loss;
  // Mean loss over the validation windows in eval mode.
  std::function<double()> val_loss;
  // Called at the start of each epoch; returns whether the backbone is frozen.
  std::function<bool(std::size_t epoch)> on_epoch;
  // Epoch at which early-stopping patience starts counting.
  std::size_t patience_from = 0;
};

struct LoopResult {
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
  bool selected_on_train = false;
  std::optional<std::size_t> threshold_epoch;
};

void check_finite(double value, std::size_t epoch, const char* what) {
  if (!std::isfinite(value)) {
    throw DivergenceError(std::string("non-finite ") + what + " at epoch " + std::to_string(epoch),
                          static_cast<int>(epoch));
  }
}

LoopResult fit(const LoopHooks& hooks, const data::WindowSet& train, bool has_val, const TrainPlan& plan,
               std::size_t total_epochs, std::uint64_t seed) {
  if (train.empty()) throw DataError("training segment yields no windows");
  nn::Adam adam(hooks.params, nn::AdamOptions{.lr = plan.lr});
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  LoopResult result;
  result.selected_on_train = !has_val;
  std::vector<std::vector<double>> best = hooks.params.snapshot();
  std::size_t since_best = 0;
  std::size_t since_plateau = 0;
  double plateau_best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < total_epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.backbone_frozen = hooks.on_epoch ? hooks.on_epoch(epoch) : false;
    record.lr = adam.lr();

    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (const auto& group : data::group_batches(order, plan.batch_size)) {
      const data::WindowBatch batch = train.gather(group);
      nn::Tape::current().clear();
      adam.zero_grad();
      nn::Tensor loss = hooks.train_loss(batch, rng);
      const double value = loss.item();
      check_finite(value, epoch, "training loss");
      nn::backward(loss);
      adam.step();
      weighted += value * static_cast<double>(group.size());
    }
    nn::Tape::current().clear();
    record.train_loss = weighted / static_cast<double>(train.size());

    double selection = record.train_loss;
    if (has_val) {
      const double v = hooks.val_loss();
      check_finite(v, epoch, "validation loss");
      record.val_loss = v;
      selection = v;
    }
    result.curve.push_back(record);

    if (plan.stop_below && !result.threshold_epoch && record.train_loss < *plan.stop_below) {
      result.threshold_epoch = epoch;
    }

    if (selection < result.best_val_loss) {
      result.best_val_loss = selection;
      result.best_epoch = epoch;
      best = hooks.params.snapshot();
      since_best = 0;
    } else if (epoch >= hooks.patience_from) {
      ++since_best;
    }

    if (plan.lr_plateau) {
      if (selection < plateau_best) {
        plateau_best = selection;
        since_plateau = 0;
      } else if (++since_plateau >= plan.plateau_patience) {
        adam.set_lr(adam.lr() * plan.plateau_factor);
        since_plateau = 0;
      }
    }

    if (result.threshold_epoch) break;
    if (since_best >= plan.patience) {
      result.stopped_early = epoch + 1 < total_epochs;
      break;
    }
  }
  hooks.params.restore(best);
  return result;
}

SeedResult to_seed_result(std::uint64_t seed, LoopResult loop) {
  SeedResult out;
  out.seed = seed;
  out.curve = std::move(loop.curve);
  out.best_epoch = loop.best_epoch;
  out.best_val_loss = loop.best_val_loss;
  out.selected_on_train = loop.selected_on_train;
  out.stopped_early = loop.stopped_early;
  out.threshold_epoch = loop.threshold_epoch;
  return out;
}

LoopHooks forecast_hooks(model::ForecastModel& model, const PreparedData& data) {
  LoopHooks hooks;
  hooks.params = model.parameters();
  hooks.train_loss = [&model](const data::WindowBatch& batch, std::mt19937_64& rng) {
    nn::ForwardContext ctx{.training = true, .rng = &rng};
    return model.loss(model.forward(batch.inputs, ctx), batch.targets);
  };
  hooks.val_loss = [&model, &data]() { return objective(model, data.val, kEvalBatch); };
  return hooks;
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "supervised" || name == "train") return Mode::kSupervised;
  if (name == "pretrain") return Mode::kPretrain;
  if (name == "finetune") return Mode::kFinetune;
  throw ConfigError("unknown training mode '" + std::string(name) + "'");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kSupervised: return "supervised";
    case Mode::kPretrain: return "pretrain";
    case Mode::kFinetune: return "finetune";
  }
  return "supervised";
}

void TrainPlan::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (mode == Mode::kFinetune && probe_epochs > epochs) {
    throw ConfigError("probe_epochs (" + std::to_string(probe_epochs) + ") exceeds epochs (" +
                      std::to_string(epochs) + ")");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (window_stride == 0) throw ConfigError("window stride must be positive");
  if (lr_plateau && (!(plateau_factor > 0.0 && plateau_factor < 1.0) || plateau_patience == 0)) {
    throw ConfigError("plateau factor must lie in (0, 1) with positive patience");
  }
}

PreparedData prepare_data(const data::SeriesFrame& frame, data::SplitProfile profile, std::size_t sl, std::size_t fl,
                          std::size_t window_stride) {
  data::SplitFrames split = data::chrono_split(frame, profile, sl, fl);
  data::StandardScaler scaler = data::StandardScaler::fit(split.train);
  return PreparedData{
      .split = split.spec,
      .scaler = scaler,
      .train = data::make_windows(scaler.apply(split.train), sl, fl, window_stride),
      .val = data::make_windows(scaler.apply(split.val), sl, fl, window_stride),
      .test = data::make_windows(scaler.apply(split.test), sl, fl, window_stride),
  };
}

double objective(const model::ForecastModel& model, const data::WindowSet& windows, std::size_t batch_size) {
  if (windows.empty()) throw DataError("cannot compute a loss over an empty window set");
  nn::NoGradGuard guard;
  const nn::ForwardContext ctx{};
  double weighted = 0.0;
  for (const auto& group : data::group_batches(windows.size(), batch_size)) {
    const data::WindowBatch batch = windows.gather(group);
    weighted += model.loss(model.forward(batch.inputs, ctx), batch.targets).item() * static_cast<double>(group.size());
  }
  return weighted / static_cast<double>(windows.size());
}

Metrics evaluate(const model::ForecastModel& model, const data::WindowSet& windows, std::size_t batch_size,
                 const data::StandardScaler* raw_units) {
  if (windows.empty()) throw DataError("evaluation stream is empty");
  nn::NoGradGuard guard;
  const nn::ForwardContext ctx{};
  const std::size_t c = windows.channels();
  double se = 0.0;
  double ae = 0.0;
  std::size_t count = 0;
  for (const auto& group : data::group_batches(windows.size(), batch_size)) {
    const data::WindowBatch batch = windows.gather(group);
    const nn::Tensor forecast = model.forward(batch.inputs, ctx).forecast;
    const auto pred = forecast.data();
    const auto truth = batch.targets.data();
    for (std::size_t i = 0; i < pred.size(); ++i) {
      double p = pred[i];
      double t = truth[i];
      if (raw_units != nullptr) {
        p = raw_units->inverse_value(i % c, p);
        t = raw_units->inverse_value(i % c, t);
      }
      const double d = p - t;
      se += d * d;
      ae += std::abs(d);
    }
    count += pred.size();
  }
  return Metrics{.mse = se / static_cast<double>(count), .mae = ae / static_cast<double>(count),
                 .windows = windows.size()};
}

SeedResult train_supervised(model::ForecastModel& model, const PreparedData& data, const TrainPlan& plan,
                            std::uint64_t seed) {
  plan.validate();
  LoopHooks hooks = forecast_hooks(model, data);
  const nn::ParameterSet backbone = model.backbone_parameters();
  const std::uint64_t before = backbone.fingerprint();
  SeedResult out = to_seed_result(seed, fit(hooks, data.train, !data.val.empty(), plan, plan.epochs, seed));
  out.backbone_fingerprint_before = before;
  out.backbone_fingerprint_after_probe = before;
  if (!data.test.empty()) out.test = evaluate(model, data.test);
  return out;
}

SeedResult finetune(model::ForecastModel& model, const PreparedData& data, const TrainPlan& plan, std::uint64_t seed) {
  plan.validate();
  LoopHooks hooks = forecast_hooks(model, data);
  const nn::ParameterSet backbone = model.backbone_parameters();
  const std::uint64_t before = backbone.fingerprint();
  std::uint64_t after_probe = before;
  hooks.patience_from = plan.probe_epochs;
  hooks.on_epoch = [&](std::size_t epoch) {
    const bool frozen = epoch < plan.probe_epochs;
    if (epoch == plan.probe_epochs) after_probe = backbone.fingerprint();
    backbone.set_requires_grad(!frozen);
    return frozen;
  };
  LoopResult loop;
  try {
    loop = fit(hooks, data.train, !data.val.empty(), plan, plan.probe_epochs + plan.epochs, seed);
  } catch (...) {
    backbone.set_requires_grad(true);
    throw;
  }
  // A run that stopped inside the probe phase never unfroze.
  if (loop.curve.size() <= plan.probe_epochs) after_probe = backbone.fingerprint();
  backbone.set_requires_grad(true);
  SeedResult out = to_seed_result(seed, std::move(loop));
  out.backbone_fingerprint_before = before;
  out.backbone_fingerprint_after_probe = after_probe;
  if (!data.test.empty()) out.test = evaluate(model, data.test);
  return out;
}

PretrainResult pretrain_mtsm(model::PretrainModel& model, const PreparedData& data, const TrainPlan& plan,
                             std::uint64_t seed) {
  plan.validate();
  if (model.config().stride != model.config().pl) {
    throw ConfigError("masked pretraining needs non-overlapping patches (stride == patch length)");
  }
  LoopHooks hooks;
  hooks.params = model.parameters();
  hooks.train_loss = [&model](const data::WindowBatch& batch, std::mt19937_64& rng) {
    nn::ForwardContext ctx{.training = true, .rng = &rng};
    const std::uint64_t mask_seed = rng();
    return model.loss(model.forward(batch.inputs, mask_seed, ctx));
  };
  // Validation masks are fixed per batch position so epochs are comparable.
  hooks.val_loss = [&model, &data, seed]() {
    nn::NoGradGuard guard;
    const nn::ForwardContext ctx{};
    double weighted = 0.0;
    std::uint64_t index = 0;
    for (const auto& group : data::group_batches(data.val.size(), kEvalBatch)) {
      const data::WindowBatch batch = data.val.gather(group);
      const double v = model.loss(model.forward(batch.inputs, seed * 1000003ULL + index++, ctx)).item();
      weighted += v * static_cast<double>(group.size());
    }
    return weighted / static_cast<double>(data.val.size());
  };
  LoopResult loop = fit(hooks, data.train, !data.val.empty(), plan, plan.epochs, seed);
  return PretrainResult{.seed = seed,
                        .curve = std::move(loop.curve),
                        .best_epoch = loop.best_epoch,
                        .best_val_loss = loop.best_val_loss,
                        .stopped_early = loop.stopped_early};
}

MultiSeedRun run_seeds(const ModelFactory& factory, const PreparedData& data, const TrainPlan& plan) {
  plan.validate();
  const std::size_t count = plan.seeds.size();
  std::vector<std::optional<model::ForecastModel>> models(count);
  std::vector<SeedResult> results(count);
  std::vector<std::exception_ptr> errors(count);

  auto work = [&](std::size_t i) {
    try {
      const std::uint64_t seed = plan.seeds[i];
      models[i].emplace(factory(seed));
      results[i] = plan.mode == Mode::kFinetune ? finetune(*models[i], data, plan, seed)
                                                : train_supervised(*models[i], data, plan, seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (plan.parallel_seeds && count > 1) {
    std::vector<std::thread> workers;
    workers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) workers.emplace_back(work, i);
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < count; ++i) work(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MultiSeedRun run;
  run.seeds = std::move(results);
  for (auto& m : models) run.models.push_back(std::move(*m));
  return run;
}

}  // namespace tsmixer::train
