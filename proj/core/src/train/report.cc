// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/train/report.h"

#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "config_json.h"
#include "tsmixer/error.h"

namespace tsmixer::train {
namespace {

using nlohmann::json;

json plan_json(const TrainPlan& plan) {
  json j{
      {"mode", std::string(to_string(plan.mode))},
      {"epochs", plan.epochs},
      {"patience", plan.patience},
      {"lr", plan.lr},
      {"batch_size", plan.batch_size},
      {"seeds", plan.seeds},
      {"lr_plateau", plan.lr_plateau},
      {"window_stride", plan.window_stride},
  };
  if (plan.mode == Mode::kFinetune) j["probe_epochs"] = plan.probe_epochs;
  if (plan.lr_plateau) {
    j["plateau_factor"] = plan.plateau_factor;
    j["plateau_patience"] = plan.plateau_patience;
  }
  return j;
}

json seed_json(const SeedResult& s) {
  json curve = json::array();
  for (const auto& e : s.curve) {
    json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"lr", e.lr}};
    if (e.val_loss) row["val_loss"] = *e.val_loss;
    if (e.backbone_frozen) row["backbone_frozen"] = true;
    curve.push_back(row);
  }
  return json{
      {"seed", s.seed},
      {"epochs_run", s.curve.size()},
      {"best_epoch", s.best_epoch},
      {"best_val_loss", s.best_val_loss},
      {"stopped_early", s.stopped_early},
      {"test_mse", s.test.mse},
      {"test_mae", s.test.mae},
      {"test_windows", s.test.windows},
      {"curve", curve},
  };
}

json cost_json(const profile::CostReport& cost) {
  json modules = json::array();
  for (const auto& m : cost.params.breakdown) modules.push_back({{"module", m.module}, {"params", m.params}});
  json j{
      {"nparams", cost.params.total},
      {"nparams_by_module", modules},
      {"macs_per_epoch", cost.macs.per_epoch},
      {"macs_per_window", cost.macs.per_window},
      {"macs_breakdown",
       {{"embed", cost.macs.embed},
        {"mixer", cost.macs.mixer},
        {"head", cost.macs.head},
        {"reconciliation", cost.macs.reconciliation}}},
      {"measured_macs_per_window", cost.measured_macs_per_window},
      {"mac_convention", std::string(profile::kMacConvention)},
  };
  if (cost.epoch) {
    j["epoch_time_sec"] = cost.epoch->epoch_time_sec;
    j["epoch_time_samples"] = cost.epoch->samples;
    j["peak_bytes"] = cost.epoch->peak_bytes;
  }
  return j;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("report '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

Aggregate aggregate(std::span<const SeedResult> seeds) {
  Aggregate a;
  a.seeds = seeds.size();
  if (seeds.empty()) return a;
  const double n = static_cast<double>(seeds.size());
  for (const auto& s : seeds) {
    a.mse_mean += s.test.mse / n;
    a.mae_mean += s.test.mae / n;
  }
  for (const auto& s : seeds) {
    a.mse_std += (s.test.mse - a.mse_mean) * (s.test.mse - a.mse_mean) / n;
    a.mae_std += (s.test.mae - a.mae_mean) * (s.test.mae - a.mae_mean) / n;
  }
  a.mse_std = std::sqrt(a.mse_std);
  a.mae_std = std::sqrt(a.mae_std);
  return a;
}

std::string to_json(const profile::CostReport& cost) { return cost_json(cost).dump(2); }

std::string to_json(const RunReport& report) {
  json seeds = json::array();
  for (const auto& s : report.seeds) seeds.push_back(seed_json(s));
  json j{
      {"schema_version", kReportSchemaVersion},
      {"command", report.command},
      {"dataset", report.dataset},
      {"variant", model::to_string(report.config.variant)},
      {"config", model::config_to_json(report.config)},
      {"plan", plan_json(report.plan)},
      {"head_order", "base,hier,cc,revin_inverse"},
      {"loss", report.loss_tag},
      {"selection_metric", report.selection_metric},
      {"metric_scale", "standardized"},
      {"seeds", seeds},
      {"aggregate",
       {{"seeds", report.summary.seeds},
        {"test_mse_mean", report.summary.mse_mean},
        {"test_mse_std", report.summary.mse_std},
        {"test_mae_mean", report.summary.mae_mean},
        {"test_mae_std", report.summary.mae_std}}},
  };
  if (report.split) {
    const auto& s = *report.split;
    j["split"] = {{"profile", std::string(data::to_string(s.profile))},
                  {"context", s.context},
                  {"train", {s.train_begin, s.train_end}},
                  {"val", {s.val_begin, s.val_end}},
                  {"test", {s.test_begin, s.test_end}}};
  }
  if (report.scaler) j["scaler"] = {{"mean", report.scaler->mean()}, {"std", report.scaler->stdev()}};
  if (report.cost) j["cost"] = cost_json(*report.cost);
  return j.dump(2);
}

void write_report(const std::filesystem::path& path, const RunReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write report '" + path.string() + "'");
  out << to_json(report) << '\n';
}

std::string best_of(std::span<const std::filesystem::path> reports) {
  if (reports.size() < 2) throw ConfigError("--best-of needs at least two report files");
  std::map<std::pair<std::string, std::size_t>, json> best;
  for (const auto& path : reports) {
    const json r = read_json(path);
    try {
      if (r.at("schema_version").get<int>() != kReportSchemaVersion) {
        throw DataError("report '" + path.string() + "' has an unsupported schema version");
      }
      const std::string dataset = r.at("dataset").get<std::string>();
      const std::size_t fl = r.at("config").at("fl").get<std::size_t>();
      const json& agg = r.at("aggregate");
      json entry{{"dataset", dataset},
                 {"fl", fl},
                 {"variant", r.at("variant")},
                 {"test_mse_mean", agg.at("test_mse_mean")},
                 {"test_mae_mean", agg.at("test_mae_mean")},
                 {"source", path.string()}};
      auto key = std::make_pair(dataset, fl);
      auto it = best.find(key);
      if (it == best.end() || entry["test_mse_mean"].get<double>() < it->second["test_mse_mean"].get<double>()) {
        best[key] = entry;
      }
    } catch (const json::exception& e) {
      throw DataError("report '" + path.string() + "' is missing fields: " + e.what());
    }
  }
  json out = json::array();
  for (auto& [key, entry] : best) out.push_back(entry);
  return json{{"schema_version", kReportSchemaVersion}, {"best_of", out}}.dump(2);
}

}  // namespace tsmixer::train
