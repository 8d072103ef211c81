// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/app/run_config.h"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tsmixer/error.h"

namespace tsmixer::app {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"path", "date_column", "split", "name", "window_stride"}},
      {"model",
       {"variant", "sl", "pl", "stride", "fl", "nl", "fs", "hf", "ef", "dropout", "context_length", "mask_ratio"}},
      {"train",
       {"epochs", "probe_epochs", "patience", "lr", "batch_size", "seeds", "lr_plateau", "plateau_factor",
        "plateau_patience", "parallel_seeds"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void check_key(const std::string& section, const std::string& key) {
  const auto& keys = known_keys();
  const auto it = keys.find(section);
  if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
  if (!it->second.contains(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = parse_number<std::uint64_t>("train.seeds", trim(part.substr(0, dash)));
      const auto hi = parse_number<std::uint64_t>("train.seeds", trim(part.substr(dash + 1)));
      if (hi < lo) throw ConfigError("seed range '" + part + "' is descending");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_number<std::uint64_t>("train.seeds", part));
    }
  }
  if (seeds.empty()) throw ConfigError("'train.seeds' is empty");
  return seeds;
}

void assign(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  check_key(section, key);
  const std::string full = section + "." + key;
  auto size = [&] { return parse_number<std::size_t>(full, value); };
  auto real = [&] { return parse_number<double>(full, value); };
  if (section == "data") {
    if (key == "path") cfg.dataset = value;
    else if (key == "date_column") cfg.date_column = parse_bool(full, value);
    else if (key == "split") cfg.split = data::parse_split_profile(value);
    else if (key == "name") cfg.dataset_name = value;
    else if (key == "window_stride") cfg.plan.window_stride = size();
  } else if (section == "model") {
    auto& m = cfg.model;
    if (key == "variant") m.variant = model::parse_variant(value);
    else if (key == "sl") m.sl = size();
    else if (key == "pl") m.pl = size();
    else if (key == "stride") m.stride = size();
    else if (key == "fl") m.fl = size();
    else if (key == "nl") m.nl = size();
    else if (key == "fs") m.fs = size();
    else if (key == "hf") m.hf = size();
    else if (key == "ef") m.ef = size();
    else if (key == "dropout") m.dropout = real();
    else if (key == "context_length") m.context_length = size();
    else if (key == "mask_ratio") m.mask_ratio = real();
  } else if (section == "train") {
    auto& p = cfg.plan;
    if (key == "epochs") p.epochs = size();
    else if (key == "probe_epochs") p.probe_epochs = size();
    else if (key == "patience") p.patience = size();
    else if (key == "lr") p.lr = real();
    else if (key == "batch_size") p.batch_size = size();
    else if (key == "seeds") p.seeds = parse_seeds(value);
    else if (key == "lr_plateau") p.lr_plateau = parse_bool(full, value);
    else if (key == "plateau_factor") p.plateau_factor = real();
    else if (key == "plateau_patience") p.plateau_patience = size();
    else if (key == "parallel_seeds") p.parallel_seeds = parse_bool(full, value);
  } else if (section == "output") {
    cfg.output_dir = value;
  }
}

}  // namespace

RunConfig parse_run_config(std::istream& in, std::span<const std::string> overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' is outside a section");
    for (const auto& [key, value] : body) assign(cfg, section, key, trim(value.data()));
  }
  for (const auto& entry : overrides) {
    const auto eq = entry.find('=');
    const auto dot = entry.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ConfigError("override '" + entry + "' must look like section.key=value");
    }
    assign(cfg, trim(entry.substr(0, dot)), trim(entry.substr(dot + 1, eq - dot - 1)), trim(entry.substr(eq + 1)));
  }
  if (cfg.dataset_name.empty() && !cfg.dataset.empty()) cfg.dataset_name = cfg.dataset.stem().string();
  model::validate(cfg.model);
  cfg.plan.validate();
  return cfg;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides) {
  if (!path) {
    std::istringstream empty;
    return parse_run_config(empty, overrides);
  }
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot open config file '" + path->string() + "'");
  return parse_run_config(in, overrides);
}

}  // namespace tsmixer::app
