// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/data/series.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsmixer/error.h"

namespace tsmixer::data {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    fields.push_back(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::size_t rows_per_month(SplitProfile profile) {
  return profile == SplitProfile::kEttMinutely ? 30 * 24 * 4 : 30 * 24;
}

}  // namespace

SeriesFrame SeriesFrame::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows) throw DataError("row range out of bounds");
  SeriesFrame out;
  out.rows = end - begin;
  out.channels = channels;
  out.channel_names = channel_names;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * channels),
                    values.begin() + static_cast<std::ptrdiff_t>(end * channels));
  if (!timestamps.empty()) {
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

SeriesFrame load_csv(const std::filesystem::path& path, bool has_date_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_csv(in, has_date_column, path.string());
}

SeriesFrame parse_csv(std::istream& in, bool has_date_column, std::string_view source) {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) throw DataError(where + ": empty file");
  const auto header = split_fields(line);
  const std::size_t skip = has_date_column ? 1 : 0;
  if (header.size() <= skip) throw DataError(where + ": header has no channel columns");

  SeriesFrame frame;
  frame.channels = header.size() - skip;
  for (std::size_t i = skip; i < header.size(); ++i) frame.channel_names.emplace_back(trim(header[i]));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(where + ": row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " columns, expected " + std::to_string(header.size()));
    }
    if (has_date_column) frame.timestamps.emplace_back(trim(fields[0]));
    for (std::size_t i = skip; i < fields.size(); ++i) {
      const std::string_view cell = trim(fields[i]);
      double value = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(value)) {
        throw DataError(where + ": row " + std::to_string(line_no) + ", column " + std::to_string(i + 1) + " ('" +
                        frame.channel_names[i - skip] + "') is missing or not a finite number");
      }
      frame.values.push_back(value);
    }
    ++frame.rows;
  }
  if (frame.rows < 2) throw DataError(where + ": need at least 2 data rows, got " + std::to_string(frame.rows));
  return frame;
}

SplitProfile parse_split_profile(std::string_view name) {
  if (name == "ett_hourly" || name == "ett_months") return SplitProfile::kEttHourly;
  if (name == "ett_minutely") return SplitProfile::kEttMinutely;
  if (name == "ratio" || name == "ratio_70_10_20") return SplitProfile::kRatio;
  throw ConfigError("unknown split profile '" + std::string(name) + "' (expected ett_hourly, ett_minutely, ratio)");
}

std::string_view to_string(SplitProfile profile) {
  switch (profile) {
    case SplitProfile::kEttHourly:
      return "ett_hourly";
    case SplitProfile::kEttMinutely:
      return "ett_minutely";
    case SplitProfile::kRatio:
      return "ratio";
  }
  return "ratio";
}

SplitSpec plan_split(std::size_t rows, SplitProfile profile, std::size_t sl, std::size_t fl) {
  SplitSpec spec;
  spec.profile = profile;
  spec.context = sl;
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
  std::size_t test_rows = 0;
  if (profile == SplitProfile::kRatio) {
    train_rows = static_cast<std::size_t>(static_cast<double>(rows) * 0.7);
    test_rows = static_cast<std::size_t>(static_cast<double>(rows) * 0.2);
    val_rows = rows - train_rows - test_rows;
  } else {
    const std::size_t month = rows_per_month(profile);
    train_rows = 12 * month;
    val_rows = 4 * month;
    test_rows = 4 * month;
    if (train_rows + val_rows + test_rows > rows) {
      throw DataError("ETT split needs " + std::to_string(train_rows + val_rows + test_rows) + " rows, frame has " +
                      std::to_string(rows));
    }
  }
  if (train_rows < sl) throw DataError("training segment shorter than the input length");
  spec.train_begin = 0;
  spec.train_end = train_rows;
  spec.val_begin = train_rows - sl;
  spec.val_end = train_rows + val_rows;
  spec.test_begin = train_rows + val_rows - sl;
  spec.test_end = train_rows + val_rows + test_rows;

  const std::size_t need = sl + fl;
  auto check = [&](const char* name, std::size_t begin, std::size_t end) {
    if (end - begin < need) {
      throw DataError(std::string(name) + " segment has " + std::to_string(end - begin) + " rows, need sl+fl = " +
                      std::to_string(need));
    }
  };
  check("train", spec.train_begin, spec.train_end);
  check("validation", spec.val_begin, spec.val_end);
  check("test", spec.test_begin, spec.test_end);
  return spec;
}

SplitFrames chrono_split(const SeriesFrame& frame, SplitProfile profile, std::size_t sl, std::size_t fl) {
  SplitFrames out;
  out.spec = plan_split(frame.rows, profile, sl, fl);
  out.train = frame.slice_rows(out.spec.train_begin, out.spec.train_end);
  out.val = frame.slice_rows(out.spec.val_begin, out.spec.val_end);
  out.test = frame.slice_rows(out.spec.test_begin, out.spec.test_end);
  return out;
}

StandardScaler::StandardScaler(std::vector<double> mean, std::vector<double> stdev)
    : mean_(std::move(mean)), stdev_(std::move(stdev)) {
  if (mean_.size() != stdev_.size()) throw DataError("scaler mean/stdev length mismatch");
}

StandardScaler StandardScaler::fit(const SeriesFrame& train) {
  if (train.rows == 0) throw DataError("cannot fit a scaler on an empty segment");
  std::vector<double> mean(train.channels, 0.0);
  std::vector<double> stdev(train.channels, 0.0);
  for (std::size_t ch = 0; ch < train.channels; ++ch) {
    double total = 0.0;
    for (std::size_t t = 0; t < train.rows; ++t) total += train.at(t, ch);
    mean[ch] = total / static_cast<double>(train.rows);
    double sq = 0.0;
    for (std::size_t t = 0; t < train.rows; ++t) sq += (train.at(t, ch) - mean[ch]) * (train.at(t, ch) - mean[ch]);
    stdev[ch] = std::sqrt(sq / static_cast<double>(train.rows));
  }
  return StandardScaler(std::move(mean), std::move(stdev));
}

double StandardScaler::divisor(std::size_t channel) const {
  return stdev_[channel] > kEps ? stdev_[channel] : kEps;
}

SeriesFrame StandardScaler::apply(const SeriesFrame& frame) const {
  if (frame.channels != mean_.size()) throw DataError("scaler channel count does not match frame");
  SeriesFrame out = frame;
  for (std::size_t t = 0; t < frame.rows; ++t) {
    for (std::size_t ch = 0; ch < frame.channels; ++ch) out.at(t, ch) = (frame.at(t, ch) - mean_[ch]) / divisor(ch);
  }
  return out;
}

SeriesFrame StandardScaler::inverse(const SeriesFrame& frame) const {
  if (frame.channels != mean_.size()) throw DataError("scaler channel count does not match frame");
  SeriesFrame out = frame;
  for (std::size_t t = 0; t < frame.rows; ++t) {
    for (std::size_t ch = 0; ch < frame.channels; ++ch) out.at(t, ch) = inverse_value(ch, frame.at(t, ch));
  }
  return out;
}

double StandardScaler::inverse_value(std::size_t channel, double value) const {
  return value * divisor(channel) + mean_[channel];
}

}  // namespace tsmixer::data
