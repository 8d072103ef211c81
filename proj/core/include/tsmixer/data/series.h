// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace tsmixer::data {

// A multivariate series: `rows` timesteps by `channels` channels, row-major.
struct SeriesFrame {
  std::size_t rows = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  std::vector<std::string> channel_names;
  std::vector<std::string> timestamps;  // empty when the source had no date column

  double at(std::size_t row, std::size_t channel) const { return values[row * channels + channel]; }
  double& at(std::size_t row, std::size_t channel) { return values[row * channels + channel]; }
  // Rows [begin, end) as a new frame.
  SeriesFrame slice_rows(std::size_t begin, std::size_t end) const;
};

// Reads the standard long-horizon forecasting CSV layout: a header row, an
// optional leading date column, then one numeric column per channel.
SeriesFrame load_csv(const std::filesystem::path& path, bool has_date_column);
SeriesFrame parse_csv(std::istream& in, bool has_date_column, std::string_view source = "<stream>");

enum class SplitProfile {
  kEttHourly,    // 12/4/4 months at one row per hour
  kEttMinutely,  // 12/4/4 months at four rows per hour
  kRatio,        // 70% / 10% / 20%
};

SplitProfile parse_split_profile(std::string_view name);
std::string_view to_string(SplitProfile profile);

// Row ranges of the three chronological segments. Validation and test
// begin `context` rows before their own first target row so that their
// first window has a full input history.
struct SplitSpec {
  SplitProfile profile = SplitProfile::kRatio;
  std::size_t context = 0;
  std::size_t train_begin = 0, train_end = 0;
  std::size_t val_begin = 0, val_end = 0;
  std::size_t test_begin = 0, test_end = 0;
};

struct SplitFrames {
  SeriesFrame train;
  SeriesFrame val;
  SeriesFrame test;
  SplitSpec spec;
};

SplitSpec plan_split(std::size_t rows, SplitProfile profile, std::size_t sl, std::size_t fl);
// Throws DataError when any segment is shorter than sl + fl.
SplitFrames chrono_split(const SeriesFrame& frame, SplitProfile profile, std::size_t sl, std::size_t fl);

// Per-channel z-score with population statistics, fit on training rows only.
class StandardScaler {
 public:
  static constexpr double kEps = 1e-8;

  static StandardScaler fit(const SeriesFrame& train);
  StandardScaler() = default;
  StandardScaler(std::vector<double> mean, std::vector<double> stdev);

  SeriesFrame apply(const SeriesFrame& frame) const;
  SeriesFrame inverse(const SeriesFrame& frame) const;
  double inverse_value(std::size_t channel, double value) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stdev() const { return stdev_; }

 private:
  double divisor(std::size_t channel) const;

  std::vector<double> mean_;
  std::vector<double> stdev_;
};

}  // namespace tsmixer::data
