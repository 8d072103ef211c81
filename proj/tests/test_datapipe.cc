// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.h"
#include "tsmixer/data/patching.h"
#include "tsmixer/data/revin.h"
#include "tsmixer/data/series.h"
#include "tsmixer/data/synthetic.h"
#include "tsmixer/data/windows.h"
#include "tsmixer/error.h"
#include "tsmixer/log.h"

using namespace tsmixer;
using tsmixer::testing::bitwise_equal;
using tsmixer::testing::random_tensor;

namespace {

std::filesystem::path write_series_csv(const std::string& name, std::size_t rows, std::size_t channels) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << "date";
  for (std::size_t c = 0; c < channels; ++c) out << ",ch" << c;
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out << "2016-07-01 " << r;
    for (std::size_t c = 0; c < channels; ++c) out << ',' << std::sin(0.01 * static_cast<double>(r * (c + 1)));
    out << '\n';
  }
  return path;
}

data::SeriesFrame frame_of(std::vector<double> column) {
  data::SeriesFrame f;
  f.rows = column.size();
  f.channels = 1;
  f.values = std::move(column);
  f.channel_names = {"x"};
  return f;
}

}  // namespace

TEST_CASE("load_csv reads an hourly-benchmark sized file") {
  const auto path = write_series_csv("tsmixer_etth1_like.csv", 17420, 7);
  const data::SeriesFrame f = data::load_csv(path, true);
  CHECK(f.rows == 17420);
  CHECK(f.channels == 7);
  CHECK(f.channel_names.front() == "ch0");
  CHECK(f.timestamps.size() == 17420);
  CHECK(f.at(100, 2) == doctest::Approx(std::sin(0.01 * 300)));
  std::filesystem::remove(path);
}

TEST_CASE("load_csv reads a weather sized file") {
  const auto path = write_series_csv("tsmixer_weather_like.csv", 52696, 21);
  const data::SeriesFrame f = data::load_csv(path, true);
  CHECK(f.rows == 52696);
  CHECK(f.channels == 21);
  std::filesystem::remove(path);
}

TEST_CASE("parse_csv with a date column and one channel") {
  std::istringstream in("date,value\n2020-01-01,1.5\n2020-01-02,2.5\n2020-01-03,3.5\n");
  const data::SeriesFrame f = data::parse_csv(in, true);
  CHECK(f.rows == 3);
  CHECK(f.channels == 1);
  CHECK(f.at(2, 0) == 3.5);

  std::istringstream no_date("a,b\n1,2\n3,4\n");
  const data::SeriesFrame g = data::parse_csv(no_date, false);
  CHECK(g.channels == 2);
  CHECK(g.timestamps.empty());
}

TEST_CASE("parse_csv rejects bad cells with their location") {
  std::istringstream nan_cell("date,a,b\nd1,1,2\nd2,nan,4\n");
  try {
    (void)data::parse_csv(nan_cell, true);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
  std::istringstream missing("date,a,b\nd1,1,2\nd2,,4\n");
  CHECK_THROWS_AS(data::parse_csv(missing, true), DataError);
  std::istringstream short_row("date,a,b\nd1,1,2\nd2,3\n");
  CHECK_THROWS_AS(data::parse_csv(short_row, true), DataError);
  std::istringstream one_row("date,a\nd1,1\n");
  CHECK_THROWS_AS(data::parse_csv(one_row, true), DataError);
  CHECK_THROWS_AS(data::load_csv("/nonexistent/file.csv", true), DataError);
}

TEST_CASE("ratio split with context prefixes") {
  const data::SplitSpec s = data::plan_split(100, data::SplitProfile::kRatio, 10, 5);
  CHECK(s.train_begin == 0);
  CHECK(s.train_end == 70);
  CHECK(s.val_begin == 60);
  CHECK(s.val_end == 80);
  CHECK(s.test_begin == 70);
  CHECK(s.test_end == 100);
}

TEST_CASE("ETT hourly split uses 12/4/4 months of 30 days") {
  const data::SplitSpec s = data::plan_split(17420, data::SplitProfile::kEttHourly, 512, 96);
  CHECK(s.train_end == 12 * 30 * 24);
  CHECK(s.train_end == 8640);
  CHECK(s.val_end == 8640 + 2880);
  CHECK(s.test_end == 8640 + 2 * 2880);
  CHECK(s.val_begin == 8640 - 512);
  const data::SplitSpec m = data::plan_split(69680, data::SplitProfile::kEttMinutely, 512, 96);
  CHECK(m.train_end == 4 * 8640);
  CHECK_THROWS_AS(data::plan_split(10000, data::SplitProfile::kEttHourly, 512, 96), DataError);
}

TEST_CASE("chrono_split keeps chronological order and rejects short segments") {
  std::vector<double> col(100);
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = static_cast<double>(i);
  const data::SplitFrames parts = data::chrono_split(frame_of(col), data::SplitProfile::kRatio, 10, 5);
  CHECK(parts.train.rows == 70);
  CHECK(parts.val.at(0, 0) == 60.0);
  CHECK(parts.test.at(0, 0) == 70.0);
  CHECK(parts.test.at(parts.test.rows - 1, 0) == 99.0);
  CHECK_THROWS_AS(data::chrono_split(frame_of(col), data::SplitProfile::kRatio, 10, 15), DataError);
}

TEST_CASE("split profile names round trip") {
  for (auto p : {data::SplitProfile::kEttHourly, data::SplitProfile::kEttMinutely, data::SplitProfile::kRatio}) {
    CHECK(data::parse_split_profile(data::to_string(p)) == p);
  }
  CHECK_THROWS_AS(data::parse_split_profile("weekly"), ConfigError);
}

TEST_CASE("standard scaler on [2, 4, 6]") {
  const data::StandardScaler s = data::StandardScaler::fit(frame_of({2, 4, 6}));
  CHECK(s.mean()[0] == doctest::Approx(4.0));
  CHECK(s.stdev()[0] == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(s.stdev()[0] == doctest::Approx(1.633).epsilon(1e-3));
  const data::SeriesFrame z = s.apply(frame_of({2, 4, 6}));
  CHECK(z.at(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z.at(1, 0) == doctest::Approx(0.0));
  CHECK(z.at(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("standard scaler guards constant channels") {
  const data::StandardScaler s = data::StandardScaler::fit(frame_of({5, 5, 5}));
  const data::SeriesFrame z = s.apply(frame_of({5, 5, 5}));
  for (double v : z.values) CHECK(v == 0.0);
}

TEST_CASE("scaler apply is not idempotent but inverse round trips") {
  const data::SeriesFrame raw = frame_of({1.0, 7.0, -3.0, 2.5});
  const data::StandardScaler s = data::StandardScaler::fit(raw);
  const data::SeriesFrame once = s.apply(raw);
  const data::SeriesFrame twice = s.apply(once);
  bool differs = false;
  for (std::size_t i = 0; i < raw.rows; ++i) differs = differs || std::abs(once.values[i] - twice.values[i]) > 1e-6;
  CHECK(differs);
  const data::SeriesFrame back = s.inverse(once);
  for (std::size_t i = 0; i < raw.rows; ++i) CHECK(std::abs(back.values[i] - raw.values[i]) <= 1e-10);
  CHECK(s.inverse_value(0, once.values[1]) == doctest::Approx(7.0));
}

TEST_CASE("scaled training segment is standardized") {
  std::vector<data::SineChannel> sines{{.period = 12.0, .amplitude = 3.0, .offset = 5.0}, {.period = 30.0}};
  const data::SeriesFrame f = data::sinusoid_frame(500, sines, 0.1, 3);
  const data::SeriesFrame z = data::StandardScaler::fit(f).apply(f);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t r = 0; r < z.rows; ++r) mean += z.at(r, c) / static_cast<double>(z.rows);
    for (std::size_t r = 0; r < z.rows; ++r) var += (z.at(r, c) - mean) * (z.at(r, c) - mean) / static_cast<double>(z.rows);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
}

TEST_CASE("window counts") {
  CHECK(data::window_count(10, 5, 2) == 4);
  CHECK(data::window_count(7, 5, 2) == 1);
  CHECK(data::window_count(6, 5, 2) == 0);
  CHECK(data::window_count(10, 5, 2, 2) == 2);
}

TEST_CASE("windows are contiguous input-target pairs") {
  std::vector<double> col(10);
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = static_cast<double>(i);
  const data::WindowSet set = data::make_windows(frame_of(col), 5, 2);
  REQUIRE(set.size() == 4);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const data::WindowBatch batch = set.gather(all);
  CHECK(batch.inputs.shape() == nn::Shape{4, 5, 1});
  CHECK(batch.targets.shape() == nn::Shape{4, 2, 1});
  for (std::size_t w = 0; w < 4; ++w) {
    for (std::size_t t = 0; t < 5; ++t) CHECK(batch.inputs.at({w, t, 0}) == static_cast<double>(w + t));
    for (std::size_t t = 0; t < 2; ++t) CHECK(batch.targets.at({w, t, 0}) == static_cast<double>(w + 5 + t));
  }
}

TEST_CASE("a segment of exactly sl + fl rows yields one window") {
  const data::WindowSet set = data::make_windows(frame_of({1, 2, 3, 4, 5, 6, 7}), 5, 2);
  CHECK(set.size() == 1);
}

TEST_CASE("short segments give an empty stream and a warning") {
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const data::WindowSet set = data::make_windows(frame_of({1, 2, 3}), 5, 2);
  set_warning_sink(nullptr);
  CHECK(set.empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("batch grouping keeps the partial last batch") {
  const auto groups = data::group_batches(20, 8);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].size() == 8);
  CHECK(groups[1].size() == 8);
  CHECK(groups[2].size() == 4);
  CHECK(groups[2].back() == 19);
}

TEST_CASE("revin on [1, 2, 3]") {
  const nn::Tensor x = nn::Tensor::from({1, 3, 1}, {1, 2, 3});
  auto [z, stats] = data::revin_normalize(x);
  const double sd = std::sqrt(2.0 / 3.0);
  CHECK(stats.mean.item() == doctest::Approx(2.0));
  CHECK(stats.stdev.item() == doctest::Approx(0.8165).epsilon(1e-4));
  CHECK(z.data()[0] == doctest::Approx(-1.0 / (sd + data::kRevinEps)).epsilon(1e-12));
  CHECK(z.data()[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z.data()[1] == doctest::Approx(0.0));
}

TEST_CASE("revin round trip and constant windows") {
  const nn::Tensor x = random_tensor({4, 16, 3}, 9, -5, 5);
  auto [z, stats] = data::revin_normalize(x);
  const nn::Tensor back = data::revin_denormalize(z, stats);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    CHECK(std::abs(back.data()[i] - x.data()[i]) <= 1e-6 * std::max(1.0, std::abs(x.data()[i])));
  }
  const nn::Tensor flat(nn::Shape{1, 8, 1}, 3.25);
  auto [zf, sf] = data::revin_normalize(flat);
  for (double v : zf.data()) CHECK(v == 0.0);
  const nn::Tensor restored = data::revin_denormalize(zf, sf);
  for (double v : restored.data()) CHECK(v == 3.25);
}

TEST_CASE("revin statistics are per window and per channel") {
  const nn::Tensor x = random_tensor({3, 10, 2}, 17);
  auto [z, stats] = data::revin_normalize(x);
  CHECK(stats.mean.shape() == nn::Shape{3, 1, 2});
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t c = 0; c < 2; ++c) {
      double mean = 0.0;
      for (std::size_t t = 0; t < 10; ++t) mean += x.at({b, t, c}) / 10.0;
      CHECK(stats.mean.at({b, 0, c}) == doctest::Approx(mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("patch counts from the benchmark configurations") {
  CHECK(data::patch_count(512, 16, 8) == 63);
  CHECK(data::patch_count(512, 8, 8) == 64);
  CHECK(data::patch_count(8, 8, 8) == 1);
  CHECK(data::patch_count(20, 8, 5) == 3);
  CHECK_THROWS_AS(data::patch_count(8, 16, 8), ConfigError);
}

TEST_CASE("patch gathers the expected values") {
  const nn::Tensor x = random_tensor({2, 20, 3}, 23);
  const data::PatchBatch p = data::patch(x, 8, 5);
  CHECK(p.patches.shape() == nn::Shape{2, 3, 3, 8});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 8; ++j) CHECK(p.patches.at({b, c, i, j}) == x.at({b, i * 5 + j, c}));
  CHECK(p.masked_total() == 0);
}

TEST_CASE("a single patch equals the window") {
  const nn::Tensor x = random_tensor({1, 8, 1}, 29);
  const data::PatchBatch p = data::patch(x, 8, 8);
  CHECK(p.count() == 1);
  for (std::size_t j = 0; j < 8; ++j) CHECK(p.patches.at({0, 0, 0, j}) == x.at({0, j, 0}));
}

TEST_CASE("mask_patches masks floor(ratio * n) per channel and zeroes them") {
  const nn::Tensor x = random_tensor({2, 80, 3}, 31, 0.5, 1.5);
  const data::PatchBatch p = data::patch(x, 8, 8);
  const data::PatchBatch m = data::mask_patches(p, 0.4, 5);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t masked = 0;
      for (std::size_t i = 0; i < 10; ++i) {
        const bool on = m.mask[(b * 3 + c) * 10 + i] != 0;
        masked += on ? 1 : 0;
        for (std::size_t j = 0; j < 8; ++j) {
          CHECK(m.patches.at({b, c, i, j}) == (on ? 0.0 : p.patches.at({b, c, i, j})));
        }
      }
      CHECK(masked == 4);
    }
  }
  CHECK(m.masked_total() == 2 * 3 * 4);
}

TEST_CASE("mask ratio 0 leaves the batch untouched") {
  const data::PatchBatch p = data::patch(random_tensor({1, 64, 2}, 37), 8, 8);
  const data::PatchBatch m = data::mask_patches(p, 0.0, 1);
  CHECK(m.masked_total() == 0);
  CHECK(bitwise_equal(m.patches, p.patches));
}

TEST_CASE("masks are reproducible per seed") {
  const data::PatchBatch p = data::patch(random_tensor({1, 512, 1}, 41), 8, 8);
  const data::PatchBatch a = data::mask_patches(p, 0.4, 7);
  const data::PatchBatch b = data::mask_patches(p, 0.4, 7);
  const data::PatchBatch c = data::mask_patches(p, 0.4, 8);
  CHECK(a.mask == b.mask);
  CHECK(a.mask != c.mask);
  CHECK(a.masked_total() == 25);
}

TEST_CASE("masking rejects overlapping patches and bad ratios") {
  const data::PatchBatch overlapping = data::patch(random_tensor({1, 32, 1}, 43), 8, 4);
  CHECK_THROWS_AS(data::mask_patches(overlapping, 0.4, 1), ConfigError);
  const data::PatchBatch p = data::patch(random_tensor({1, 32, 1}, 43), 8, 8);
  CHECK_THROWS_AS(data::mask_patches(p, 1.0, 1), ConfigError);
}
