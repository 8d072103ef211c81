// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/train/embeddings.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tsmixer/data/patching.h"
#include "tsmixer/data/revin.h"
#include "tsmixer/error.h"
#include "tsmixer/log.h"
#include "tsmixer/nn/tape.h"

namespace tsmixer::train {

EmbeddingExport export_embeddings(const model::Backbone& backbone, const data::WindowSet& windows, std::size_t stride,
                                  const EmbeddingOptions& options) {
  if (windows.empty()) throw DataError("no windows to embed");
  const model::BackboneConfig& config = backbone.config();
  const std::size_t pl = config.patch_len;
  const std::size_t used = options.max_windows == 0 ? windows.size() : std::min(windows.size(), options.max_windows);
  std::vector<std::size_t> ids(used);
  std::iota(ids.begin(), ids.end(), std::size_t{0});

  EmbeddingExport out;
  nn::NoGradGuard guard;
  for (const auto& group : data::group_batches(ids, 32)) {
    const data::WindowBatch batch = windows.gather(group);
    auto [normalized, stats] = data::revin_normalize(batch.inputs);
    const data::PatchBatch patches = data::patch(normalized, pl, stride);
    const nn::Tensor features = backbone.forward(patches.patches, nn::ForwardContext{});  // b x c' x n x hf
    const std::size_t c = patches.channels();
    const std::size_t n = patches.count();
    const std::size_t rows = features.dim(1);
    const std::size_t hf = features.dim(3);
    const auto x = batch.inputs.data();
    const auto f = features.data();
    const std::size_t sl = batch.inputs.dim(1);
    for (std::size_t b = 0; b < group.size(); ++b) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
          PatchRecord rec;
          rec.window = group[b];
          rec.row = r;
          rec.patch = i;
          const std::size_t first = rows == 1 ? 0 : r;
          const std::size_t last = rows == 1 ? c : r + 1;
          for (std::size_t ch = first; ch < last; ++ch) {
            for (std::size_t j = 0; j < pl; ++j) rec.values.push_back(x[(b * sl + i * stride + j) * c + ch]);
          }
          const std::size_t base = ((b * rows + r) * n + i) * hf;
          rec.embedding.assign(f.begin() + static_cast<std::ptrdiff_t>(base),
                               f.begin() + static_cast<std::ptrdiff_t>(base + hf));
          out.corpus.push_back(std::move(rec));
        }
      }
    }
  }

  const std::size_t total = out.corpus.size();
  const std::size_t anchors = std::min(options.anchors, total);
  std::size_t k = options.k;
  if (k > total - 1) {
    warn("requested " + std::to_string(k) + " neighbours but the corpus has only " + std::to_string(total - 1) +
         " other patches; clipping");
    k = total - 1;
  }
  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(anchors);

  for (std::size_t a : pool) {
    AnchorNeighbors entry;
    entry.anchor = a;
    std::vector<Neighbor> all;
    all.reserve(total - 1);
    const auto& ea = out.corpus[a].embedding;
    for (std::size_t j = 0; j < total; ++j) {
      if (j == a) continue;
      const auto& ej = out.corpus[j].embedding;
      double d2 = 0.0;
      for (std::size_t t = 0; t < ea.size(); ++t) d2 += (ea[t] - ej[t]) * (ea[t] - ej[t]);
      all.push_back({j, std::sqrt(d2)});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const Neighbor& l, const Neighbor& r) {
                        return l.distance != r.distance ? l.distance < r.distance : l.index < r.index;
                      });
    all.resize(k);
    entry.neighbors = std::move(all);
    out.anchors.push_back(std::move(entry));
  }
  return out;
}

void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingExport& result) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const std::size_t width = result.corpus.empty() ? 0 : result.corpus.front().values.size();
  out << "anchor_id,neighbor_rank,distance";
  for (std::size_t j = 0; j < width; ++j) out << ",v" << j;
  out << '\n';
  out.precision(10);
  auto row = [&](std::size_t anchor_id, std::size_t rank, double distance, const PatchRecord& rec) {
    out << anchor_id << ',' << rank << ',' << distance;
    for (double v : rec.values) out << ',' << v;
    out << '\n';
  };
  for (std::size_t a = 0; a < result.anchors.size(); ++a) {
    const auto& entry = result.anchors[a];
    row(a, 0, 0.0, result.corpus[entry.anchor]);
    for (std::size_t r = 0; r < entry.neighbors.size(); ++r) {
      row(a, r + 1, entry.neighbors[r].distance, result.corpus[entry.neighbors[r].index]);
    }
  }
}

}  // namespace tsmixer::train
