// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tsmixer/data/windows.h"
#include "tsmixer/model/backbone.h"

namespace tsmixer::train {

// One patch of the corpus: which window, mixer row and patch it came from,
// its input values and its backbone embedding.
struct PatchRecord {
  std::size_t window = 0;
  std::size_t row = 0;  // channel, or 0 for the vanilla backbone
  std::size_t patch = 0;
  std::vector<double> values;     // pl values (c * pl for the vanilla backbone)
  std::vector<double> embedding;  // hf values
};

struct Neighbor {
  std::size_t index = 0;  // into EmbeddingExport::corpus
  double distance = 0.0;
};

struct AnchorNeighbors {
  std::size_t anchor = 0;  // into EmbeddingExport::corpus
  std::vector<Neighbor> neighbors;  // nearest first, anchor itself excluded
};

struct EmbeddingExport {
  std::vector<PatchRecord> corpus;
  std::vector<AnchorNeighbors> anchors;
};

struct EmbeddingOptions {
  std::size_t anchors = 5;
  std::size_t k = 50;
  std::size_t max_windows = 64;  // corpus drawn from the first windows, 0 = all
  std::uint64_t seed = 0;
};

// Embeds every patch of the selected windows (RevIN-normalized, as the
// backbone sees them), samples anchors and finds each anchor's Euclidean
// k nearest embeddings. k is clipped with a warning when the corpus is small.
EmbeddingExport export_embeddings(const model::Backbone& backbone, const data::WindowSet& windows, std::size_t stride,
                                  const EmbeddingOptions& options);

// CSV with columns anchor_id, neighbor_rank, distance, v0..v{m-1}. Each
// anchor contributes its own row at rank 0 followed by its neighbors.
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingExport& result);

}  // namespace tsmixer::train
