// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

// Tile-fused execution of the detail branch (three 1x1 convs, each followed by
// ReLU). Each S x S tile is pushed through all three layers before the next
// tile is touched, so intermediate maps stay in tile-sized buffers.
//
// Traffic is a byte-counting model, not a measurement:
//   fused:    reads  = H*W*6*4           (input tiles)
//             writes = H*W*3*4           (output tiles)
//             peak   = S*S*(6+32+32)*4   (input tile + two intermediate tiles)
//   unfused:  every layer reads its input map and writes its output map
//             reads  = H*W*(6+32+32)*4, writes = H*W*(32+32+3)*4
//             peak   = max over layers of (in + out) * 4, one pixel in flight

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lightfuse/model.hpp"

namespace lightfuse {

struct TileRect {
  int y = 0;
  int x = 0;
  int height = 0;
  int width = 0;
};

/// Square tiles of side `size`; edge tiles are the residual rectangles.
struct TileSpec {
  int size = 32;

  /// Throws std::invalid_argument unless 1 <= size <= min(height, width).
  void validate(int height, int width) const;
  std::vector<TileRect> tiles(int height, int width) const;
};

enum class TrafficMode { kFused, kUnfused };

struct TrafficReport {
  TrafficMode mode = TrafficMode::kFused;
  std::uint64_t offchip_read_bytes = 0;
  std::uint64_t offchip_write_bytes = 0;
  std::uint64_t peak_onchip_bytes = 0;

  std::uint64_t offchip_total() const { return offchip_read_bytes + offchip_write_bytes; }
  /// "mode=<fused|unfused> reads=<n> writes=<n> peak=<n>"
  std::string to_line() const;
  bool operator==(const TrafficReport&) const = default;
};

/// The three pointwise stages of the detail branch, read out of a weight store.
struct DetailNetKernels {
  std::vector<PointwiseKernel> layers;

  static DetailNetKernels from(const WeightStore& w);
  int input_channels() const { return layers.front().in_channels; }
  int output_channels() const { return layers.back().out_channels; }
};

struct FusedResult {
  Tensor output;
  TrafficReport traffic;
};

/// `threads` > 1 spreads tiles over worker threads; output is identical.
FusedResult run_detailnet_fused(const Tensor& x, const WeightStore& w, const TileSpec& tile,
                                int threads = 1);

/// Layer-by-layer reference path built from pointwise_forward and relu.
FusedResult run_detailnet_unfused(const Tensor& x, const WeightStore& w);

struct TileSweepRow {
  int tile_size = 0;
  std::uint64_t peak_onchip_bytes = 0;
  std::uint64_t offchip_total_bytes = 0;
};

/// Fused-path traffic model over several tile sizes for an H x W input.
std::vector<TileSweepRow> sweep_tile_sizes(int height, int width, const std::vector<int>& sizes);

/// Traffic model only, without running the kernels.
TrafficReport fused_traffic(int height, int width, int tile_size);
TrafficReport unfused_traffic(int height, int width);

/// Full LightFuse forward with the detail branch on the tiled path. Bit-identical
/// to `forward`.
FusedResult forward_fused(const ModelGraph& graph, const WeightStore& w, const Tensor& under,
                          const Tensor& over, const TileSpec& tile, int threads = 1);

}  // namespace lightfuse
