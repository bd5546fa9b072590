// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/fusion.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace lightfuse {

namespace {

constexpr std::uint64_t kBytesPerValue = sizeof(float);

std::uint64_t area(int h, int w) { return static_cast<std::uint64_t>(h) * w; }

const char* to_string(TrafficMode m) { return m == TrafficMode::kFused ? "fused" : "unfused"; }

void check_detail_input(const Tensor& x, const DetailNetKernels& k) {
  if (x.channels() != k.input_channels()) {
    throw ShapeError("detail branch expects " + std::to_string(k.input_channels()) +
                     " input channels, got " + to_string(x.shape()));
  }
}

}  // namespace

void TileSpec::validate(int height, int width) const {
  if (size < 1 || size > std::min(height, width)) {
    throw std::invalid_argument("tile size " + std::to_string(size) + " outside [1, " +
                                std::to_string(std::min(height, width)) + "]");
  }
}

std::vector<TileRect> TileSpec::tiles(int height, int width) const {
  validate(height, width);
  std::vector<TileRect> out;
  for (int y = 0; y < height; y += size) {
    for (int x = 0; x < width; x += size) {
      out.push_back({y, x, std::min(size, height - y), std::min(size, width - x)});
    }
  }
  return out;
}

std::string TrafficReport::to_line() const {
  return std::string("mode=") + to_string(mode) + " reads=" + std::to_string(offchip_read_bytes) +
         " writes=" + std::to_string(offchip_write_bytes) +
         " peak=" + std::to_string(peak_onchip_bytes);
}

DetailNetKernels DetailNetKernels::from(const WeightStore& w) {
  DetailNetKernels k;
  const int widths[] = {6, 32, 32, 3};
  for (int i = 0; i < 3; ++i) {
    LayerSpec l{"detail.pconv" + std::to_string(i + 1), LayerKind::kPointwise, 1, widths[i],
                widths[i + 1], 1, true};
    k.layers.push_back(pointwise_kernel(l, w));
    k.layers.back().validate();
  }
  return k;
}

TrafficReport fused_traffic(int height, int width, int tile_size) {
  TileSpec{tile_size}.validate(height, width);
  const std::uint64_t px = area(height, width);
  const std::uint64_t tile_px = area(tile_size, tile_size);
  return {TrafficMode::kFused, px * 6 * kBytesPerValue, px * 3 * kBytesPerValue,
          tile_px * (6 + 32 + 32) * kBytesPerValue};
}

TrafficReport unfused_traffic(int height, int width) {
  const std::uint64_t px = area(height, width);
  return {TrafficMode::kUnfused, px * (6 + 32 + 32) * kBytesPerValue,
          px * (32 + 32 + 3) * kBytesPerValue, (32 + 32) * kBytesPerValue};
}

FusedResult run_detailnet_fused(const Tensor& x, const WeightStore& w, const TileSpec& tile,
                                int threads) {
  const DetailNetKernels k = DetailNetKernels::from(w);
  check_detail_input(x, k);
  const auto tiles = tile.tiles(x.height(), x.width());
  const int c_in = k.input_channels();
  const int c_mid1 = k.layers[0].out_channels;
  const int c_mid2 = k.layers[1].out_channels;
  const int c_out = k.output_channels();

  Tensor out(x.height(), x.width(), c_out);
  const int workers = std::clamp(threads, 1, static_cast<int>(tiles.size()));
  std::vector<TrafficReport> partial(workers, TrafficReport{TrafficMode::kFused});

  // Each worker owns disjoint tiles, so output writes never overlap.
  auto work = [&](int worker) {
    const std::size_t cap = static_cast<std::size_t>(tile.size) * tile.size;
    std::vector<float> in_tile(cap * c_in), buf_a(cap * c_mid1), buf_b(cap * c_mid2);
    TrafficReport& t = partial[worker];
    for (std::size_t i = worker; i < tiles.size(); i += workers) {
      const TileRect& r = tiles[i];
      const std::size_t n = area(r.height, r.width);
      // Off-chip -> on-chip: the input tile.
      for (int yy = 0; yy < r.height; ++yy) {
        for (int xx = 0; xx < r.width; ++xx) {
          auto src = x.pixel(r.y + yy, r.x + xx);
          std::copy(src.begin(), src.end(),
                    in_tile.begin() + (static_cast<std::size_t>(yy) * r.width + xx) * c_in);
        }
      }
      t.offchip_read_bytes += n * c_in * kBytesPerValue;
      t.peak_onchip_bytes =
          std::max<std::uint64_t>(t.peak_onchip_bytes, n * (c_in + c_mid1 + c_mid2) * kBytesPerValue);

      for (std::size_t p = 0; p < n; ++p) {
        float* a = buf_a.data() + p * c_mid1;
        pointwise_pixel(in_tile.data() + p * c_in, k.layers[0], a);
        for (int c = 0; c < c_mid1; ++c) a[c] = relu_value(a[c]);
      }
      for (std::size_t p = 0; p < n; ++p) {
        float* b = buf_b.data() + p * c_mid2;
        pointwise_pixel(buf_a.data() + p * c_mid1, k.layers[1], b);
        for (int c = 0; c < c_mid2; ++c) b[c] = relu_value(b[c]);
      }
      // Last layer writes straight to the off-chip output.
      for (int yy = 0; yy < r.height; ++yy) {
        for (int xx = 0; xx < r.width; ++xx) {
          const std::size_t p = static_cast<std::size_t>(yy) * r.width + xx;
          float* o = out.pixel(r.y + yy, r.x + xx).data();
          pointwise_pixel(buf_b.data() + p * c_mid2, k.layers[2], o);
          for (int c = 0; c < c_out; ++c) o[c] = relu_value(o[c]);
        }
      }
      t.offchip_write_bytes += n * c_out * kBytesPerValue;
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work, i);
  }

  TrafficReport total{TrafficMode::kFused};
  for (const auto& t : partial) {
    total.offchip_read_bytes += t.offchip_read_bytes;
    total.offchip_write_bytes += t.offchip_write_bytes;
    total.peak_onchip_bytes = std::max(total.peak_onchip_bytes, t.peak_onchip_bytes);
  }
  return {std::move(out), total};
}

FusedResult run_detailnet_unfused(const Tensor& x, const WeightStore& w) {
  const DetailNetKernels k = DetailNetKernels::from(w);
  check_detail_input(x, k);
  TrafficReport t{TrafficMode::kUnfused};
  const std::uint64_t px = area(x.height(), x.width());
  Tensor current = x;
  for (const auto& layer : k.layers) {
    t.offchip_read_bytes += px * layer.in_channels * kBytesPerValue;
    current = relu(pointwise_forward(current, layer));
    t.offchip_write_bytes += px * layer.out_channels * kBytesPerValue;
    t.peak_onchip_bytes = std::max<std::uint64_t>(
        t.peak_onchip_bytes, (layer.in_channels + layer.out_channels) * kBytesPerValue);
  }
  return {std::move(current), t};
}

std::vector<TileSweepRow> sweep_tile_sizes(int height, int width, const std::vector<int>& sizes) {
  std::vector<TileSweepRow> rows;
  for (int s : sizes) {
    const TrafficReport t = fused_traffic(height, width, s);
    rows.push_back({s, t.peak_onchip_bytes, t.offchip_total()});
  }
  return rows;
}

FusedResult forward_fused(const ModelGraph& graph, const WeightStore& w, const Tensor& under,
                          const Tensor& over, const TileSpec& tile, int threads) {
  const Tensor input = prepare_input(graph, under, over);
  std::vector<Tensor> outputs;
  TrafficReport traffic;
  bool fused = false;
  for (const auto& b : graph.branches) {
    if (b.name == "detail") {
      auto r = run_detailnet_fused(input, w, tile, threads);
      outputs.push_back(std::move(r.output));
      traffic = r.traffic;
      fused = true;
    } else {
      outputs.push_back(run_branch(b, w, input));
    }
  }
  if (!fused) throw std::invalid_argument("graph '" + graph.name + "' has no detail branch");
  return {run_merge(graph, outputs), traffic};
}

}  // namespace lightfuse
