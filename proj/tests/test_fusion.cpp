// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "lightfuse/fusion.hpp"
#include "lightfuse/model.hpp"
#include "oracles.hpp"

using namespace lightfuse;

namespace {

// DetailNet as three separate nn-ops layers.
Tensor detail_by_layers(const Tensor& x, const WeightStore& w) {
  const ModelGraph g = build_lightfuse();
  return run_branch(g.branches[1], w, x);
}

}  // namespace

TEST_CASE("tiles cover the extent exactly once") {
  for (auto [h, w, s] : {std::tuple{8, 8, 3}, std::tuple{104, 136, 32}, std::tuple{5, 9, 5}, std::tuple{7, 7, 1}}) {
    const auto tiles = TileSpec{s}.tiles(h, w);
    std::vector<int> hits(static_cast<std::size_t>(h) * w, 0);
    for (const auto& t : tiles) {
      CHECK(t.height <= s);
      CHECK(t.width <= s);
      for (int y = t.y; y < t.y + t.height; ++y)
        for (int x = t.x; x < t.x + t.width; ++x) ++hits[static_cast<std::size_t>(y) * w + x];
    }
    for (int v : hits) CHECK(v == 1);
  }
  CHECK_THROWS_AS(TileSpec{0}.validate(8, 8), std::invalid_argument);
  CHECK_THROWS_AS(TileSpec{9}.validate(8, 16), std::invalid_argument);
}

TEST_CASE("fused equals unfused equals layer-by-layer, bit-exact") {
  const WeightStore w = init_weights(build_lightfuse(), 3);
  std::uint64_t seed = 0;
  for (auto [h, wd] : {std::pair{8, 8}, std::pair{24, 40}, std::pair{104, 136}}) {
    const Tensor x = oracle::random_tensor(h, wd, 6, ++seed);
    const Tensor ref = detail_by_layers(x, w);
    const FusedResult un = run_detailnet_unfused(x, w);
    CHECK(un.output == ref);
    for (int s : {1, 7, 32, std::min(h, wd)}) {
      s = std::min(s, std::min(h, wd));
      CHECK(run_detailnet_fused(x, w, TileSpec{s}).output == ref);
    }
    CHECK(run_detailnet_fused(x, w, TileSpec{7}, 3).output == ref);
  }
}

TEST_CASE("traffic model counts") {
  const Tensor x = oracle::random_tensor(256, 256, 6, 1);
  const WeightStore w = init_weights(build_lightfuse(), 1);
  for (int s : {1, 32, 256}) {
    const TrafficReport t = run_detailnet_fused(x, w, TileSpec{s}).traffic;
    CHECK(t.offchip_read_bytes == 256ull * 256 * 6 * 4);
    CHECK(t.offchip_write_bytes == 256ull * 256 * 3 * 4);
    CHECK(t.offchip_total() == 2359296);
    CHECK(t.peak_onchip_bytes == static_cast<std::uint64_t>(s) * s * 280);
    CHECK(t == fused_traffic(256, 256, s));
  }
  const TrafficReport u = run_detailnet_unfused(x, w).traffic;
  CHECK(u.offchip_read_bytes == 65536ull * 70 * 4);
  CHECK(u.offchip_write_bytes == 65536ull * 67 * 4);
  CHECK(u.offchip_total() == 35913728);
  CHECK(u == unfused_traffic(256, 256));
  CHECK(unfused_traffic(1, 1).offchip_read_bytes == 70 * 4);
  CHECK(u.to_line().rfind("mode=unfused", 0) == 0);
}

TEST_CASE("fused traffic is strictly below unfused") {
  for (int h : {1, 8, 64, 100})
    for (int s : {1, 4})
      if (s <= h) CHECK(fused_traffic(h, h, s).offchip_total() < unfused_traffic(h, h).offchip_total());
}

TEST_CASE("tile size sweep") {
  const auto rows = sweep_tile_sizes(256, 256, {1, 2, 4, 8, 16, 32, 64});
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].peak_onchip_bytes == 280);
  CHECK(rows[5].peak_onchip_bytes == 286720);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].peak_onchip_bytes == 4 * rows[i - 1].peak_onchip_bytes);
    CHECK(rows[i].offchip_total_bytes == rows[0].offchip_total_bytes);
  }
}

TEST_CASE("missing weights and bad channels") {
  const WeightStore empty;
  CHECK_THROWS_AS(run_detailnet_fused(Tensor(8, 8, 6), empty, TileSpec{4}), WeightError);
  const WeightStore w = init_weights(build_lightfuse(), 1);
  CHECK_THROWS_AS(run_detailnet_fused(Tensor(8, 8, 5), w, TileSpec{4}), ShapeError);
}

TEST_CASE("fused model forward matches the plain forward") {
  const ModelGraph g = build_lightfuse();
  const WeightStore w = init_weights(g, 8);
  const Tensor u = oracle::random_tensor(32, 48, 3, 1);
  const Tensor o = oracle::random_tensor(32, 48, 3, 2);
  const FusedResult r = forward_fused(g, w, u, o, TileSpec{16});
  CHECK(r.output == forward(g, w, u, o));
  CHECK(r.traffic == fused_traffic(32, 48, 16));
}
