// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "lightfuse/model.hpp"

namespace lightfuse {

using Rational = boost::rational<std::int64_t>;

enum class CostCategory { kPointwise = 0, kDepthwise = 1, kUpsample = 2 };
inline constexpr std::size_t kCostCategoryCount = 3;

const char* to_string(CostCategory c);

enum class SpatialMode {
  kNominal,  // every conv costed at the full input resolution W x H
  kActual,   // every conv costed at its own output resolution
};

/// How FLOPs are counted. Upsample copies are always charged at their true
/// output resolution (one op per output element per channel).
struct FlopsConvention {
  std::string name = "custom";
  int mac_factor = 2;  // 1: multiplies only, 2: multiply + add
  SpatialMode spatial_mode = SpatialMode::kNominal;
  bool include_upsample = false;

  /// MACs x 2, nominal resolution, upsample excluded. Yields 2,984 FLOPs/pixel.
  static FlopsConvention table4();
  /// Multiplies only, nominal resolution, upsample copies included.
  static FlopsConvention table2();
  /// MACs x 2 at each layer's true resolution, upsample included.
  static FlopsConvention exact();

  std::string describe() const;
};

/// K^2 * M * N * W * H multiplies.
std::int64_t flops_standard_conv(std::int64_t k, std::int64_t m, std::int64_t n, std::int64_t w,
                                 std::int64_t h);
/// K^2 * M * W * H + M * N * W * H multiplies.
std::int64_t flops_ds_conv(std::int64_t k, std::int64_t m, std::int64_t n, std::int64_t w,
                           std::int64_t h);

/// Parameter count of one layer: D_Conv K^2*M + N, P_Conv M*N + N,
/// DS_Conv K^2*M + M*N + N, zero for everything else.
std::int64_t params_of(const LayerSpec& layer);

struct CostEntry {
  std::string name;
  CostCategory category = CostCategory::kPointwise;
  std::int64_t params = 0;
  Rational flops_per_pixel;  // per input pixel, convention applied
};

struct CostReport {
  std::string model;
  FlopsConvention convention;
  std::vector<CostEntry> entries;
  std::int64_t total_params = 0;
  Rational total_flops_per_pixel;
  std::array<std::int64_t, kCostCategoryCount> category_params{};
  std::array<Rational, kCostCategoryCount> category_flops{};

  double params_percent(CostCategory c) const;
  double flops_percent(CostCategory c) const;
};

CostReport analyze(const ModelGraph& graph, const FlopsConvention& convention);

/// Fixed-width table: one row per entry, totals, then per-category percentages.
std::string render_report(const CostReport& report);

/// key=value lines, one per entry, then totals and category rows.
std::string render_kv(const CostReport& report);

std::string format_rational(const Rational& r);

}  // namespace lightfuse
