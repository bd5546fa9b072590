// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/cost_model.hpp"

#include <cstdio>
#include <sstream>

namespace lightfuse {

const char* to_string(CostCategory c) {
  switch (c) {
    case CostCategory::kPointwise: return "pointwise";
    case CostCategory::kDepthwise: return "depthwise";
    case CostCategory::kUpsample: return "upsample";
  }
  return "unknown";
}

FlopsConvention FlopsConvention::table4() { return {"table4", 2, SpatialMode::kNominal, false}; }
FlopsConvention FlopsConvention::table2() { return {"table2", 1, SpatialMode::kNominal, true}; }
FlopsConvention FlopsConvention::exact() { return {"exact", 2, SpatialMode::kActual, true}; }

std::string FlopsConvention::describe() const {
  return name + " (mac_factor=" + std::to_string(mac_factor) +
         ", spatial=" + (spatial_mode == SpatialMode::kNominal ? "nominal" : "actual") +
         ", upsample=" + (include_upsample ? "included" : "excluded") + ")";
}

std::int64_t flops_standard_conv(std::int64_t k, std::int64_t m, std::int64_t n, std::int64_t w,
                                 std::int64_t h) {
  return k * k * m * n * w * h;
}

std::int64_t flops_ds_conv(std::int64_t k, std::int64_t m, std::int64_t n, std::int64_t w,
                           std::int64_t h) {
  return k * k * m * w * h + m * n * w * h;
}

std::int64_t params_of(const LayerSpec& l) {
  const std::int64_t k2 = static_cast<std::int64_t>(l.k) * l.k;
  const std::int64_t m = l.in_channels;
  const std::int64_t n = l.out_channels;
  switch (l.kind) {
    case LayerKind::kDepthwise: return k2 * m + (l.bias ? n : 0);
    case LayerKind::kPointwise: return m * n + n;
    case LayerKind::kSeparable: return k2 * m + m * n + n;
    default: return 0;
  }
}

double CostReport::params_percent(CostCategory c) const {
  if (total_params == 0) return 0.0;
  return 100.0 * static_cast<double>(category_params[static_cast<std::size_t>(c)]) /
         static_cast<double>(total_params);
}

double CostReport::flops_percent(CostCategory c) const {
  if (total_flops_per_pixel.numerator() == 0) return 0.0;
  return 100.0 * boost::rational_cast<double>(category_flops[static_cast<std::size_t>(c)] /
                                              total_flops_per_pixel);
}

CostReport analyze(const ModelGraph& graph, const FlopsConvention& conv) {
  CostReport r;
  r.model = graph.name;
  r.convention = conv;
  const Rational mac(conv.mac_factor);

  for (const auto& branch : graph.branches) {
    // Output area of the current feature map relative to the input image.
    Rational area(1);
    for (const auto& l : branch.layers) {
      const std::int64_t k2 = static_cast<std::int64_t>(l.k) * l.k;
      const std::int64_t m = l.in_channels;
      const std::int64_t n = l.out_channels;
      switch (l.kind) {
        case LayerKind::kDepthwise:
        case LayerKind::kSeparable: {
          area /= static_cast<std::int64_t>(l.stride) * l.stride;
          const Rational at = conv.spatial_mode == SpatialMode::kNominal ? Rational(1) : area;
          if (l.kind == LayerKind::kDepthwise) {
            r.entries.push_back({l.name, CostCategory::kDepthwise, params_of(l),
                                 mac * Rational(k2 * m) * at});
          } else {
            r.entries.push_back({l.name + ".depthwise", CostCategory::kDepthwise, k2 * m,
                                 mac * Rational(k2 * m) * at});
            r.entries.push_back({l.name + ".pointwise", CostCategory::kPointwise, m * n + n,
                                 mac * Rational(m * n) * at});
          }
          break;
        }
        case LayerKind::kPointwise: {
          const Rational at = conv.spatial_mode == SpatialMode::kNominal ? Rational(1) : area;
          r.entries.push_back(
              {l.name, CostCategory::kPointwise, params_of(l), mac * Rational(m * n) * at});
          break;
        }
        case LayerKind::kUpsample: {
          area *= 4;
          const Rational copies = conv.include_upsample ? Rational(m) * area : Rational(0);
          r.entries.push_back({l.name, CostCategory::kUpsample, 0, copies});
          break;
        }
        default: break;
      }
    }
  }

  for (const auto& e : r.entries) {
    const auto c = static_cast<std::size_t>(e.category);
    r.total_params += e.params;
    r.total_flops_per_pixel += e.flops_per_pixel;
    r.category_params[c] += e.params;
    r.category_flops[c] += e.flops_per_pixel;
  }
  return r;
}

std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

namespace {

std::string decimal(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", boost::rational_cast<double>(r));
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* category_label(CostCategory c) {
  switch (c) {
    case CostCategory::kPointwise: return "1x1 conv";
    case CostCategory::kDepthwise: return "3x3 depthwise conv";
    case CostCategory::kUpsample: return "up-sampling";
  }
  return "";
}

}  // namespace

std::string render_report(const CostReport& r) {
  std::ostringstream os;
  char line[160];
  os << "model: " << r.model << "\n";
  os << "convention: " << r.convention.describe() << "\n";
  std::snprintf(line, sizeof line, "%-28s %-10s %8s %14s\n", "layer", "category", "params",
                "flops/pixel");
  os << line;
  for (const auto& e : r.entries) {
    std::snprintf(line, sizeof line, "%-28s %-10s %8lld %14s\n", e.name.c_str(),
                  to_string(e.category), static_cast<long long>(e.params),
                  decimal(e.flops_per_pixel).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-28s %-10s %8lld %14s\n", "total", "",
                static_cast<long long>(r.total_params), decimal(r.total_flops_per_pixel).c_str());
  os << line;
  os << "\n";
  std::snprintf(line, sizeof line, "%-20s %8s %9s\n", "type", "flops%", "params%");
  os << line;
  for (std::size_t c = 0; c < kCostCategoryCount; ++c) {
    const auto cat = static_cast<CostCategory>(c);
    std::snprintf(line, sizeof line, "%-20s %8s %9s\n", category_label(cat),
                  fixed2(r.flops_percent(cat)).c_str(), fixed2(r.params_percent(cat)).c_str());
    os << line;
  }
  return os.str();
}

std::string render_kv(const CostReport& r) {
  std::ostringstream os;
  for (const auto& e : r.entries) {
    os << "layer=" << e.name << " category=" << to_string(e.category) << " params=" << e.params
       << " flops_per_pixel=" << format_rational(e.flops_per_pixel) << "\n";
  }
  os << "total model=" << r.model << " convention=" << r.convention.name
     << " params=" << r.total_params
     << " flops_per_pixel=" << format_rational(r.total_flops_per_pixel) << "\n";
  for (std::size_t c = 0; c < kCostCategoryCount; ++c) {
    const auto cat = static_cast<CostCategory>(c);
    os << "category=" << to_string(cat) << " params=" << r.category_params[c]
       << " flops_per_pixel=" << format_rational(r.category_flops[c])
       << " params_pct=" << fixed2(r.params_percent(cat))
       << " flops_pct=" << fixed2(r.flops_percent(cat)) << "\n";
  }
  return os.str();
}

}  // namespace lightfuse
