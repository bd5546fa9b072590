// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "lightfuse/cost_model.hpp"
#include "lightfuse/fusion.hpp"
#include "lightfuse/grad_check.hpp"
#include "lightfuse/io.hpp"
#include "lightfuse/metrics.hpp"
#include "lightfuse/ppm.hpp"
#include "lightfuse/training.hpp"
#include "lightfuse/weights_io.hpp"
#include "oracles.hpp"

using namespace lightfuse;

namespace {

/// Collects failed checks of one criterion.
struct Checker {
  std::vector<std::string> failures;
  std::ostringstream info;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;
  std::function<void(Checker&)> body;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1
void parameter_count(Checker& c) {
  const CostReport r = analyze(build_lightfuse(), FlopsConvention::table4());
  c.expect(r.total_params == 1574, "total params " + std::to_string(r.total_params));
  c.expect(r.category_params[0] == 1400, "pointwise params " + std::to_string(r.category_params[0]));
  c.expect(r.category_params[1] == 174, "depthwise params " + std::to_string(r.category_params[1]));
  const std::string pw = fmt("%.2f", r.params_percent(CostCategory::kPointwise));
  const std::string dw = fmt("%.2f", r.params_percent(CostCategory::kDepthwise));
  c.expect(pw == "88.95", "pointwise pct " + pw);
  c.expect(dw == "11.05", "depthwise pct " + dw);

  std::ostringstream out, err;
  const int code = cli::run({"analyze", "lightfuse"}, out, err);
  c.expect(code == 0 && out.str().find("1574") != std::string::npos, "cli analyze shows 1574");
  c.info << "params=" << r.total_params << " split=" << r.category_params[0] << "/"
         << r.category_params[1] << " (" << pw << "%/" << dw << "%)";
}

// 2
void flops_reproduction(Checker& c) {
  const CostReport t4 = analyze(build_lightfuse(), FlopsConvention::table4());
  c.expect(t4.total_flops_per_pixel == Rational(2984),
           "table4 flops/pixel " + format_rational(t4.total_flops_per_pixel));
  const CostReport t2 = analyze(build_lightfuse(), FlopsConvention::table2());
  const double paper[] = {88.82, 10.91, 0.27};
  c.info << "table4=" << format_rational(t4.total_flops_per_pixel) << " table2=";
  for (std::size_t i = 0; i < kCostCategoryCount; ++i) {
    const double pct = t2.flops_percent(static_cast<CostCategory>(i));
    c.expect(std::abs(pct - paper[i]) <= 0.5, "table2 category " + std::to_string(i) + " " + fmt("%.3f", pct));
    c.info << (i ? "/" : "") << fmt("%.3f", pct);
  }
}

// 3
void ds_conv_ratio(Checker& c) {
  int cases = 0;
  for (std::int64_t k : {3, 5}) {
    for (std::int64_t n = 1; n <= 64; ++n) {
      for (std::int64_t m : {1, 3, 6, 32}) {
        for (auto [w, h] : {std::pair<std::int64_t, std::int64_t>{1, 1}, {256, 256}, {1344, 896}}) {
          const Rational ratio(flops_ds_conv(k, m, n, w, h), flops_standard_conv(k, m, n, w, h));
          c.expect(ratio == Rational(1, n) + Rational(1, k * k),
                   "K=" + std::to_string(k) + " N=" + std::to_string(n));
          ++cases;
        }
      }
    }
  }
  c.info << cases << " exact rational comparisons";
}

// 4
void fusion_correctness(Checker& c) {
  const WeightStore w = init_weights(build_lightfuse(), 2024);
  const std::pair<int, int> dims[] = {{8, 8}, {64, 64}, {256, 256}, {104, 136}};
  int inputs = 0, runs = 0;
  std::uint64_t seed = 1;
  for (auto [h, wd] : dims) {
    for (int rep = 0; rep < 5; ++rep) {
      const Tensor x = oracle::random_tensor(h, wd, 6, seed++, -4.0, 4.0);
      const Tensor ref = run_detailnet_unfused(x, w).output;
      ++inputs;
      for (int s : {1, 7, 32, std::min(h, wd)}) {
        s = std::min(s, std::min(h, wd));
        const bool same = run_detailnet_fused(x, w, TileSpec{s}).output == ref;
        c.expect(same, std::to_string(h) + "x" + std::to_string(wd) + " s=" + std::to_string(s));
        ++runs;
      }
    }
  }
  c.info << inputs << " inputs, " << runs << " fused runs bit-identical";
}

// 5
void traffic_model(Checker& c) {
  const Tensor x = oracle::random_tensor(256, 256, 6, 5);
  const WeightStore w = init_weights(build_lightfuse(), 5);
  const TrafficReport un = run_detailnet_unfused(x, w).traffic;
  c.expect(un.offchip_total() == 35913728, "unfused total " + std::to_string(un.offchip_total()));
  for (int s : {1, 8, 32, 256}) {
    const TrafficReport f = run_detailnet_fused(x, w, TileSpec{s}).traffic;
    c.expect(f.offchip_total() == 2359296, "fused total s=" + std::to_string(s));
    c.expect(f.peak_onchip_bytes == static_cast<std::uint64_t>(s) * s * 280, "peak s=" + std::to_string(s));
    c.expect(f.offchip_total() < un.offchip_total(), "fused < unfused");
  }
  const Rational ratio(2359296, 35913728);
  c.expect(ratio == Rational(9, 137), "ratio " + format_rational(ratio));
  c.info << "fused=2359296 unfused=" << un.offchip_total() << " ratio=" << format_rational(ratio);
}

// 6
void gradient_correctness(Checker& c) {
  struct Case {
    std::string name;
    std::unique_ptr<Op> op;
    Tensor x;
  };
  auto dw = [](int ch, int stride, bool bias, std::uint64_t seed) {
    return DepthwiseKernel{3, ch, stride, oracle::random_vector(9 * ch, seed),
                           bias ? oracle::random_vector(ch, seed + 1) : std::vector<float>{}};
  };
  Tensor relu_x = oracle::random_tensor(16, 16, 4, 3);
  for (float& v : relu_x.data()) v = v >= 0 ? v + 0.05f : v - 0.05f;

  std::vector<Case> cases;
  cases.push_back({"depthwise s1", std::make_unique<DepthwiseOp>(dw(6, 1, true, 10)), oracle::random_tensor(16, 16, 6, 1)});
  cases.push_back({"depthwise s2", std::make_unique<DepthwiseOp>(dw(6, 2, true, 11)), oracle::random_tensor(16, 16, 6, 2)});
  cases.push_back({"depthwise nobias", std::make_unique<DepthwiseOp>(dw(6, 2, false, 12)), oracle::random_tensor(16, 16, 6, 3)});
  cases.push_back({"pointwise", std::make_unique<PointwiseOp>(PointwiseKernel{6, 8, oracle::random_vector(48, 13), oracle::random_vector(8, 14)}),
                   oracle::random_tensor(16, 16, 6, 4)});
  cases.push_back({"upsample", std::make_unique<UpsampleOp>(), oracle::random_tensor(16, 16, 3, 5)});
  cases.push_back({"relu", std::make_unique<ReluOp>(), relu_x});
  cases.push_back({"tanh", std::make_unique<TanhOp>(), oracle::random_tensor(16, 16, 3, 6)});
  cases.push_back({"add", std::make_unique<AddOp>(oracle::random_tensor(16, 16, 3, 7)), oracle::random_tensor(16, 16, 3, 8)});

  double worst = 0.0;
  for (auto& cs : cases) {
    const double err = grad_check(*cs.op, cs.x, 99);
    worst = std::max(worst, err);
    c.expect(err < 1e-3, cs.name + " rel err " + fmt("%.3g", err));
  }
  c.info << "ops max=" << fmt("%.2e", worst);

  for (const ModelGraph& g : {build_lightfuse(), build_tcnn()}) {
    const WeightStore w = init_weights(g, 31);
    const TrainingSample s{oracle::random_tensor(16, 16, 3, 40), oracle::random_tensor(16, 16, 3, 41),
                           oracle::random_tensor(16, 16, 3, 42)};
    const GraphGradCheck r = graph_grad_check(g, w, s, 400, 7);
    c.expect(r.checked == 400, g.name + " only " + std::to_string(r.checked) + " draws checked");
    c.expect(r.max_rel_error < 1e-3, g.name + " graph rel err " + fmt("%.3g", r.max_rel_error));
    c.info << " " << g.name << "=" << fmt("%.2e", r.max_rel_error) << " (kinks skipped "
           << r.kink_skipped << ")";
  }
}

// Smooth scene in [-0.2, 0.8]; the exposures are darkened and brightened copies.
std::vector<TrainingSample> toy_triples() {
  std::vector<TrainingSample> out;
  for (int i = 0; i < 4; ++i) {
    Tensor scene(64, 64, 3);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        for (int ch = 0; ch < 3; ++ch) {
          const double v = 0.3 + 0.3 * std::sin(0.11 * (i + 1) * x + 0.7 * ch) +
                           0.2 * std::cos(0.07 * (ch + 1) * y - 0.3 * i);
          scene.at(y, x, ch) = static_cast<float>(v);
        }
    Tensor under = scene, over = scene;
    for (float& v : under.data()) v = 0.5f * v - 0.3f;
    for (float& v : over.data()) v = 0.5f * v + 0.3f;
    out.push_back({under, over, scene});
  }
  return out;
}

// 7
void toy_learning(Checker& c) {
  const ModelGraph g = build_lightfuse();
  const auto data = toy_triples();
  TrainOptions opt;
  opt.steps = 2000;
  opt.seed = 1;
  const WeightStore w0 = init_weights(g, 1);
  const double initial = evaluate_loss(g, w0, data).l_mse;
  const TrainResult r = train_toy(g, w0, data, opt);
  const double reduction = initial / r.final_loss.l_mse;
  c.expect(reduction >= 100.0, "reduction " + fmt("%.1f", reduction) + "x");
  c.info << "initial_mse=" << fmt("%.4g", initial) << " final_mse=" << fmt("%.4g", r.final_loss.l_mse)
         << " reduction=" << fmt("%.1f", reduction) << "x steps=" << r.curve.size();
}

// 8
void metric_oracles(Checker& c) {
  const Image8 x = oracle::random_image(64, 64, 8);
  c.expect(std::isinf(psnr(x, x)) && psnr(x, x) > 0, "psnr(x,x)=inf");
  c.expect(psnr(Image8(32, 32, 0), Image8(32, 32, 255)) == 0.0, "psnr(0,255)=0");
  Image8 plus = x;
  for (auto& v : plus.data) v = static_cast<std::uint8_t>(std::min(v, std::uint8_t{254}));
  Image8 plus1 = plus;
  for (auto& v : plus1.data) ++v;
  const double p1 = psnr(plus, plus1);
  c.expect(std::abs(p1 - 48.13) <= 0.01, "psnr +1 " + fmt("%.4f", p1));
  const double s = ssim(x, x);
  c.expect(std::abs(s - 1.0) <= 1e-6, "ssim(x,x) " + fmt("%.9f", s));
  c.expect(score(x, x).to_line() == "psnr=inf ssim=1.000", "score line");
  c.expect(QualityScore{p1, 0.98765}.to_line() == "psnr=48.131 ssim=0.988", "three decimals");

  oracle::TempDir dir("acc_metrics");
  write_ppm(dir / "x.ppm", x);
  std::ostringstream out, err;
  c.expect(cli::run({"eval", dir / "x.ppm", dir / "x.ppm"}, out, err) == 0 &&
               out.str() == "psnr=inf ssim=1.000\n",
           "cli eval line");
  c.info << "psnr(+1)=" << fmt("%.4f", p1) << " ssim(x,x)=" << fmt("%.9f", s);
}

// 9
void format_round_trips(Checker& c) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    Rng rng(seed);
    const Image8 img = oracle::random_image(1 + static_cast<int>(rng.below(64)), 1 + static_cast<int>(rng.below(64)), seed);
    const auto enc = encode_ppm(img);
    c.expect(decode_ppm(enc) == img && encode_ppm(decode_ppm(enc)) == enc, "ppm seed " + std::to_string(seed));
  }
  const ModelGraph graphs[] = {build_lightfuse(), build_tcnn()};
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const ModelGraph& g = graphs[seed % 2];
    WeightStore w = init_weights(g, seed);
    Rng rng(seed + 1000);
    for (auto& [name, p] : w.entries())
      for (float& v : p.values) v = static_cast<float>(rng.uniform(-1e6, 1e6) * std::pow(10.0, -static_cast<double>(rng.below(40))));
    const auto bytes = save_weights(w, g);
    c.expect(load_weights(bytes, g) == w && save_weights(load_weights(bytes, g), g) == bytes,
             "lfw seed " + std::to_string(seed));
  }
  c.info << "120 PPM + 120 LFW1 round trips";
}

// 10
void pairing_and_patching(Checker& c) {
  oracle::TempDir dir("acc_pair");
  const std::filesystem::path scene = dir.path() / "scene";
  std::filesystem::create_directories(scene);
  write_ppm(scene / "b_mid.ppm", Image8(32, 32, 120));
  write_ppm(scene / "c_dark.ppm", Image8(32, 32, 10));
  write_ppm(scene / "a_bright.ppm", Image8(32, 32, 240));
  write_bytes(scene / "README.txt", std::vector<std::uint8_t>{'x'});
  std::ostringstream out, err;
  const int code = cli::run({"pair", scene.string()}, out, err);
  c.expect(code == 0 && out.str() == "under=c_dark.ppm\nover=a_bright.ppm\n", "pair output: " + out.str());
  c.expect(err.str().find("README.txt") != std::string::npos, "non-PPM warning");

  const std::vector<Image8> tie = {Image8(8, 8, 50), Image8(8, 8, 50)};
  c.expect(select_extreme_pair(tie) == std::pair<std::size_t, std::size_t>{0, 1}, "tie-break");
  std::vector<Image8> three = {Image8(8, 8, 10), Image8(8, 8, 120), Image8(8, 8, 240)};
  c.expect(select_extreme_pair(three) == std::pair<std::size_t, std::size_t>{0, 2}, "means 10/120/240");

  c.expect(extract_patches(Image8(512, 512)).size() == 4, "512x512 -> 4 patches");
  const Image8 wide = oracle::random_image(256, 300, 1);
  const auto p = extract_patches(wide);
  c.expect(p.size() == 1 && p[0] == crop(wide, 0, 0, 256, 256), "256x300 -> 1 patch, right 44 columns dropped");
  c.info << "pair, tie-break and patch grid rules hold";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "parameter count", 1, parameter_count},
      {2, "FLOPs reproduction", 1, flops_reproduction},
      {3, "DS_Conv ratio", 1, ds_conv_ratio},
      {4, "fusion correctness", 30, fusion_correctness},
      {5, "traffic model", 5, traffic_model},
      {6, "gradient correctness", 60, gradient_correctness},
      {7, "toy learning", 600, toy_learning},
      {8, "metric oracles", 5, metric_oracles},
      {9, "format round-trips", 10, format_round_trips},
      {10, "pairing/patching protocol", 5, pairing_and_patching},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) c.failures.push_back("runtime " + fmt("%.1f", secs) + "s over budget");
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("criterion %2d: %s  %-26s %6.2fs  %s\n", cr.id, ok ? "PASS" : "FAIL", cr.title.c_str(), secs,
                c.info.str().c_str());
    for (const auto& f : c.failures) std::printf("      failed: %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
