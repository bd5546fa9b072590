// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lightfuse/model.hpp"
#include "lightfuse/training.hpp"
#include "oracles.hpp"

using namespace lightfuse;

namespace {

std::size_t count_params(const ModelGraph& g, const std::string& prefix = "") {
  std::size_t n = 0;
  for (const auto& p : parameter_specs(g)) {
    if (p.name.rfind(prefix, 0) != 0) continue;
    n += std::accumulate(p.dims.begin(), p.dims.end(), std::size_t{1}, std::multiplies<>());
  }
  return n;
}

TrainingSample random_sample(int h, int w, std::uint64_t seed) {
  return {oracle::random_tensor(h, w, 3, seed), oracle::random_tensor(h, w, 3, seed + 1),
          oracle::random_tensor(h, w, 3, seed + 2)};
}

}  // namespace

TEST_CASE("lightfuse parameter counts") {
  const ModelGraph g = build_lightfuse();
  CHECK(count_params(g) == 1574);
  CHECK(count_params(g, "global.") == 195);
  CHECK(count_params(g, "detail.") == 1379);
  CHECK(count_params(g, "global.dconv1") == 60);
  CHECK(count_params(g, "global.dsconv3") == 75);
  CHECK(count_params(g, "detail.pconv2") == 1056);
  CHECK(init_weights(g, 1).element_count() == 1574);
  CHECK(g.spatial_divisor() == 8);
}

TEST_CASE("tcnn parameter count and shapes") {
  const ModelGraph g = build_tcnn();
  CHECK(count_params(g) == 2009);
  CHECK(count_params(g, "tcnn.dsconv1") == 278);
  CHECK(count_params(g, "tcnn.dsconv2") == 1344);
  CHECK(count_params(g, "tcnn.dsconv3") == 387);
  CHECK(g.spatial_divisor() == 1);

  Shape s{10, 14, 6};
  std::vector<int> channels;
  for (const auto& l : g.branches[0].layers) {
    s = layer_output_shape(l, s);
    if (l.kind == LayerKind::kSeparable) channels.push_back(s.channels);
  }
  CHECK(channels == std::vector<int>{32, 32, 3});
  CHECK(s == Shape{10, 14, 3});

  const WeightStore w = init_weights(g, 3);
  const Tensor y = forward(g, w, oracle::random_tensor(10, 14, 3, 1), oracle::random_tensor(10, 14, 3, 2));
  CHECK(y.shape() == Shape{10, 14, 3});
}

TEST_CASE("separable layers own exactly one bias") {
  for (const ModelGraph& g : {build_lightfuse(), build_tcnn()}) {
    for (const auto& b : g.branches) {
      for (const auto& l : b.layers) {
        if (l.kind != LayerKind::kSeparable) continue;
        const auto specs = parameter_specs(l);
        REQUIRE(specs.size() == 3);
        CHECK(std::count_if(specs.begin(), specs.end(), [](const ParamSpec& p) { return p.is_bias; }) == 1);
        CHECK(specs[0].dims == std::vector<std::uint32_t>{3, 3, static_cast<std::uint32_t>(l.in_channels)});
        CHECK(specs[2].dims == std::vector<std::uint32_t>{static_cast<std::uint32_t>(l.out_channels)});
      }
    }
  }
}

TEST_CASE("global branch spatial bookkeeping") {
  const ModelGraph g = build_lightfuse();
  Shape s{64, 40, 6};
  const auto& layers = g.branches[0].layers;
  for (const auto& l : layers) {
    s = layer_output_shape(l, s);
    if (l.name == "global.dsconv3") CHECK(s == Shape{8, 5, 3});
  }
  CHECK(s == Shape{64, 40, 3});
}

TEST_CASE("init_weights determinism and bounds") {
  const ModelGraph g = build_lightfuse();
  const WeightStore a = init_weights(g, 42);
  CHECK(a == init_weights(g, 42));
  CHECK_FALSE(a == init_weights(g, 43));
  for (const auto& spec : parameter_specs(g)) {
    const auto& p = a.at(spec.name);
    CHECK(p.dims == spec.dims);
    const double bound = std::sqrt(6.0 / spec.fan_in);
    for (float v : p.values) {
      if (spec.is_bias) {
        CHECK(v == 0.0f);
      } else {
        CHECK(std::abs(v) <= bound);
      }
    }
  }
  CHECK(parameter_specs(g)[0].fan_in == 9);
}

TEST_CASE("forward contracts") {
  const ModelGraph g = build_lightfuse();
  const Tensor u = oracle::random_tensor(16, 24, 3, 5);
  const Tensor o = oracle::random_tensor(16, 24, 3, 6);

  CHECK(forward(g, zero_weights(g), u, o) == Tensor(16, 24, 3, 0.0f));

  const WeightStore w = init_weights(g, 9);
  const Tensor y = forward(g, w, u, o);
  CHECK(y.shape() == Shape{16, 24, 3});
  CHECK(y == forward(g, w, u, o));
  for (float v : y.data()) {
    CHECK(v > -1.0f);
    CHECK(v < 1.0f);
  }

  CHECK_THROWS_AS(forward(g, w, u, oracle::random_tensor(16, 16, 3, 1)), ShapeError);
  CHECK_THROWS_AS(forward(g, w, oracle::random_tensor(12, 24, 3, 1), oracle::random_tensor(12, 24, 3, 2)),
                  ShapeError);
  CHECK_THROWS_AS(forward(g, w, Tensor(16, 24, 4), Tensor(16, 24, 4)), ShapeError);
}

TEST_CASE("output stays bounded for extreme inputs") {
  const ModelGraph g = build_lightfuse();
  WeightStore w = init_weights(g, 1);
  for (auto& [name, p] : w.entries())
    for (float& v : p.values) v *= 50.0f;
  const Tensor y = forward(g, w, Tensor(8, 8, 3, 1.0f), Tensor(8, 8, 3, -1.0f));
  CHECK(y.all_finite());
  for (float v : y.data()) CHECK(std::abs(v) <= 1.0f);
}

TEST_CASE("the global branch supplies negative outputs") {
  const ModelGraph g = build_lightfuse();
  bool any_negative = false;
  for (std::uint64_t seed = 0; seed < 4 && !any_negative; ++seed) {
    const Tensor y = forward(g, init_weights(g, seed), oracle::random_tensor(16, 16, 3, seed),
                             oracle::random_tensor(16, 16, 3, seed + 9));
    for (float v : y.data()) any_negative |= v < 0.0f;
  }
  CHECK(any_negative);

  LightFuseOptions literal;
  literal.final_encoder_relu = true;
  const ModelGraph gl = build_lightfuse(literal);
  const Tensor y = forward(gl, init_weights(gl, 0), oracle::random_tensor(16, 16, 3, 0),
                           oracle::random_tensor(16, 16, 3, 9));
  for (float v : y.data()) CHECK(v >= 0.0f);
}

TEST_CASE("encoder activation flag") {
  LightFuseOptions off;
  off.encoder_relu = false;
  const ModelGraph g = build_lightfuse(off);
  CHECK(count_params(g) == 1574);
  for (const auto& l : g.branches[0].layers) CHECK(l.kind != LayerKind::kRelu);
}

TEST_CASE("branch evaluation order does not matter") {
  const ModelGraph g = build_lightfuse();
  ModelGraph swapped = g;
  std::swap(swapped.branches[0], swapped.branches[1]);
  const WeightStore w = init_weights(g, 4);
  const Tensor u = oracle::random_tensor(16, 8, 3, 1);
  const Tensor o = oracle::random_tensor(16, 8, 3, 2);
  CHECK(forward(g, w, u, o) == forward(swapped, w, u, o));
}

TEST_CASE("weight store validation") {
  const ModelGraph g = build_lightfuse();
  WeightStore w = init_weights(g, 0);
  CHECK_NOTHROW(w.validate(g));
  w.at("detail.pconv1.weights").dims = {6, 31};
  try {
    w.validate(g);
    FAIL("expected WeightError");
  } catch (const WeightError& e) {
    CHECK(e.kind() == WeightError::Kind::kShapeMismatch);
    CHECK(e.tensor() == "detail.pconv1.weights");
  }
  CHECK_THROWS_AS(w.at("nope"), WeightError);
}

TEST_CASE("end-to-end graph gradients on 16x16") {
  for (const ModelGraph& g : {build_lightfuse(), build_tcnn()}) {
    const WeightStore w = init_weights(g, 11);
    const GraphGradCheck r = graph_grad_check(g, w, random_sample(16, 16, 21), 200, 5);
    MESSAGE(g.name << " graph grad-check max rel error " << r.max_rel_error << " over "
                   << r.checked << " draws, " << r.kink_skipped << " skipped at ReLU kinks");
    CHECK(r.checked == 200);
    CHECK(r.max_rel_error < 1e-3);
  }
}
