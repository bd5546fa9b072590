// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "lightfuse/random.hpp"

namespace lightfuse {

namespace {

template <typename T>
double probe_dot_impl(const Tensor& probe, const BasicTensor<T>& value) {
  if (probe.shape() != value.shape()) {
    throw ShapeError("probe_dot: shape mismatch " + to_string(probe.shape()) + " vs " +
                     to_string(value.shape()));
  }
  double acc = 0.0;
  auto p = probe.data();
  auto v = value.data();
  for (std::size_t i = 0; i < p.size(); ++i) acc += static_cast<double>(p[i]) * v[i];
  return acc;
}

}  // namespace

double probe_dot(const Tensor& probe, const Tensor& value) { return probe_dot_impl(probe, value); }
double probe_dot(const Tensor& probe, const Tensor64& value) { return probe_dot_impl(probe, value); }

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

namespace {

// Central difference of `loss` w.r.t. the float at `slot`. The step is taken
// as the difference of the two perturbed floats, not 2*eps, since x +- eps
// rounds.
template <typename Loss>
double central_difference(float& slot, float epsilon, Loss&& loss) {
  const float saved = slot;
  const float hi = saved + epsilon;
  const float lo = saved - epsilon;
  slot = hi;
  const double l_hi = loss();
  slot = lo;
  const double l_lo = loss();
  slot = saved;
  return (l_hi - l_lo) / (static_cast<double>(hi) - static_cast<double>(lo));
}

}  // namespace

double grad_check(Op& op, const Tensor& x, std::uint64_t seed, float epsilon,
                  FdPrecision precision) {
  Rng rng(seed);
  const Tensor y = op.forward(x);
  Tensor probe(y.shape());
  for (float& v : probe.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  const OpGrads analytic = op.backward(x, probe);
  const auto params = op.parameters();
  if (analytic.params.size() != params.size()) {
    throw ShapeError("grad_check: op returned " + std::to_string(analytic.params.size()) +
                     " parameter gradients for " + std::to_string(params.size()) +
                     " parameters");
  }

  double worst = 0.0;
  Tensor xs = x;
  auto loss = [&] {
    return precision == FdPrecision::kFloat64 ? probe_dot(probe, op.forward_reference(tensor_cast<double>(xs)))
                                              : probe_dot(probe, op.forward(xs));
  };
  auto xd = xs.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double numeric = central_difference(xd[i], epsilon, loss);
    worst = std::max(worst, relative_error(analytic.input.data()[i], numeric));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double numeric = central_difference(params[p][i], epsilon, loss);
      worst = std::max(worst, relative_error(analytic.params[p][i], numeric));
    }
  }
  return worst;
}

}  // namespace lightfuse
