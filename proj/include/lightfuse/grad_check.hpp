// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "lightfuse/ops.hpp"

namespace lightfuse {

inline constexpr float kGradCheckEpsilon = 1e-3f;

/// Precision of the forward evaluations inside a finite difference. With
/// kFloat32 the loss is rounded through float outputs, which limits central
/// differences to roughly 1e-4 absolute accuracy at eps = 1e-3; kFloat64
/// evaluates the same function through the double instantiation of the ops.
/// The analytic gradient under test is the float backward either way.
enum class FdPrecision { kFloat32, kFloat64 };

/// Compares `op.backward` against central finite differences of the scalar
/// L(x) = sum(r * op.forward(x)), r a seeded random probe in [-1, 1].
/// Every input element and every parameter element is perturbed by +-eps.
/// Returns max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(Op& op, const Tensor& x, std::uint64_t seed,
                  float epsilon = kGradCheckEpsilon,
                  FdPrecision precision = FdPrecision::kFloat64);

/// Sum of probe * value, accumulated in double.
double probe_dot(const Tensor& probe, const Tensor& value);
double probe_dot(const Tensor& probe, const Tensor64& value);

double relative_error(double analytic, double numeric);

}  // namespace lightfuse
