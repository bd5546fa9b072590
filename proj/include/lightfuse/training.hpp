// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lightfuse/grad_check.hpp"
#include "lightfuse/model.hpp"

namespace lightfuse {

/// Fixed (non-trainable) map from a 3-channel tensor to feature tensors f_i.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<Tensor> features(const Tensor& x) const = 0;
  /// Gradient w.r.t. x of sum_i <feature_grads[i], f_i(x)>.
  virtual Tensor backward(const Tensor& x, const std::vector<Tensor>& feature_grads) const = 0;
};

/// Single stage, f(x) = x.
class IdentityExtractor : public FeatureExtractor {
 public:
  std::vector<Tensor> features(const Tensor& x) const override { return {x}; }
  Tensor backward(const Tensor& x, const std::vector<Tensor>& feature_grads) const override;
};

/// Two seeded conv stages:
///   f1 = relu(pointwise_3->8(depthwise_3x3(x)))
///   f2 = relu(pointwise_8->8(depthwise_3x3(f1)))
class RandomConvExtractor : public FeatureExtractor {
 public:
  explicit RandomConvExtractor(std::uint64_t seed);
  std::vector<Tensor> features(const Tensor& x) const override;
  Tensor backward(const Tensor& x, const std::vector<Tensor>& feature_grads) const override;

 private:
  DepthwiseKernel dw1_, dw2_;
  PointwiseKernel pw1_, pw2_;
};

/// Mean squared difference over every element.
double loss_mse(const Tensor& out, const Tensor& label);
Tensor loss_mse_grad(const Tensor& out, const Tensor& label);

/// Sum over stages of the L1 distance (sum of absolute differences) of features.
double loss_perceptual(const Tensor& out, const Tensor& label, const FeatureExtractor& f);
Tensor loss_perceptual_grad(const Tensor& out, const Tensor& label, const FeatureExtractor& f);

struct LossReport {
  double l_mse = 0.0;
  double l_perceptual = 0.0;
  double l_total = 0.0;
};

LossReport loss_total(const Tensor& out, const Tensor& label, const FeatureExtractor& f);

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;

  static AdamState for_store(const WeightStore& params, AdamHyper hyper = {});
};

/// Bias-corrected Adam. Elements whose gradient is exactly zero are left
/// alone (value and moments), so a zero gradient never moves a parameter.
void adam_step(AdamState& state, WeightStore& params, const WeightStore& grads);

struct TrainingSample {
  Tensor under;
  Tensor over;
  Tensor label;
};

struct TrainOptions {
  int steps = 0;
  std::uint64_t seed = 0;
  int batch_size = 20;
  AdamHyper hyper;
  /// When set, the loss is L_perceptual + L_mse; otherwise MSE only.
  const FeatureExtractor* perceptual = nullptr;
  int threads = 1;
};

struct LossPoint {
  int step = 0;
  LossReport loss;
};

struct TrainResult {
  WeightStore weights;
  std::vector<LossPoint> curve;  // batch loss before each update
  LossReport final_loss;         // whole dataset, after the last update
};

TrainResult train_toy(const ModelGraph& graph, WeightStore weights,
                      const std::vector<TrainingSample>& dataset, const TrainOptions& options);

/// Dataset-mean loss at the given weights.
LossReport evaluate_loss(const ModelGraph& graph, const WeightStore& w,
                         const std::vector<TrainingSample>& dataset,
                         const FeatureExtractor* perceptual = nullptr);

/// "step,l_mse,l_perceptual,l_total" header plus one line per point.
std::string loss_curve_csv(const std::vector<LossPoint>& curve);

struct GraphGradCheck {
  double max_rel_error = 0.0;
  int checked = 0;
  /// Draws whose +-epsilon perturbation moved some ReLU input across zero.
  /// The loss is not differentiable there, so they are redrawn.
  int kink_skipped = 0;
};

/// Central-difference check of d loss_mse / d parameter through the whole
/// graph, over `samples` randomly chosen parameter elements. Kink detection
/// needs the double reference, so kFloat32 checks every draw.
GraphGradCheck graph_grad_check(const ModelGraph& graph, const WeightStore& w,
                                const TrainingSample& sample, int samples, std::uint64_t seed,
                                float epsilon = 1e-3f,
                                FdPrecision precision = FdPrecision::kFloat64);

}  // namespace lightfuse
