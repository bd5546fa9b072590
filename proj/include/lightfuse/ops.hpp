// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels for every primitive in the fusion graph. These are written
// for clarity, not speed; the tiled executor is checked against them.

#pragma once

#include <span>
#include <vector>

#include "lightfuse/tensor.hpp"

namespace lightfuse {

/// k x k per-channel kernel. Weights are stored (k, k, channels); `bias` is
/// either empty (no bias, as inside a separable conv) or one value per channel.
struct DepthwiseKernel {
  int k = 3;
  int channels = 0;
  int stride = 1;
  std::vector<float> weights;
  std::vector<float> bias;

  float weight(int u, int v, int c) const { return weights[(u * k + v) * channels + c]; }
  void validate() const;
};

/// 1x1 convolution. Weights are stored (in_channels, out_channels).
struct PointwiseKernel {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  void validate() const;
};

/// Per-pixel 1x1 conv: out[n] = (sum over m ascending of in[m] * w[m, n]) + bias[n].
/// Shared by the layer-wise and tiled paths so both accumulate identically.
template <typename T>
inline void pointwise_pixel(const T* in, const PointwiseKernel& k, T* out) {
  const int n_out = k.out_channels;
  const float* w = k.weights.data();
  for (int n = 0; n < n_out; ++n) out[n] = T{0};
  for (int m = 0; m < k.in_channels; ++m) {
    const T xm = in[m];
    const float* row = w + static_cast<std::size_t>(m) * n_out;
    for (int n = 0; n < n_out; ++n) out[n] += xm * row[n];
  }
  if (!k.bias.empty()) {
    for (int n = 0; n < n_out; ++n) out[n] += k.bias[n];
  }
}

template <typename T>
inline T relu_value(T v) { return v > T{0} ? v : T{0}; }

Shape depthwise_output_shape(const Shape& in, const DepthwiseKernel& k);

// Forward ops exist for float (the engine) and double (gradient-check reference).
template <typename T>
BasicTensor<T> depthwise_forward(const BasicTensor<T>& x, const DepthwiseKernel& k);
template <typename T>
BasicTensor<T> pointwise_forward(const BasicTensor<T>& x, const PointwiseKernel& k);
template <typename T>
BasicTensor<T> upsample_nn(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

struct DepthwiseGrads {
  Tensor input;
  std::vector<float> weights;
  std::vector<float> bias;  // empty when the kernel has no bias
};

struct PointwiseGrads {
  Tensor input;
  std::vector<float> weights;
  std::vector<float> bias;
};

DepthwiseGrads depthwise_backward(const Tensor& x, const DepthwiseKernel& k,
                                  const Tensor& upstream);
PointwiseGrads pointwise_backward(const Tensor& x, const PointwiseKernel& k,
                                  const Tensor& upstream);
Tensor upsample_nn_backward(const Tensor& x, const Tensor& upstream);
Tensor relu_backward(const Tensor& x, const Tensor& upstream);
/// Takes the forward *output* y = tanh(x); the derivative is 1 - y^2.
Tensor tanh_backward(const Tensor& y, const Tensor& upstream);

/// Gradients of a unary op instance with respect to its input and each of its
/// parameter buffers (in the order returned by `parameters()`).
struct OpGrads {
  Tensor input;
  std::vector<std::vector<float>> params;
};

/// A differentiable op bound to its parameters. Used for gradient checking.
class Op {
 public:
  virtual ~Op() = default;
  virtual Tensor forward(const Tensor& x) const = 0;
  /// The same function evaluated in double, reading the float parameters.
  virtual Tensor64 forward_reference(const Tensor64& x) const = 0;
  virtual OpGrads backward(const Tensor& x, const Tensor& upstream) const = 0;
  virtual std::vector<std::span<float>> parameters() { return {}; }
};

class DepthwiseOp : public Op {
 public:
  explicit DepthwiseOp(DepthwiseKernel k) : k_(std::move(k)) { k_.validate(); }
  Tensor forward(const Tensor& x) const override { return depthwise_forward(x, k_); }
  Tensor64 forward_reference(const Tensor64& x) const override { return depthwise_forward(x, k_); }
  OpGrads backward(const Tensor& x, const Tensor& upstream) const override;
  std::vector<std::span<float>> parameters() override;

 private:
  DepthwiseKernel k_;
};

class PointwiseOp : public Op {
 public:
  explicit PointwiseOp(PointwiseKernel k) : k_(std::move(k)) { k_.validate(); }
  Tensor forward(const Tensor& x) const override { return pointwise_forward(x, k_); }
  Tensor64 forward_reference(const Tensor64& x) const override { return pointwise_forward(x, k_); }
  OpGrads backward(const Tensor& x, const Tensor& upstream) const override;
  std::vector<std::span<float>> parameters() override;

 private:
  PointwiseKernel k_;
};

class UpsampleOp : public Op {
 public:
  Tensor forward(const Tensor& x) const override { return upsample_nn(x); }
  Tensor64 forward_reference(const Tensor64& x) const override { return upsample_nn(x); }
  OpGrads backward(const Tensor& x, const Tensor& upstream) const override {
    return {upsample_nn_backward(x, upstream), {}};
  }
};

class ReluOp : public Op {
 public:
  Tensor forward(const Tensor& x) const override { return relu(x); }
  Tensor64 forward_reference(const Tensor64& x) const override { return relu(x); }
  OpGrads backward(const Tensor& x, const Tensor& upstream) const override {
    return {relu_backward(x, upstream), {}};
  }
};

class TanhOp : public Op {
 public:
  Tensor forward(const Tensor& x) const override { return lightfuse::tanh(x); }
  Tensor64 forward_reference(const Tensor64& x) const override { return lightfuse::tanh(x); }
  OpGrads backward(const Tensor& x, const Tensor& upstream) const override {
    return {tanh_backward(lightfuse::tanh(x), upstream), {}};
  }
};

/// x + other, where `other` is treated as the op's parameter.
class AddOp : public Op {
 public:
  explicit AddOp(Tensor other) : other_(std::move(other)) {}
  Tensor forward(const Tensor& x) const override { return add(x, other_); }
  Tensor64 forward_reference(const Tensor64& x) const override {
    return add(x, tensor_cast<double>(other_));
  }
  OpGrads backward(const Tensor& x, const Tensor& upstream) const override;
  std::vector<std::span<float>> parameters() override { return {other_.data()}; }

 private:
  Tensor other_;
};

}  // namespace lightfuse
