// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/ops.hpp"

#include <cmath>

namespace lightfuse {

void DepthwiseKernel::validate() const {
  if (k <= 0 || k % 2 == 0) {
    throw ShapeError("depthwise kernel size must be odd, got " + std::to_string(k));
  }
  if (stride != 1 && stride != 2) {
    throw ShapeError("depthwise stride must be 1 or 2, got " + std::to_string(stride));
  }
  if (channels <= 0) throw ShapeError("depthwise kernel needs at least one channel");
  if (weights.size() != static_cast<std::size_t>(k * k * channels)) {
    throw ShapeError("depthwise weights length " + std::to_string(weights.size()) +
                     " != k*k*channels = " + std::to_string(k * k * channels));
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(channels)) {
    throw ShapeError("depthwise bias length " + std::to_string(bias.size()) +
                     " != channels = " + std::to_string(channels));
  }
}

void PointwiseKernel::validate() const {
  if (in_channels <= 0 || out_channels <= 0) {
    throw ShapeError("pointwise kernel channel counts must be positive");
  }
  if (weights.size() != static_cast<std::size_t>(in_channels * out_channels)) {
    throw ShapeError("pointwise weights length " + std::to_string(weights.size()) +
                     " != in*out = " + std::to_string(in_channels * out_channels));
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ShapeError("pointwise bias length " + std::to_string(bias.size()) +
                     " != out_channels = " + std::to_string(out_channels));
  }
}

Shape depthwise_output_shape(const Shape& in, const DepthwiseKernel& k) {
  return {(in.height + k.stride - 1) / k.stride, (in.width + k.stride - 1) / k.stride,
          in.channels};
}

namespace {

void check_depthwise_input(const Shape& in, const DepthwiseKernel& k) {
  k.validate();
  if (in.channels != k.channels) {
    throw ShapeError("depthwise: input has " + std::to_string(in.channels) +
                     " channels, kernel expects " + std::to_string(k.channels));
  }
  if (k.stride == 2 && (in.height % 2 != 0 || in.width % 2 != 0)) {
    throw ShapeError("depthwise: stride 2 needs even spatial dims, got " + to_string(in));
  }
}

template <typename T>
void check_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> depthwise_forward(const BasicTensor<T>& x, const DepthwiseKernel& k) {
  check_depthwise_input(x.shape(), k);
  const Shape os = depthwise_output_shape(x.shape(), k);
  const int pad = (k.k - 1) / 2;
  const int C = k.channels;
  BasicTensor<T> out(os);
  std::vector<T> acc(C);
  for (int i = 0; i < os.height; ++i) {
    for (int j = 0; j < os.width; ++j) {
      std::fill(acc.begin(), acc.end(), T{0});
      for (int u = 0; u < k.k; ++u) {
        const int y = i * k.stride + u - pad;
        if (y < 0 || y >= x.height()) continue;
        for (int v = 0; v < k.k; ++v) {
          const int xx = j * k.stride + v - pad;
          if (xx < 0 || xx >= x.width()) continue;
          const T* px = x.pixel(y, xx).data();
          const float* w = k.weights.data() + (u * k.k + v) * C;
          for (int c = 0; c < C; ++c) acc[c] += w[c] * px[c];
        }
      }
      auto dst = out.pixel(i, j);
      for (int c = 0; c < C; ++c) dst[c] = k.bias.empty() ? acc[c] : acc[c] + k.bias[c];
    }
  }
  return out;
}

DepthwiseGrads depthwise_backward(const Tensor& x, const DepthwiseKernel& k,
                                  const Tensor& upstream) {
  check_depthwise_input(x.shape(), k);
  const Shape os = depthwise_output_shape(x.shape(), k);
  if (upstream.shape() != os) {
    throw ShapeError("depthwise_backward: upstream " + to_string(upstream.shape()) +
                     " != output " + to_string(os));
  }
  const int pad = (k.k - 1) / 2;
  const int C = k.channels;
  DepthwiseGrads g{Tensor(x.shape()), std::vector<float>(k.weights.size(), 0.0f),
                   std::vector<float>(k.bias.size(), 0.0f)};
  for (int i = 0; i < os.height; ++i) {
    for (int j = 0; j < os.width; ++j) {
      const float* up = upstream.pixel(i, j).data();
      for (int u = 0; u < k.k; ++u) {
        const int y = i * k.stride + u - pad;
        if (y < 0 || y >= x.height()) continue;
        for (int v = 0; v < k.k; ++v) {
          const int xx = j * k.stride + v - pad;
          if (xx < 0 || xx >= x.width()) continue;
          const float* px = x.pixel(y, xx).data();
          float* dx = g.input.pixel(y, xx).data();
          const std::size_t base = static_cast<std::size_t>(u * k.k + v) * C;
          for (int c = 0; c < C; ++c) {
            dx[c] += k.weights[base + c] * up[c];
            g.weights[base + c] += px[c] * up[c];
          }
        }
      }
      for (std::size_t c = 0; c < g.bias.size(); ++c) g.bias[c] += up[c];
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> pointwise_forward(const BasicTensor<T>& x, const PointwiseKernel& k) {
  k.validate();
  if (x.channels() != k.in_channels) {
    throw ShapeError("pointwise: input has " + std::to_string(x.channels()) +
                     " channels, kernel expects " + std::to_string(k.in_channels));
  }
  BasicTensor<T> out(x.height(), x.width(), k.out_channels);
  const std::size_t pixels = static_cast<std::size_t>(x.height()) * x.width();
  const T* in = x.data().data();
  T* dst = out.data().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    pointwise_pixel(in + p * k.in_channels, k, dst + p * k.out_channels);
  }
  return out;
}

PointwiseGrads pointwise_backward(const Tensor& x, const PointwiseKernel& k,
                                  const Tensor& upstream) {
  k.validate();
  if (x.channels() != k.in_channels || upstream.channels() != k.out_channels ||
      upstream.height() != x.height() || upstream.width() != x.width()) {
    throw ShapeError("pointwise_backward: input " + to_string(x.shape()) + " / upstream " +
                     to_string(upstream.shape()) + " inconsistent with kernel");
  }
  const int M = k.in_channels;
  const int N = k.out_channels;
  PointwiseGrads g{Tensor(x.shape()), std::vector<float>(k.weights.size(), 0.0f),
                   std::vector<float>(k.bias.size(), 0.0f)};
  const std::size_t pixels = static_cast<std::size_t>(x.height()) * x.width();
  const float* in = x.data().data();
  const float* up = upstream.data().data();
  float* dx = g.input.data().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    const float* xp = in + p * M;
    const float* gp = up + p * N;
    float* dxp = dx + p * M;
    for (int m = 0; m < M; ++m) {
      const float* wrow = k.weights.data() + static_cast<std::size_t>(m) * N;
      float* dwrow = g.weights.data() + static_cast<std::size_t>(m) * N;
      float s = 0.0f;
      for (int n = 0; n < N; ++n) {
        s += wrow[n] * gp[n];
        dwrow[n] += xp[m] * gp[n];
      }
      dxp[m] = s;
    }
    for (std::size_t n = 0; n < g.bias.size(); ++n) g.bias[n] += gp[n];
  }
  return g;
}

template <typename T>
BasicTensor<T> upsample_nn(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.height() * 2, x.width() * 2, x.channels());
  for (int i = 0; i < out.height(); ++i) {
    for (int j = 0; j < out.width(); ++j) {
      auto src = x.pixel(i / 2, j / 2);
      std::copy(src.begin(), src.end(), out.pixel(i, j).begin());
    }
  }
  return out;
}

Tensor upsample_nn_backward(const Tensor& x, const Tensor& upstream) {
  if (upstream.height() != 2 * x.height() || upstream.width() != 2 * x.width() ||
      upstream.channels() != x.channels()) {
    throw ShapeError("upsample_backward: upstream " + to_string(upstream.shape()) +
                     " is not 2x of input " + to_string(x.shape()));
  }
  Tensor g(x.shape());
  for (int i = 0; i < upstream.height(); ++i) {
    for (int j = 0; j < upstream.width(); ++j) {
      auto src = upstream.pixel(i, j);
      auto dst = g.pixel(i / 2, j / 2);
      for (int c = 0; c < x.channels(); ++c) dst[c] += src[c];
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  auto in = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = relu_value(in[i]);
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& upstream) {
  check_same_shape(x, upstream, "relu_backward");
  Tensor g(x.shape());
  auto in = x.data();
  auto up = upstream.data();
  auto dst = g.data();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = in[i] > 0.0f ? up[i] : 0.0f;
  return g;
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  auto in = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = std::tanh(in[i]);
  return out;
}

Tensor tanh_backward(const Tensor& y, const Tensor& upstream) {
  check_same_shape(y, upstream, "tanh_backward");
  Tensor g(y.shape());
  auto out = y.data();
  auto up = upstream.data();
  auto dst = g.data();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = up[i] * (1.0f - out[i] * out[i]);
  return g;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  check_same_shape(a, b, "add");
  BasicTensor<T> out(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) dst[i] = pa[i] + pb[i];
  return out;
}

#define LIGHTFUSE_INSTANTIATE_FORWARD(T)                                               \
  template BasicTensor<T> depthwise_forward(const BasicTensor<T>&, const DepthwiseKernel&); \
  template BasicTensor<T> pointwise_forward(const BasicTensor<T>&, const PointwiseKernel&); \
  template BasicTensor<T> upsample_nn(const BasicTensor<T>&);                             \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                    \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                    \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);

LIGHTFUSE_INSTANTIATE_FORWARD(float)
LIGHTFUSE_INSTANTIATE_FORWARD(double)
#undef LIGHTFUSE_INSTANTIATE_FORWARD

OpGrads DepthwiseOp::backward(const Tensor& x, const Tensor& upstream) const {
  auto g = depthwise_backward(x, k_, upstream);
  OpGrads out{std::move(g.input), {std::move(g.weights)}};
  if (!k_.bias.empty()) out.params.push_back(std::move(g.bias));
  return out;
}

std::vector<std::span<float>> DepthwiseOp::parameters() {
  std::vector<std::span<float>> p{k_.weights};
  if (!k_.bias.empty()) p.emplace_back(k_.bias);
  return p;
}

OpGrads PointwiseOp::backward(const Tensor& x, const Tensor& upstream) const {
  auto g = pointwise_backward(x, k_, upstream);
  OpGrads out{std::move(g.input), {std::move(g.weights)}};
  if (!k_.bias.empty()) out.params.push_back(std::move(g.bias));
  return out;
}

std::vector<std::span<float>> PointwiseOp::parameters() {
  std::vector<std::span<float>> p{k_.weights};
  if (!k_.bias.empty()) p.emplace_back(k_.bias);
  return p;
}

OpGrads AddOp::backward(const Tensor& x, const Tensor& upstream) const {
  check_same_shape(x, upstream, "add_backward");
  return {upstream, {std::vector<float>(upstream.data().begin(), upstream.data().end())}};
}

}  // namespace lightfuse
