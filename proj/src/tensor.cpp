// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lightfuse {

std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

Image8::Image8(int h, int w, std::uint8_t fill) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw ShapeError("image dimensions must be positive");
  data.assign(static_cast<std::size_t>(h) * w * kChannels, fill);
}

Image8::Image8(int h, int w, std::vector<std::uint8_t> pixels)
    : height(h), width(w), data(std::move(pixels)) {
  if (h <= 0 || w <= 0) throw ShapeError("image dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(h) * w * kChannels) {
    throw ShapeError("image payload length does not match " + std::to_string(h) + "x" +
                     std::to_string(w) + "x3");
  }
}

double Image8::mean() const {
  if (data.empty()) return 0.0;
  const std::uint64_t sum = std::accumulate(data.begin(), data.end(), std::uint64_t{0});
  return static_cast<double>(sum) / static_cast<double>(data.size());
}

Tensor normalize(const Image8& img) {
  Tensor t(img.height, img.width, Image8::kChannels);
  auto out = t.data();
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out[i] = static_cast<float>(img.data[i]) / 127.5f - 1.0f;
  }
  return t;
}

Image8 denormalize(const Tensor& t) {
  if (t.channels() != Image8::kChannels) {
    throw ShapeError("denormalize expects 3 channels, got " + std::to_string(t.channels()));
  }
  Image8 img(t.height(), t.width());
  auto in = t.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    // std::round rounds halves away from zero.
    const float scaled = std::clamp(in[i], -1.0f, 1.0f) * 127.5f + 127.5f;
    img.data[i] = static_cast<std::uint8_t>(std::round(scaled));
  }
  return img;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& first, const BasicTensor<T>& second) {
  if (first.height() != second.height() || first.width() != second.width()) {
    throw ShapeError("concat_channels: spatial mismatch " + to_string(first.shape()) + " vs " +
                     to_string(second.shape()));
  }
  const int c1 = first.channels();
  const int c2 = second.channels();
  BasicTensor<T> out(first.height(), first.width(), c1 + c2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      auto dst = out.pixel(y, x);
      std::copy_n(first.pixel(y, x).begin(), c1, dst.begin());
      std::copy_n(second.pixel(y, x).begin(), c2, dst.begin() + c1);
    }
  }
  return out;
}

template Tensor concat_channels(const Tensor&, const Tensor&);
template Tensor64 concat_channels(const Tensor64&, const Tensor64&);

Tensor slice_channels(const Tensor& t, int begin, int count) {
  if (begin < 0 || count <= 0 || begin + count > t.channels()) {
    throw ShapeError("slice_channels: range out of bounds for " + to_string(t.shape()));
  }
  Tensor out(t.height(), t.width(), count);
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      std::copy_n(t.pixel(y, x).begin() + begin, count, out.pixel(y, x).begin());
    }
  }
  return out;
}

}  // namespace lightfuse
