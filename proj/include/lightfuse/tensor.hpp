// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lightfuse {

/// Raised when tensor shapes or channel counts do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Dense rank-3 tensor in interleaved (height, width, channel) order. The
/// engine runs on float; double is used as a reference in gradient checks.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(int height, int width, int channels, T fill = T{})
      : shape_{height, width, channels} {
    check_dims();
    data_.assign(shape_.size(), fill);
  }
  BasicTensor(int height, int width, int channels, std::vector<T> data)
      : shape_{height, width, channels}, data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }
  explicit BasicTensor(Shape shape, T fill = T{})
      : BasicTensor(shape.height, shape.width, shape.channels, fill) {}

  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(shape_.channels) +
           static_cast<std::size_t>(c);
  }
  T& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  T at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  /// Channel vector of one pixel.
  std::span<T> pixel(int y, int x) {
    return {data_.data() + index(y, x, 0), static_cast<std::size_t>(shape_.channels)};
  }
  std::span<const T> pixel(int y, int x) const {
    return {data_.data() + index(y, x, 0), static_cast<std::size_t>(shape_.channels)};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }
  bool operator==(const BasicTensor&) const = default;

 private:
  void check_dims() const {
    if (shape_.height <= 0 || shape_.width <= 0 || shape_.channels <= 0) {
      throw ShapeError("tensor dimensions must be positive, got " + to_string(shape_));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  auto src = t.data();
  return BasicTensor<To>(t.height(), t.width(), t.channels(), std::vector<To>(src.begin(), src.end()));
}

/// 8-bit interleaved RGB image.
struct Image8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  static constexpr int kChannels = 3;

  Image8() = default;
  Image8(int h, int w, std::uint8_t fill = 0);
  Image8(int h, int w, std::vector<std::uint8_t> pixels);

  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  double mean() const;

  bool operator==(const Image8&) const = default;
};

/// Maps 8-bit levels onto [-1, 1] via v / 127.5 - 1.
Tensor normalize(const Image8& img);

/// Inverse of normalize: round(clamp(x, -1, 1) * 127.5 + 127.5), halves away from zero.
Image8 denormalize(const Tensor& t);

/// Concatenates two tensors of equal spatial size along the channel axis.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& first, const BasicTensor<T>& second);

/// Copies the channel range [begin, begin + count).
Tensor slice_channels(const Tensor& t, int begin, int count);

}  // namespace lightfuse
