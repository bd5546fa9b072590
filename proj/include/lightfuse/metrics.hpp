// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lightfuse/tensor.hpp"

namespace lightfuse {

/// psnr_db is +infinity for identical images.
struct QualityScore {
  double psnr_db = 0.0;
  double ssim = 0.0;

  /// "psnr=<value|inf> ssim=<value>", three decimals.
  std::string to_line() const;
};

/// 10 * log10(255^2 / MSE) over all interleaved 8-bit values.
double psnr(const Image8& a, const Image8& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1 = (0.01*255)^2,
/// C2 = (0.03*255)^2, valid windows only, mean over windows then channels.
double ssim(const Image8& a, const Image8& b);

QualityScore score(const Image8& a, const Image8& b);

/// (darkest, brightest) by mean pixel value. The darkest is the first minimum;
/// the brightest is the first maximum among the remaining indices.
std::pair<std::size_t, std::size_t> select_extreme_pair(const std::vector<Image8>& images);

/// Non-overlapping size x size crops on a stride grid from the top-left;
/// borders narrower than `size` are dropped.
std::vector<Image8> extract_patches(const Image8& img, int size = 256, int stride = 256);

/// Crop of an arbitrary rectangle.
Image8 crop(const Image8& img, int y, int x, int height, int width);

}  // namespace lightfuse
