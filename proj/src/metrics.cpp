// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "lightfuse/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace lightfuse {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

void check_dims(const Image8& a, const Image8& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError(std::string(what) + ": image dims differ (" + std::to_string(a.height) +
                     "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + ")");
  }
}

std::vector<double> gaussian_1d() {
  std::vector<double> g(kWindow);
  double sum = 0.0;
  const int r = kWindow / 2;
  for (int i = 0; i < kWindow; ++i) {
    g[i] = std::exp(-static_cast<double>((i - r) * (i - r)) / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable Gaussian filter of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& g) {
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * plane[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

std::string QualityScore::to_line() const {
  char buf[96];
  if (std::isinf(psnr_db)) {
    std::snprintf(buf, sizeof buf, "psnr=inf ssim=%.3f", ssim);
  } else {
    std::snprintf(buf, sizeof buf, "psnr=%.3f ssim=%.3f", psnr_db, ssim);
  }
  return buf;
}

double psnr(const Image8& a, const Image8& b) {
  check_dims(a, b, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  if (acc == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = acc / static_cast<double>(a.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image8& a, const Image8& b) {
  check_dims(a, b, "ssim");
  if (a.height < kWindow || a.width < kWindow) {
    throw ShapeError("ssim: image " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " is smaller than the 11x11 window");
  }
  const int h = a.height;
  const int w = a.width;
  const auto g = gaussian_1d();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  double channel_sum = 0.0;
  for (int c = 0; c < Image8::kChannels; ++c) {
    std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a.data[i * 3 + c];
      pb[i] = b.data[i * 3 + c];
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, g);
    const auto mu_b = filter_valid(pb, h, w, g);
    const auto e_aa = filter_valid(aa, h, w, g);
    const auto e_bb = filter_valid(bb, h, w, g);
    const auto e_ab = filter_valid(ab, h, w, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      sum += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
    }
    channel_sum += sum / static_cast<double>(mu_a.size());
  }
  return channel_sum / Image8::kChannels;
}

QualityScore score(const Image8& a, const Image8& b) { return {psnr(a, b), ssim(a, b)}; }

std::pair<std::size_t, std::size_t> select_extreme_pair(const std::vector<Image8>& images) {
  if (images.size() < 2) throw std::invalid_argument("select_extreme_pair needs at least 2 images");
  for (const auto& img : images) check_dims(images.front(), img, "select_extreme_pair");
  std::vector<double> means;
  for (const auto& img : images) means.push_back(img.mean());

  std::size_t under = 0;
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (means[i] < means[under]) under = i;
  }
  std::size_t over = under == 0 ? 1 : 0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (i != under && means[i] > means[over]) over = i;
  }
  return {under, over};
}

Image8 crop(const Image8& img, int y, int x, int height, int width) {
  if (y < 0 || x < 0 || height <= 0 || width <= 0 || y + height > img.height ||
      x + width > img.width) {
    throw ShapeError("crop rectangle out of bounds");
  }
  Image8 out(height, width);
  for (int r = 0; r < height; ++r) {
    const auto* src = img.data.data() + (static_cast<std::size_t>(y + r) * img.width + x) * 3;
    std::copy_n(src, static_cast<std::size_t>(width) * 3,
                out.data.begin() + static_cast<std::size_t>(r) * width * 3);
  }
  return out;
}

std::vector<Image8> extract_patches(const Image8& img, int size, int stride) {
  if (size <= 0 || stride <= 0) throw std::invalid_argument("patch size and stride must be positive");
  if (img.height < size || img.width < size) {
    throw ShapeError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                     " is smaller than patch size " + std::to_string(size));
  }
  std::vector<Image8> patches;
  for (int y = 0; y + size <= img.height; y += stride) {
    for (int x = 0; x + size <= img.width; x += stride) {
      patches.push_back(crop(img, y, x, size, size));
    }
  }
  return patches;
}

}  // namespace lightfuse
