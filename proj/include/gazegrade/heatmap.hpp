#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade {

// Row-major grayscale grid over the unit square, row 0 at the top (y = 1).
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // width * height

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

struct HeatmapParams {
  int width = 256;
  int height = 256;
  double kernel_sigma_px = 8.0;

  void validate() const {
    if (width < 1 || height < 1) fail(ErrorCategory::config, "heatmap size must be positive");
    if (!(kernel_sigma_px > 0)) fail(ErrorCategory::config, "heatmap sigma must be positive");
  }
};

// One isotropic Gaussian per gaze sample, centered on the sample's pixel,
// rescaled so the grid peak is 1. Empty input yields an all-zero map.
// Implemented as a pixel histogram followed by a separable convolution,
// which equals per-sample accumulation up to summation order.
inline Heatmap render_heatmap(const GazeTrack& gaze, const HeatmapParams& p) {
  p.validate();
  Heatmap hm;
  hm.width = p.width;
  hm.height = p.height;
  hm.values.assign(static_cast<std::size_t>(p.width) * p.height, 0.0);
  if (gaze.samples.empty()) return hm;

  for (const auto& s : gaze.samples) {
    int col = std::clamp(static_cast<int>(s.x * p.width), 0, p.width - 1);
    int row = std::clamp(static_cast<int>((1.0 - s.y) * p.height), 0, p.height - 1);
    hm.at(row, col) += 1.0;
  }

  // Truncated kernel; beyond 4 sigma the tail is below 3.4e-4 of the peak.
  int radius = std::max(1, static_cast<int>(std::ceil(4.0 * p.kernel_sigma_px)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double inv_two_sigma2 = 1.0 / (2.0 * p.kernel_sigma_px * p.kernel_sigma_px);
  for (int k = -radius; k <= radius; ++k)
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-k * k * inv_two_sigma2);

  std::vector<double> tmp(hm.values.size(), 0.0);
  for (int r = 0; r < p.height; ++r)
    for (int c = 0; c < p.width; ++c) {
      double v = hm.at(r, c);
      if (v == 0) continue;
      int lo = std::max(0, c - radius), hi = std::min(p.width - 1, c + radius);
      for (int cc = lo; cc <= hi; ++cc)
        tmp[static_cast<std::size_t>(r) * p.width + cc] +=
            v * kernel[static_cast<std::size_t>(cc - c + radius)];
    }
  std::fill(hm.values.begin(), hm.values.end(), 0.0);
  for (int r = 0; r < p.height; ++r)
    for (int c = 0; c < p.width; ++c) {
      double v = tmp[static_cast<std::size_t>(r) * p.width + c];
      if (v == 0) continue;
      int lo = std::max(0, r - radius), hi = std::min(p.height - 1, r + radius);
      for (int rr = lo; rr <= hi; ++rr)
        hm.at(rr, c) += v * kernel[static_cast<std::size_t>(rr - r + radius)];
    }

  double peak = *std::max_element(hm.values.begin(), hm.values.end());
  if (peak > 0)
    for (auto& v : hm.values) v /= peak;
  return hm;
}

// Binary 8-bit PGM (P5). Values clamped to [0,1] then scaled to 0..255.
inline void write_pgm(std::ostream& os, const Heatmap& hm) {
  os << "P5\n" << hm.width << " " << hm.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(hm.width));
  for (int r = 0; r < hm.height; ++r) {
    for (int c = 0; c < hm.width; ++c) {
      double v = std::clamp(hm.at(r, c), 0.0, 1.0);
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    os.write(reinterpret_cast<const char*>(row.data()), hm.width);
  }
}

inline void write_pgm_file(const std::string& path, const Heatmap& hm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCategory::io, "cannot open for writing: " + path);
  write_pgm(os, hm);
  if (!os) fail(ErrorCategory::io, "write failed: " + path);
}

// Rasterizes a y-series in [0,1] as a dark polyline on a light background,
// for quick visual inspection of per-window score traces and ROC curves.
inline Heatmap render_line_plot(std::span<const double> ys, int width, int height) {
  if (width < 2 || height < 2) fail(ErrorCategory::config, "plot size must be at least 2x2");
  Heatmap hm;
  hm.width = width;
  hm.height = height;
  hm.values.assign(static_cast<std::size_t>(width) * height, 1.0);
  if (ys.empty()) return hm;

  auto to_row = [&](double y) {
    double v = std::clamp(y, 0.0, 1.0);
    return std::clamp(static_cast<int>(std::lround((1.0 - v) * (height - 1))), 0, height - 1);
  };
  auto to_col = [&](std::size_t i) {
    if (ys.size() == 1) return 0;
    return static_cast<int>(std::lround(static_cast<double>(i) * (width - 1) /
                                        static_cast<double>(ys.size() - 1)));
  };

  auto draw = [&](int r0, int c0, int r1, int c1) {
    int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
    int steps = std::max(std::max(dr, dc), 1);
    for (int k = 0; k <= steps; ++k) {
      int r = r0 + (r1 - r0) * k / steps;
      int c = c0 + (c1 - c0) * k / steps;
      hm.at(r, c) = 0.0;
    }
  };

  int prev_r = to_row(ys[0]), prev_c = to_col(0);
  hm.at(prev_r, prev_c) = 0.0;
  for (std::size_t i = 1; i < ys.size(); ++i) {
    int r = to_row(ys[i]), c = to_col(i);
    draw(prev_r, prev_c, r, c);
    prev_r = r;
    prev_c = c;
  }
  // Reference midline at 0.5, drawn lightly where the background is intact.
  int mid = to_row(0.5);
  for (int c = 0; c < width; ++c)
    if (hm.at(mid, c) == 1.0) hm.at(mid, c) = 0.8;
  return hm;
}

}  // namespace gazegrade
