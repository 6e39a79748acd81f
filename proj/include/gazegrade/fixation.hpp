#pragma once

#include <algorithm>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade {

// Dispersion-threshold (I-DT) detection. Dispersion is the classic
// (max x - min x) + (max y - min y) over the candidate window, in
// normalized screen units.
struct IdtParams {
  double dispersion_threshold = 0.05;
  double min_duration_ms = 80.0;
  double max_duration_ms = 4000.0;

  void validate() const {
    if (!(dispersion_threshold > 0 && dispersion_threshold < 1))
      fail(ErrorCategory::config, "dispersion_threshold must be in (0,1)");
    if (!(min_duration_ms > 0 && min_duration_ms <= max_duration_ms))
      fail(ErrorCategory::config, "require 0 < min_duration_ms <= max_duration_ms");
  }
};

namespace detail {

struct Extent {
  double min_x, max_x, min_y, max_y;
  void init(const GazeSample& s) { min_x = max_x = s.x; min_y = max_y = s.y; }
  void add(const GazeSample& s) {
    min_x = std::min(min_x, s.x);
    max_x = std::max(max_x, s.x);
    min_y = std::min(min_y, s.y);
    max_y = std::max(max_y, s.y);
  }
  double dispersion() const { return (max_x - min_x) + (max_y - min_y); }
};

}  // namespace detail

// I-DT over a time-sorted track. A window is seeded with the samples that
// cover min_duration, grown while dispersion stays under the threshold, and
// closed early once the next sample would push the span past max_duration —
// an over-long dwell therefore splits instead of being discarded.
inline std::vector<Fixation> detect_fixations(const GazeTrack& track,
                                              const IdtParams& params = {}) {
  params.validate();
  const auto& s = track.samples;
  std::vector<Fixation> out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    // seed: smallest j with span(i..j) >= min duration
    std::size_t j = i;
    while (j < n && (s[j].t - s[i].t) * 1000.0 < params.min_duration_ms) ++j;
    if (j == n) break;  // remaining tail cannot reach the minimum duration

    detail::Extent ext;
    ext.init(s[i]);
    for (std::size_t k = i + 1; k <= j; ++k) ext.add(s[k]);
    if (ext.dispersion() > params.dispersion_threshold) {
      ++i;
      continue;
    }

    while (j + 1 < n && (s[j + 1].t - s[i].t) * 1000.0 <= params.max_duration_ms) {
      detail::Extent grown = ext;
      grown.add(s[j + 1]);
      if (grown.dispersion() > params.dispersion_threshold) break;
      ext = grown;
      ++j;
    }

    Fixation f;
    f.start = s[i].t;
    f.duration_ms = (s[j].t - s[i].t) * 1000.0;
    f.sample_count = static_cast<int>(j - i + 1);
    double sx = 0, sy = 0;
    for (std::size_t k = i; k <= j; ++k) {
      sx += s[k].x;
      sy += s[k].y;
    }
    f.centroid_x = sx / f.sample_count;
    f.centroid_y = sy / f.sample_count;
    out.push_back(f);
    i = j + 1;
  }
  return out;
}

}  // namespace gazegrade
