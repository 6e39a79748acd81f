#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/types.hpp"
#include "gazegrade/window.hpp"

namespace gazegrade {

// Classifier input for one window: fixed-length 2-channel gaze sequence
// (channel 0 = x, channel 1 = y, stored x-block then y-block) plus the three
// scalar streams.
struct WindowFeatures {
  std::vector<double> gaze_seq;  // 2 * seq_len
  int seq_len = 0;
  double afd_ms = 0;
  double fc = 0;  // integer-valued count
  double aed = 0;
  Label label = Label::NonExpert;
  PhaseTag phase_tag = PhaseTag::Mixed;
  bool empty_gaze = false;  // slice had no samples; sequence held at (0.5, 0.5)
  int window_index = 0;
  double window_start_s = 0;
  std::string participant_id;
};

inline double average_fixation_duration(std::span<const Fixation> fixations) {
  if (fixations.empty()) return 0.0;
  double sum = 0;
  for (const auto& f : fixations) sum += f.duration_ms;
  return sum / static_cast<double>(fixations.size());
}

inline std::size_t fixation_count(std::span<const Fixation> fixations) {
  return fixations.size();
}

// Mean distance between consecutive centroids — a saccade-amplitude proxy.
inline double average_euclidean_distance(std::span<const Fixation> fixations) {
  if (fixations.size() < 2) return 0.0;
  double sum = 0;
  for (std::size_t i = 1; i < fixations.size(); ++i) {
    double dx = fixations[i].centroid_x - fixations[i - 1].centroid_x;
    double dy = fixations[i].centroid_y - fixations[i - 1].centroid_y;
    sum += std::hypot(dx, dy);
  }
  return sum / static_cast<double>(fixations.size() - 1);
}

// Raw ratio, ms per fixation. Table-style [0,1] presentation is a separate
// per-session min-max rescale used only for dataset export.
inline double gaze_relational_index(double afd_ms, double fc) {
  return fc > 0 ? afd_ms / fc : 0.0;
}

inline std::vector<double> min_max_rescale(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(out.begin(), out.end());
  double lo = *lo_it, hi = *hi_it;
  for (auto& v : out) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
  return out;
}

// Piecewise-linear resampling of x(t), y(t) onto L uniform timestamps
// t0 + i*duration/L. Outside the sampled range the boundary value is held.
// An empty slice produces a constant (0.5, 0.5) sequence and sets *empty.
inline void resample_gaze(const GazeTrack& slice, double t0, double duration, int L,
                          std::vector<double>& out, bool* empty = nullptr) {
  if (L < 2) fail(ErrorCategory::config, "resample target length must be >= 2");
  out.assign(static_cast<std::size_t>(2 * L), 0.5);
  if (empty) *empty = slice.samples.empty();
  if (slice.samples.empty()) return;

  const auto& s = slice.samples;
  const double step = duration / L;
  std::size_t seg = 0;  // s[seg] <= t < s[seg+1] maintained by the sweep
  for (int i = 0; i < L; ++i) {
    double t = t0 + i * step;
    double x, y;
    if (t <= s.front().t) {
      x = s.front().x;
      y = s.front().y;
    } else if (t >= s.back().t) {
      x = s.back().x;
      y = s.back().y;
    } else {
      while (seg + 2 < s.size() && s[seg + 1].t <= t) ++seg;
      double t_a = s[seg].t, t_b = s[seg + 1].t;
      double w = (t - t_a) / (t_b - t_a);
      x = s[seg].x + w * (s[seg + 1].x - s[seg].x);
      y = s[seg].y + w * (s[seg + 1].y - s[seg].y);
    }
    out[static_cast<std::size_t>(i)] = x;
    out[static_cast<std::size_t>(L + i)] = y;
  }
}

inline WindowFeatures extract_window_features(const WindowData& w, double nominal_rate) {
  WindowFeatures f;
  f.seq_len = static_cast<int>(std::llround(nominal_rate * w.span.size));
  f.afd_ms = average_fixation_duration(w.fixations);
  f.fc = static_cast<double>(fixation_count(w.fixations));
  f.aed = average_euclidean_distance(w.fixations);
  f.label = w.label;
  f.phase_tag = w.phase_tag;
  f.window_index = w.span.index;
  f.window_start_s = w.span.start;
  resample_gaze(w.gaze, w.span.start, w.span.size, f.seq_len, f.gaze_seq, &f.empty_gaze);
  return f;
}

// z-score parameters for the scalar streams, fit on training data only.
struct FeatureStats {
  struct Moments {
    double mean = 0;
    double std = 1;
    bool constant = false;
  };
  Moments afd, fc, aed;

  double z(const Moments& m, double v) const {
    return m.constant ? 0.0 : (v - m.mean) / m.std;
  }
};

namespace detail {

inline FeatureStats::Moments fit_moments(std::span<const double> v) {
  FeatureStats::Moments m;
  double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  double var = 0;
  for (double x : v) var += (x - m.mean) * (x - m.mean);
  var /= n;  // population variance
  if (var <= 0) {
    m.constant = true;
    m.std = 1;
  } else {
    m.std = std::sqrt(var);
  }
  return m;
}

}  // namespace detail

inline FeatureStats fit_normalizer(std::span<const WindowFeatures> train) {
  if (train.empty()) fail(ErrorCategory::config, "fit_normalizer: empty training set");
  std::vector<double> a, b, c;
  a.reserve(train.size());
  b.reserve(train.size());
  c.reserve(train.size());
  for (const auto& f : train) {
    a.push_back(f.afd_ms);
    b.push_back(f.fc);
    c.push_back(f.aed);
  }
  FeatureStats stats;
  stats.afd = detail::fit_moments(a);
  stats.fc = detail::fit_moments(b);
  stats.aed = detail::fit_moments(c);
  return stats;
}

// Scalars z-scored; the gaze sequence stays in [0,1].
inline WindowFeatures apply_normalizer(const FeatureStats& stats, WindowFeatures f) {
  f.afd_ms = stats.z(stats.afd, f.afd_ms);
  f.fc = stats.z(stats.fc, f.fc);
  f.aed = stats.z(stats.aed, f.aed);
  return f;
}

inline void apply_normalizer_in_place(const FeatureStats& stats,
                                      std::vector<WindowFeatures>& fs) {
  for (auto& f : fs) f = apply_normalizer(stats, std::move(f));
}

// Per-image granularity: features over each image's full viewing span,
// fixation membership by start time.
struct ImageFeatures {
  std::string image_id;
  double afd_ms = 0;
  double fc = 0;
  double aed = 0;
  double gri = 0;
  Label label = Label::NonExpert;
};

inline std::vector<ImageFeatures> extract_image_features(const Session& s,
                                                         std::span<const Fixation> fixations) {
  std::vector<ImageFeatures> out;
  for (const auto& ev : s.events) {
    std::vector<Fixation> member;
    for (const auto& f : fixations)
      if (f.start >= ev.shown_at && f.start < ev.final_decision_at) member.push_back(f);
    ImageFeatures img;
    img.image_id = ev.image_id;
    img.afd_ms = average_fixation_duration(member);
    img.fc = static_cast<double>(member.size());
    img.aed = average_euclidean_distance(member);
    img.gri = gaze_relational_index(img.afd_ms, img.fc);
    img.label = s.label;
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace gazegrade
