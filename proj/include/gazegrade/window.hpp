#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade {

// Half-stride sliding window: start = index * size/2, only spans fully
// inside the session.
struct WindowSpan {
  int index = 0;
  double start = 0;  // seconds
  double size = 0;   // seconds

  double end() const { return start + size; }
};

enum class PhaseTag { InitialOnly, Mixed };

inline const char* to_string(PhaseTag t) {
  return t == PhaseTag::InitialOnly ? "InitialOnly" : "Mixed";
}

struct WindowData {
  WindowSpan span;
  GazeTrack gaze;                   // samples with t in [start, end)
  std::vector<Fixation> fixations;  // membership by fixation start time
  Label label = Label::NonExpert;
  PhaseTag phase_tag = PhaseTag::Mixed;
};

inline std::vector<WindowSpan> generate_windows(double duration, double size) {
  if (!(size > 0)) fail(ErrorCategory::config, "window size must be > 0");
  std::vector<WindowSpan> spans;
  if (duration < size) return spans;
  const double stride = size / 2.0;
  int count = static_cast<int>(std::floor((duration - size) / stride)) + 1;
  while (count > 0 && (count - 1) * stride + size > duration) --count;  // float guard
  spans.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) spans.push_back({k, k * stride, size});
  return spans;
}

// Merged union of per-image [shown_at, initial_decision_at) intervals.
inline std::vector<std::pair<double, double>> initial_phase_intervals(const Session& s) {
  std::vector<std::pair<double, double>> iv;
  for (const auto& ev : s.events) iv.emplace_back(ev.shown_at, ev.initial_decision_at);
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& [a, b] : iv) {
    if (!merged.empty() && a <= merged.back().second)
      merged.back().second = std::max(merged.back().second, b);
    else
      merged.emplace_back(a, b);
  }
  return merged;
}

inline bool span_in_intervals(const WindowSpan& span,
                              const std::vector<std::pair<double, double>>& merged) {
  for (const auto& [a, b] : merged)
    if (span.start >= a && span.end() <= b) return true;
  return false;
}

inline WindowData slice_window(const Session& session, const WindowSpan& span,
                               const std::vector<Fixation>& fixations) {
  WindowData w;
  w.span = span;
  w.label = session.label;
  w.gaze.nominal_rate = session.track.nominal_rate;

  const auto& samples = session.track.samples;
  auto lo = std::lower_bound(samples.begin(), samples.end(), span.start,
                             [](const GazeSample& s, double t) { return s.t < t; });
  auto hi = std::lower_bound(lo, samples.end(), span.end(),
                             [](const GazeSample& s, double t) { return s.t < t; });
  w.gaze.samples.assign(lo, hi);

  // A fixation straddling the right boundary belongs to the window holding
  // its start, so windowed AFD counts each duration exactly once.
  for (const auto& f : fixations)
    if (f.start >= span.start && f.start < span.end()) w.fixations.push_back(f);

  w.phase_tag = span_in_intervals(span, initial_phase_intervals(session))
                    ? PhaseTag::InitialOnly
                    : PhaseTag::Mixed;
  return w;
}

// Keep spans fully contained in the initial-decision phase of some image.
inline std::vector<WindowSpan> filter_initial_phase(const Session& session,
                                                    const std::vector<WindowSpan>& spans) {
  auto merged = initial_phase_intervals(session);
  std::vector<WindowSpan> kept;
  for (const auto& span : spans)
    if (span_in_intervals(span, merged)) kept.push_back(span);
  return kept;
}

}  // namespace gazegrade
