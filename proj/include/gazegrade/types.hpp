#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"

namespace gazegrade {

enum class Label { NonExpert = 0, Expert = 1 };

inline const char* to_string(Label l) {
  return l == Label::Expert ? "Expert" : "NonExpert";
}

inline Label label_from_string(const std::string& s) {
  if (s == "Expert") return Label::Expert;
  if (s == "NonExpert" || s == "Non-Expert") return Label::NonExpert;
  fail(ErrorCategory::parse, "unknown expertise label '" + s + "'");
}

struct GazeSample {
  double t = 0;           // seconds from session start
  double x = 0;           // normalized [0,1]
  double y = 0;           // normalized [0,1]
  double confidence = 1;  // [0,1]
};

struct GazeTrack {
  std::vector<GazeSample> samples;  // strictly increasing in t
  double nominal_rate = 200.0;      // samples/second

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  // Session time is measured from 0, so the last timestamp is the duration.
  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct Fixation {
  double start = 0;        // seconds
  double duration_ms = 0;  // within [min,max] duration bounds by construction
  double centroid_x = 0;
  double centroid_y = 0;
  int sample_count = 0;

  double end() const { return start + duration_ms / 1000.0; }
};

struct ImageEvent {
  std::string image_id;
  double shown_at = 0;
  double initial_decision_at = 0;  // shown_at < initial <= final
  double final_decision_at = 0;
  std::string initial_decision;  // "Normal" | "Abnormal"
  std::string final_decision;
  std::string ground_truth;  // anomaly-type label
  std::string gaze_csv;      // raw-gaze pointer, file name relative to store
};

// Bookkeeping from CSV ingestion, aggregated per session for validation.
struct ParseStats {
  std::size_t rows_total = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped_confidence = 0;
  std::size_t rows_collapsed = 0;  // duplicate timestamps, first kept
  std::size_t rows_clamped = 0;    // had x or y outside [0,1]

  double dropped_fraction() const {
    return rows_total == 0
               ? 0.0
               : static_cast<double>(rows_dropped_confidence) / rows_total;
  }

  void accumulate(const ParseStats& o) {
    rows_total += o.rows_total;
    rows_kept += o.rows_kept;
    rows_dropped_confidence += o.rows_dropped_confidence;
    rows_collapsed += o.rows_collapsed;
    rows_clamped += o.rows_clamped;
  }
};

struct Session {
  std::string participant_id;
  Label label = Label::NonExpert;
  GazeTrack track;
  std::vector<ImageEvent> events;  // ordered by shown_at
  ParseStats ingest;

  double duration() const { return track.duration(); }
};

}  // namespace gazegrade
