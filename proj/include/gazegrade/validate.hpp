#pragma once

#include <string>
#include <vector>

#include "gazegrade/types.hpp"

namespace gazegrade {

struct ValidateOptions {
  double max_dropped_fraction = 0.5;
  double max_gap_s = 1.0;
};

struct ValidationReport {
  double dropped_fraction = 0;  // low-confidence rows removed at parse
  double max_gap_s = 0;         // largest inter-sample spacing
  std::vector<std::string> violations;
  bool usable = true;
};

// Report-only quality screen; mirrors the curation step that discards
// low-quality recordings.
inline ValidationReport validate_session(const Session& s, const ValidateOptions& opt = {}) {
  ValidationReport report;
  report.dropped_fraction = s.ingest.dropped_fraction();

  const auto& samples = s.track.samples;
  for (std::size_t i = 1; i < samples.size(); ++i)
    report.max_gap_s = std::max(report.max_gap_s, samples[i].t - samples[i - 1].t);

  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& ev = s.events[i];
    if (!(ev.shown_at < ev.initial_decision_at && ev.initial_decision_at <= ev.final_decision_at))
      report.violations.push_back("image '" + ev.image_id + "': decision timestamps out of order");
    if (i > 0 && ev.shown_at < s.events[i - 1].shown_at)
      report.violations.push_back("image '" + ev.image_id + "': events not ordered by shown_at");
    if (!samples.empty() &&
        (ev.shown_at < samples.front().t - 1e-9 || ev.final_decision_at > samples.back().t + 1e-9))
      report.violations.push_back("image '" + ev.image_id + "': time span not covered by gaze track");
  }
  if (samples.empty() && !s.events.empty())
    report.violations.push_back("session has events but an empty gaze track");

  report.usable = report.dropped_fraction <= opt.max_dropped_fraction &&
                  report.max_gap_s <= opt.max_gap_s;
  return report;
}

}  // namespace gazegrade
