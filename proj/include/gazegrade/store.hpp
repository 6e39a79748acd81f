#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "gazegrade/io.hpp"
#include "gazegrade/types.hpp"
#include "gazegrade/validate.hpp"

namespace gazegrade {

// Assigns each event its raw-gaze pointer. Names derive from participant and
// image ids only, so a rewrite of the same cohort is byte-identical.
inline void assign_gaze_pointers(Session& s) {
  for (auto& ev : s.events)
    ev.gaze_csv = "gaze/" + s.participant_id + "_" + ev.image_id + ".csv";
}

// Writes manifests, per-image gaze CSVs, and store.json; the usable flag in
// the index comes from the quality screen.
inline StoreIndex write_session_store(const std::filesystem::path& dir,
                                      std::span<Session> sessions,
                                      const ValidateOptions& vopt = {}) {
  std::filesystem::create_directories(dir);
  StoreIndex index;
  for (auto& s : sessions) {
    assign_gaze_pointers(s);
    write_session(dir, s);
    ValidationReport report = validate_session(s, vopt);
    StoreEntry e;
    e.participant_id = s.participant_id;
    e.label = s.label;
    e.manifest = s.participant_id + ".json";
    e.duration_s = s.duration();
    e.n_events = s.events.size();
    e.usable = report.usable;
    index.sessions.push_back(std::move(e));
  }
  std::sort(index.sessions.begin(), index.sessions.end(),
            [](const StoreEntry& a, const StoreEntry& b) {
              return a.participant_id < b.participant_id;
            });
  write_store_index(dir, index);
  return index;
}

}  // namespace gazegrade
