#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gazegrade/error.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// Shortest round-trip decimal form; keeps write->parse idempotent.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

inline void split_line(std::string_view line, char sep, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

}  // namespace detail

struct CsvOptions {
  double confidence_threshold = 0.6;  // rows strictly below are dropped
  double nominal_rate = 200.0;
};

// Gaze CSV layout: header "t,x,y,confidence", one sample per line,
// t in seconds, x/y normalized. Out-of-range coordinates are clamped,
// not dropped; duplicate timestamps keep the first row.
inline GazeTrack parse_gaze_csv(std::istream& in, const CsvOptions& opt = {},
                                ParseStats* stats_out = nullptr) {
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCategory::parse, "empty gaze csv: no header");
  std::vector<std::string_view> cols;
  detail::split_line(line, ',', cols);
  if (cols.size() != 4 || detail::trim(cols[0]) != "t" || detail::trim(cols[1]) != "x" ||
      detail::trim(cols[2]) != "y" || detail::trim(cols[3]) != "confidence")
    fail(ErrorCategory::parse, "gaze csv line 1: expected header 't,x,y,confidence'");

  ParseStats stats;
  GazeTrack track;
  track.nominal_rate = opt.nominal_rate;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    detail::split_line(line, ',', cols);
    if (cols.size() != 4)
      fail(ErrorCategory::parse, "gaze csv line " + std::to_string(line_no) +
                                     ": expected 4 columns, got " +
                                     std::to_string(cols.size()));
    GazeSample s;
    if (!detail::parse_double(cols[0], s.t) || !detail::parse_double(cols[1], s.x) ||
        !detail::parse_double(cols[2], s.y) ||
        !detail::parse_double(cols[3], s.confidence))
      fail(ErrorCategory::parse,
           "gaze csv line " + std::to_string(line_no) + ": non-numeric field");
    if (s.t < 0)
      fail(ErrorCategory::parse,
           "gaze csv line " + std::to_string(line_no) + ": negative timestamp");
    ++stats.rows_total;
    if (s.confidence < opt.confidence_threshold) {
      ++stats.rows_dropped_confidence;
      continue;
    }
    if (s.x < 0 || s.x > 1 || s.y < 0 || s.y > 1) ++stats.rows_clamped;
    s.x = std::clamp(s.x, 0.0, 1.0);
    s.y = std::clamp(s.y, 0.0, 1.0);
    track.samples.push_back(s);
  }
  if (stats.rows_total == 0)
    fail(ErrorCategory::parse, "empty gaze csv: no data rows");

  std::stable_sort(track.samples.begin(), track.samples.end(),
                   [](const GazeSample& a, const GazeSample& b) { return a.t < b.t; });
  auto last = std::unique(track.samples.begin(), track.samples.end(),
                          [](const GazeSample& a, const GazeSample& b) { return a.t == b.t; });
  stats.rows_collapsed = static_cast<std::size_t>(track.samples.end() - last);
  track.samples.erase(last, track.samples.end());
  stats.rows_kept = track.samples.size();
  if (stats_out) *stats_out = stats;
  return track;
}

inline GazeTrack parse_gaze_csv_file(const std::filesystem::path& path,
                                     const CsvOptions& opt = {},
                                     ParseStats* stats_out = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open gaze csv '" + path.string() + "'");
  try {
    return parse_gaze_csv(in, opt, stats_out);
  } catch (const Error& e) {
    throw Error(e.category(), path.filename().string() + ": " + e.what());
  }
}

inline void write_gaze_csv(std::ostream& out, const GazeTrack& track) {
  out << "t,x,y,confidence\n";
  for (const auto& s : track.samples)
    out << detail::fmt_double(s.t) << ',' << detail::fmt_double(s.x) << ','
        << detail::fmt_double(s.y) << ',' << detail::fmt_double(s.confidence) << '\n';
}

inline void write_fixations_csv(std::ostream& out, const std::vector<Fixation>& fixations) {
  out << "start_s,duration_ms,cx,cy,sample_count\n";
  for (const auto& f : fixations)
    out << detail::fmt_double(f.start) << ',' << detail::fmt_double(f.duration_ms)
        << ',' << detail::fmt_double(f.centroid_x) << ','
        << detail::fmt_double(f.centroid_y) << ',' << f.sample_count << '\n';
}

// ---------------------------------------------------------------------------
// Session manifest: one JSON object per participant.
//   { "participant_id": "...", "label": "Expert"|"NonExpert",
//     "images": [ { "image_id", "gaze_csv", "shown_at_s",
//                   "initial_decision_at_s", "final_decision_at_s",
//                   "initial_decision", "final_decision", "ground_truth",
//                   ...extra per-image stats tolerated... }, ... ] }
// Raw-gaze pointers resolve relative to gaze_dir.
// ---------------------------------------------------------------------------

inline Session parse_session(const nlohmann::json& manifest,
                             const std::filesystem::path& gaze_dir,
                             const CsvOptions& opt = {}) {
  if (!manifest.is_object())
    fail(ErrorCategory::parse, "session manifest: expected a JSON object");
  for (const char* key : {"participant_id", "label", "images"})
    if (!manifest.contains(key))
      fail(ErrorCategory::parse, std::string("session manifest: missing '") + key + "'");

  Session session;
  session.participant_id = manifest.at("participant_id").get<std::string>();
  session.label = label_from_string(manifest.at("label").get<std::string>());

  const auto& images = manifest.at("images");
  if (!images.is_array())
    fail(ErrorCategory::parse, "session manifest: 'images' must be an array");

  for (const auto& img : images) {
    ImageEvent ev;
    for (const char* key : {"image_id", "gaze_csv", "shown_at_s", "initial_decision_at_s",
                            "final_decision_at_s"})
      if (!img.contains(key))
        fail(ErrorCategory::parse,
             "session manifest image entry: missing '" + std::string(key) + "'");
    ev.image_id = img.at("image_id").get<std::string>();
    ev.gaze_csv = img.at("gaze_csv").get<std::string>();
    ev.shown_at = img.at("shown_at_s").get<double>();
    ev.initial_decision_at = img.at("initial_decision_at_s").get<double>();
    ev.final_decision_at = img.at("final_decision_at_s").get<double>();
    ev.initial_decision = img.value("initial_decision", std::string());
    ev.final_decision = img.value("final_decision", std::string());
    ev.ground_truth = img.value("ground_truth", std::string());
    if (!(ev.shown_at < ev.initial_decision_at && ev.initial_decision_at <= ev.final_decision_at))
      fail(ErrorCategory::validation,
           "image '" + ev.image_id + "': decision timestamps out of order");
    session.events.push_back(std::move(ev));
  }

  std::stable_sort(session.events.begin(), session.events.end(),
                   [](const ImageEvent& a, const ImageEvent& b) { return a.shown_at < b.shown_at; });
  for (std::size_t i = 1; i < session.events.size(); ++i)
    if (session.events[i].shown_at < session.events[i - 1].final_decision_at)
      fail(ErrorCategory::validation,
           "image '" + session.events[i].image_id + "' overlaps the time span of '" +
               session.events[i - 1].image_id + "'");

  for (const auto& ev : session.events) {
    auto csv_path = gaze_dir / ev.gaze_csv;
    if (!std::filesystem::exists(csv_path))
      fail(ErrorCategory::io, "cannot resolve raw-gaze pointer '" + ev.gaze_csv + "'");
    ParseStats stats;
    GazeTrack part = parse_gaze_csv_file(csv_path, opt, &stats);
    session.ingest.accumulate(stats);
    session.track.samples.insert(session.track.samples.end(), part.samples.begin(),
                                 part.samples.end());
  }
  session.track.nominal_rate = opt.nominal_rate;

  // Per-image files may abut; re-sort and collapse across boundaries so the
  // concatenated track keeps strictly increasing timestamps.
  std::stable_sort(session.track.samples.begin(), session.track.samples.end(),
                   [](const GazeSample& a, const GazeSample& b) { return a.t < b.t; });
  auto last = std::unique(session.track.samples.begin(), session.track.samples.end(),
                          [](const GazeSample& a, const GazeSample& b) { return a.t == b.t; });
  session.ingest.rows_collapsed += static_cast<std::size_t>(session.track.samples.end() - last);
  session.track.samples.erase(last, session.track.samples.end());
  session.ingest.rows_kept = session.track.samples.size();
  return session;
}

inline Session parse_session_file(const std::filesystem::path& manifest_path,
                                  const std::filesystem::path& gaze_dir,
                                  const CsvOptions& opt = {}) {
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorCategory::io, "cannot open manifest '" + manifest_path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, manifest_path.filename().string() + ": " + e.what());
  }
  return parse_session(j, gaze_dir, opt);
}

inline nlohmann::json session_manifest_json(const Session& s) {
  nlohmann::json j;
  j["participant_id"] = s.participant_id;
  j["label"] = to_string(s.label);
  auto& images = j["images"] = nlohmann::json::array();
  for (const auto& ev : s.events) {
    nlohmann::json img;
    img["image_id"] = ev.image_id;
    img["gaze_csv"] = ev.gaze_csv;
    img["shown_at_s"] = ev.shown_at;
    img["initial_decision_at_s"] = ev.initial_decision_at;
    img["final_decision_at_s"] = ev.final_decision_at;
    img["initial_decision"] = ev.initial_decision;
    img["final_decision"] = ev.final_decision;
    img["ground_truth"] = ev.ground_truth;
    images.push_back(std::move(img));
  }
  return j;
}

// Writes manifest + per-image gaze CSVs under dir. Each event must carry a
// gaze_csv name; the track is cut at image boundaries [shown_at, next shown_at).
inline void write_session(const std::filesystem::path& dir, const Session& s) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "gaze");
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& ev = s.events[i];
    double t_end = i + 1 < s.events.size() ? s.events[i + 1].shown_at
                                           : std::numeric_limits<double>::infinity();
    GazeTrack part;
    part.nominal_rate = s.track.nominal_rate;
    for (const auto& smp : s.track.samples)
      if (smp.t >= ev.shown_at && smp.t < t_end) part.samples.push_back(smp);
    std::ofstream out(dir / ev.gaze_csv);
    if (!out) fail(ErrorCategory::io, "cannot write '" + (dir / ev.gaze_csv).string() + "'");
    write_gaze_csv(out, part);
  }
  std::ofstream mout(dir / (s.participant_id + ".json"));
  if (!mout)
    fail(ErrorCategory::io, "cannot write manifest for '" + s.participant_id + "'");
  mout << session_manifest_json(s).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Session store: a directory of manifests + gaze CSVs indexed by store.json.
// ---------------------------------------------------------------------------

struct StoreEntry {
  std::string participant_id;
  Label label = Label::NonExpert;
  std::string manifest;  // file name relative to the store dir
  double duration_s = 0;
  std::size_t n_events = 0;
  bool usable = true;
};

struct StoreIndex {
  std::vector<StoreEntry> sessions;
};

inline void write_store_index(const std::filesystem::path& dir, const StoreIndex& index) {
  nlohmann::json j;
  j["version"] = 1;
  auto& arr = j["sessions"] = nlohmann::json::array();
  for (const auto& e : index.sessions) {
    nlohmann::json s;
    s["participant_id"] = e.participant_id;
    s["label"] = to_string(e.label);
    s["manifest"] = e.manifest;
    s["duration_s"] = e.duration_s;
    s["n_events"] = e.n_events;
    s["usable"] = e.usable;
    arr.push_back(std::move(s));
  }
  std::ofstream out(dir / "store.json");
  if (!out) fail(ErrorCategory::io, "cannot write '" + (dir / "store.json").string() + "'");
  out << j.dump(2) << '\n';
}

inline StoreIndex read_store_index(const std::filesystem::path& dir) {
  std::ifstream in(dir / "store.json");
  if (!in) fail(ErrorCategory::io, "no store.json in '" + dir.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("store.json: ") + e.what());
  }
  StoreIndex index;
  for (const auto& s : j.at("sessions")) {
    StoreEntry e;
    e.participant_id = s.at("participant_id").get<std::string>();
    e.label = label_from_string(s.at("label").get<std::string>());
    e.manifest = s.at("manifest").get<std::string>();
    e.duration_s = s.value("duration_s", 0.0);
    e.n_events = s.value("n_events", std::size_t{0});
    e.usable = s.value("usable", true);
    index.sessions.push_back(std::move(e));
  }
  std::sort(index.sessions.begin(), index.sessions.end(),
            [](const StoreEntry& a, const StoreEntry& b) {
              return a.participant_id < b.participant_id;
            });
  return index;
}

inline std::vector<Session> load_store_sessions(const std::filesystem::path& dir,
                                                const CsvOptions& opt = {},
                                                bool include_unusable = false) {
  StoreIndex index = read_store_index(dir);
  std::vector<Session> sessions;
  for (const auto& e : index.sessions) {
    if (!e.usable && !include_unusable) continue;
    sessions.push_back(parse_session_file(dir / e.manifest, dir, opt));
  }
  return sessions;
}

}  // namespace gazegrade
