#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gazegrade/io.hpp"
#include "gazegrade/rng.hpp"
#include "gazegrade/store.hpp"

using namespace gazegrade;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("gazegrade_io_test_" + std::to_string(++counter));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

GazeTrack parse_text(const std::string& text, const CsvOptions& opt = {},
                     ParseStats* stats = nullptr) {
  std::istringstream in(text);
  return parse_gaze_csv(in, opt, stats);
}

// Two images, contiguous spans, samples on a 100 Hz grid from the first
// shown_at onward so write_session loses nothing.
Session make_two_image_session() {
  Session s;
  s.participant_id = "p01";
  s.label = Label::Expert;
  s.track.nominal_rate = 100.0;
  for (int k = 0; k < 400; ++k) {
    GazeSample g;
    g.t = k / 100.0;
    g.x = 0.25 + 0.001 * (k % 7);
    g.y = 0.75 - 0.001 * (k % 5);
    g.confidence = 0.9;
    s.track.samples.push_back(g);
  }
  ImageEvent a;
  a.image_id = "img000";
  a.shown_at = 0.0;
  a.initial_decision_at = 1.5;
  a.final_decision_at = 2.0;
  a.initial_decision = "Normal";
  a.final_decision = "Normal";
  a.ground_truth = "genuine";
  ImageEvent b;
  b.image_id = "img001";
  b.shown_at = 2.0;
  b.initial_decision_at = 3.0;
  b.final_decision_at = 3.99;
  b.initial_decision = "Abnormal";
  b.final_decision = "Abnormal";
  b.ground_truth = "spoof";
  s.events = {a, b};
  return s;
}

}  // namespace

TEST_CASE("gaze csv happy path parses exact values and stats") {
  ParseStats stats;
  GazeTrack t = parse_text(
      "t,x,y,confidence\n"
      "0,0.5,0.5,1\n"
      "0.005,0.25,0.75,0.8\n"
      "0.01,0.125,0.875,0.61\n",
      {}, &stats);
  REQUIRE(t.size() == 3);
  CHECK(t.samples[0].t == 0.0);
  CHECK(t.samples[1].t == 0.005);
  CHECK(t.samples[1].x == 0.25);
  CHECK(t.samples[1].y == 0.75);
  CHECK(t.samples[2].confidence == 0.61);
  CHECK(stats.rows_total == 3);
  CHECK(stats.rows_kept == 3);
  CHECK(stats.rows_dropped_confidence == 0);
  CHECK(stats.rows_clamped == 0);
  CHECK(stats.rows_collapsed == 0);
}

TEST_CASE("gaze csv header must match exactly") {
  REQUIRE_THROWS_AS(parse_text("time,x,y,confidence\n0,0.5,0.5,1\n"), Error);
  REQUIRE_THROWS_WITH(parse_text("t,x,y\n0,0.5,0.5\n"),
                      ContainsSubstring("expected header 't,x,y,confidence'"));
  // Whitespace around column names is tolerated.
  GazeTrack t = parse_text(" t , x , y , confidence \n0,0.5,0.5,1\n");
  REQUIRE(t.size() == 1);
}

TEST_CASE("gaze csv row errors carry line numbers") {
  REQUIRE_THROWS_WITH(
      parse_text("t,x,y,confidence\n0,0.5,0.5,1\n0.005,0.5,0.5\n"),
      ContainsSubstring("line 3: expected 4 columns, got 3"));
  REQUIRE_THROWS_WITH(
      parse_text("t,x,y,confidence\n0,0.5,oops,1\n"),
      ContainsSubstring("line 2: non-numeric field"));
  REQUIRE_THROWS_WITH(
      parse_text("t,x,y,confidence\n0,0.5,0.5,1\n-0.005,0.5,0.5,1\n"),
      ContainsSubstring("line 3: negative timestamp"));
}

TEST_CASE("confidence filter drops strictly below the threshold") {
  ParseStats stats;
  GazeTrack t = parse_text(
      "t,x,y,confidence\n"
      "0,0.5,0.5,0.6\n"     // exactly at threshold: kept
      "0.005,0.5,0.5,0.59999\n"
      "0.01,0.5,0.5,0\n",
      {}, &stats);
  REQUIRE(t.size() == 1);
  CHECK(t.samples[0].confidence == 0.6);
  CHECK(stats.rows_total == 3);
  CHECK(stats.rows_dropped_confidence == 2);
  CHECK(stats.dropped_fraction() == Catch::Approx(2.0 / 3.0));

  CsvOptions strict;
  strict.confidence_threshold = 0.0;
  GazeTrack all = parse_text("t,x,y,confidence\n0,0.5,0.5,0\n", strict);
  REQUIRE(all.size() == 1);
}

TEST_CASE("out-of-range coordinates clamp and count") {
  ParseStats stats;
  GazeTrack t = parse_text(
      "t,x,y,confidence\n"
      "0,-0.2,0.5,1\n"
      "0.005,0.5,1.3,1\n"
      "0.01,1,0,1\n",  // on the boundary: not a clamp
      {}, &stats);
  REQUIRE(t.size() == 3);
  CHECK(t.samples[0].x == 0.0);
  CHECK(t.samples[1].y == 1.0);
  CHECK(stats.rows_clamped == 2);
}

TEST_CASE("duplicate timestamps keep the first row") {
  ParseStats stats;
  GazeTrack t = parse_text(
      "t,x,y,confidence\n"
      "0,0.1,0.1,1\n"
      "0.005,0.2,0.2,1\n"
      "0.005,0.9,0.9,1\n"
      "0.01,0.3,0.3,1\n",
      {}, &stats);
  REQUIRE(t.size() == 3);
  CHECK(t.samples[1].x == 0.2);
  CHECK(stats.rows_collapsed == 1);
  CHECK(stats.rows_kept == 3);
}

TEST_CASE("unsorted rows are ordered by timestamp") {
  GazeTrack t = parse_text(
      "t,x,y,confidence\n"
      "0.01,0.3,0.3,1\n"
      "0,0.1,0.1,1\n"
      "0.005,0.2,0.2,1\n");
  REQUIRE(t.size() == 3);
  CHECK(t.samples[0].t == 0.0);
  CHECK(t.samples[1].t == 0.005);
  CHECK(t.samples[2].t == 0.01);
}

TEST_CASE("empty gaze csv inputs are rejected") {
  REQUIRE_THROWS_WITH(parse_text(""), ContainsSubstring("no header"));
  REQUIRE_THROWS_WITH(parse_text("t,x,y,confidence\n"),
                      ContainsSubstring("no data rows"));
  // Rows that all fail the confidence screen still count as data rows.
  GazeTrack t = parse_text("t,x,y,confidence\n0,0.5,0.5,0.1\n");
  CHECK(t.empty());
}

TEST_CASE("double formatting round-trips exactly") {
  Rng rng(20240817);
  for (int i = 0; i < 2000; ++i) {
    double v = rng.uniform(-1e6, 1e6);
    if (i % 3 == 0) v = rng.uniform01() * 1e-4;
    if (i % 7 == 0) v = static_cast<double>(i);
    std::string s = detail::fmt_double(v);
    double back = 0;
    REQUIRE(detail::parse_double(s, back));
    REQUIRE(back == v);
  }
  CHECK(detail::fmt_double(0.0) == "0");
  CHECK(detail::fmt_double(0.5) == "0.5");
}

TEST_CASE("gaze csv write then parse then write is byte-identical") {
  Rng rng(99);
  GazeTrack t;
  for (int k = 0; k < 500; ++k) {
    GazeSample s;
    s.t = k / 200.0 + rng.uniform01() * 1e-4;
    s.x = rng.uniform01();
    s.y = rng.uniform01();
    s.confidence = 0.6 + 0.4 * rng.uniform01();
    t.samples.push_back(s);
  }
  std::ostringstream first;
  write_gaze_csv(first, t);
  GazeTrack parsed = parse_text(first.str());
  REQUIRE(parsed.size() == t.size());
  std::ostringstream second;
  write_gaze_csv(second, parsed);
  REQUIRE(first.str() == second.str());
}

TEST_CASE("session manifest missing keys are named") {
  nlohmann::json m;
  m["participant_id"] = "p01";
  m["images"] = nlohmann::json::array();
  REQUIRE_THROWS_WITH(parse_session(m, "."), ContainsSubstring("missing 'label'"));
  m["label"] = "Expert";
  m.erase("images");
  REQUIRE_THROWS_WITH(parse_session(m, "."), ContainsSubstring("missing 'images'"));
  m["images"] = nlohmann::json::array();
  m["images"].push_back({{"image_id", "img000"}, {"shown_at_s", 0.0}});
  REQUIRE_THROWS_WITH(parse_session(m, "."),
                      ContainsSubstring("image entry: missing 'gaze_csv'"));
}

TEST_CASE("session manifest validates event timing") {
  TempDir dir;
  {
    std::ofstream out(dir.path / "a.csv");
    out << "t,x,y,confidence\n0,0.5,0.5,1\n0.5,0.5,0.5,1\n";
  }
  nlohmann::json m;
  m["participant_id"] = "p01";
  m["label"] = "NonExpert";
  auto img = [&](const std::string& id, double shown, double init, double fin) {
    return nlohmann::json{{"image_id", id},       {"gaze_csv", "a.csv"},
                          {"shown_at_s", shown},  {"initial_decision_at_s", init},
                          {"final_decision_at_s", fin}};
  };

  SECTION("initial decision before shown_at") {
    m["images"] = {img("img000", 1.0, 0.5, 2.0)};
    REQUIRE_THROWS_WITH(parse_session(m, dir.path),
                        ContainsSubstring("'img000': decision timestamps out of order"));
  }
  SECTION("final decision before initial") {
    m["images"] = {img("img000", 0.0, 1.5, 1.0)};
    REQUIRE_THROWS_AS(parse_session(m, dir.path), Error);
  }
  SECTION("overlapping image spans") {
    m["images"] = {img("img000", 0.0, 1.0, 2.0), img("img001", 1.5, 2.5, 3.0)};
    REQUIRE_THROWS_WITH(parse_session(m, dir.path),
                        ContainsSubstring("'img001' overlaps the time span of 'img000'"));
  }
  SECTION("abutting spans are fine") {
    m["images"] = {img("img000", 0.0, 0.4, 0.5), img("img001", 0.5, 0.8, 1.0)};
    // Both events point at the same csv; duplicates collapse at the session level.
    Session s = parse_session(m, dir.path);
    REQUIRE(s.events.size() == 2);
    CHECK(s.track.size() == 2);
    CHECK(s.ingest.rows_collapsed == 2);
  }
}

TEST_CASE("unresolvable raw-gaze pointer is an io error") {
  TempDir dir;
  nlohmann::json m;
  m["participant_id"] = "p01";
  m["label"] = "Expert";
  m["images"] = {nlohmann::json{{"image_id", "img000"},
                                {"gaze_csv", "gaze/missing.csv"},
                                {"shown_at_s", 0.0},
                                {"initial_decision_at_s", 1.0},
                                {"final_decision_at_s", 2.0}}};
  try {
    parse_session(m, dir.path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::io);
    CHECK_THAT(e.what(),
               ContainsSubstring("cannot resolve raw-gaze pointer 'gaze/missing.csv'"));
  }
}

TEST_CASE("write_session then parse_session_file round-trips") {
  TempDir dir;
  Session s = make_two_image_session();
  assign_gaze_pointers(s);
  write_session(dir.path, s);

  Session back = parse_session_file(dir.path / "p01.json", dir.path);
  CHECK(back.participant_id == "p01");
  CHECK(back.label == Label::Expert);
  REQUIRE(back.events.size() == 2);
  CHECK(back.events[0].image_id == "img000");
  CHECK(back.events[1].ground_truth == "spoof");
  CHECK(back.events[1].final_decision == "Abnormal");
  CHECK(back.events[0].initial_decision_at == 1.5);

  REQUIRE(back.track.size() == s.track.size());
  for (std::size_t i = 0; i < s.track.size(); ++i) {
    CHECK(back.track.samples[i].t == s.track.samples[i].t);
    CHECK(back.track.samples[i].x == s.track.samples[i].x);
    CHECK(back.track.samples[i].y == s.track.samples[i].y);
  }
  CHECK(back.ingest.rows_kept == s.track.size());
}

TEST_CASE("write_session splits gaze at event boundaries") {
  TempDir dir;
  Session s = make_two_image_session();
  assign_gaze_pointers(s);
  write_session(dir.path, s);

  GazeTrack first = parse_gaze_csv_file(dir.path / "gaze" / "p01_img000.csv");
  GazeTrack second = parse_gaze_csv_file(dir.path / "gaze" / "p01_img001.csv");
  CHECK(first.size() == 200);  // [0, 2) at 100 Hz
  CHECK(second.size() == 200);
  CHECK(first.samples.back().t < 2.0);
  CHECK(second.samples.front().t == 2.0);
}

TEST_CASE("manifest parse failures name the file") {
  TempDir dir;
  {
    std::ofstream out(dir.path / "broken.json");
    out << "{ not json";
  }
  try {
    parse_session_file(dir.path / "broken.json", dir.path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::parse);
    CHECK_THAT(e.what(), ContainsSubstring("broken.json"));
  }
  REQUIRE_THROWS_WITH(parse_session_file(dir.path / "absent.json", dir.path),
                      ContainsSubstring("cannot open manifest"));
}

TEST_CASE("session store round-trips and sorts its index") {
  TempDir dir;
  Session a = make_two_image_session();
  Session b = make_two_image_session();
  b.participant_id = "a09";  // sorts before p01
  b.label = Label::NonExpert;
  std::vector<Session> sessions{a, b};

  StoreIndex written = write_session_store(dir.path, sessions);
  REQUIRE(written.sessions.size() == 2);
  CHECK(written.sessions[0].participant_id == "a09");
  CHECK(written.sessions[1].participant_id == "p01");
  CHECK(written.sessions[0].label == Label::NonExpert);
  CHECK(written.sessions[0].usable);
  CHECK(written.sessions[0].n_events == 2);
  CHECK(written.sessions[0].duration_s == Catch::Approx(3.99));

  StoreIndex read = read_store_index(dir.path);
  REQUIRE(read.sessions.size() == 2);
  CHECK(read.sessions[0].participant_id == "a09");
  CHECK(read.sessions[1].manifest == "p01.json");

  auto loaded = load_store_sessions(dir.path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].participant_id == "a09");
  CHECK(loaded[1].track.size() == 400);
}

TEST_CASE("unusable sessions are skipped unless requested") {
  TempDir dir;
  Session good = make_two_image_session();
  Session gappy = make_two_image_session();
  gappy.participant_id = "p02";
  // Remove 1.5 s of samples mid-session to break the max-gap screen.
  std::erase_if(gappy.track.samples,
                [](const GazeSample& g) { return g.t > 1.0 && g.t < 2.5; });
  std::vector<Session> sessions{good, gappy};

  ValidateOptions vopt;
  vopt.max_gap_s = 1.0;
  StoreIndex index = write_session_store(dir.path, sessions, vopt);
  REQUIRE(index.sessions.size() == 2);
  CHECK(index.sessions[0].usable);
  CHECK_FALSE(index.sessions[1].usable);

  CHECK(load_store_sessions(dir.path).size() == 1);
  CHECK(load_store_sessions(dir.path, {}, true).size() == 2);
}

TEST_CASE("store index is rejected when absent or malformed") {
  TempDir dir;
  REQUIRE_THROWS_WITH(read_store_index(dir.path), ContainsSubstring("no store.json"));
  {
    std::ofstream out(dir.path / "store.json");
    out << "[1,2,3";
  }
  REQUIRE_THROWS_AS(read_store_index(dir.path), Error);
}

TEST_CASE("fixation csv layout is stable") {
  std::vector<Fixation> fx(2);
  fx[0] = {.start = 0.25, .duration_ms = 120, .centroid_x = 0.5,
           .centroid_y = 0.5, .sample_count = 24};
  fx[1] = {.start = 0.5, .duration_ms = 95, .centroid_x = 0.125,
           .centroid_y = 0.75, .sample_count = 19};
  std::ostringstream out;
  write_fixations_csv(out, fx);
  CHECK(out.str() ==
        "start_s,duration_ms,cx,cy,sample_count\n"
        "0.25,120,0.5,0.5,24\n"
        "0.5,95,0.125,0.75,19\n");
}
