#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gazegrade/features.hpp"
#include "gazegrade/rng.hpp"

using namespace gazegrade;

namespace {

Fixation fix(double start, double dur_ms, double cx, double cy) {
  return {.start = start, .duration_ms = dur_ms, .centroid_x = cx,
          .centroid_y = cy, .sample_count = 1};
}

}  // namespace

TEST_CASE("scalar features on handcrafted fixations") {
  std::vector<Fixation> fx{fix(0.0, 100, 0.0, 0.0), fix(0.2, 200, 0.3, 0.4),
                           fix(0.5, 300, 0.3, 0.4)};
  CHECK(average_fixation_duration(fx) == 200.0);
  CHECK(fixation_count(fx) == 3);
  // Hops: 0.5 (3-4-5 triangle) then 0.
  CHECK(average_euclidean_distance(fx) == Catch::Approx(0.25));
}

TEST_CASE("scalar features degrade gracefully") {
  CHECK(average_fixation_duration({}) == 0.0);
  CHECK(average_euclidean_distance({}) == 0.0);
  std::vector<Fixation> one{fix(0.0, 150, 0.5, 0.5)};
  CHECK(average_euclidean_distance(one) == 0.0);
  CHECK(average_fixation_duration(one) == 150.0);
}

TEST_CASE("relational index is duration per fixation") {
  CHECK(gaze_relational_index(300.0, 4.0) == 75.0);
  CHECK(gaze_relational_index(0.0, 0.0) == 0.0);  // no fixations: defined as 0
}

TEST_CASE("min-max rescale maps extremes to 0 and 1") {
  std::vector<double> v{3.0, 1.0, 2.0};
  auto r = min_max_rescale(v);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 0.5);

  std::vector<double> flat{4.0, 4.0};
  auto rf = min_max_rescale(flat);
  CHECK(rf[0] == 0.0);
  CHECK(rf[1] == 0.0);
  CHECK(min_max_rescale({}).empty());
}

TEST_CASE("resampling reproduces samples that sit on the grid") {
  // Source on the exact resample grid: interpolation must return it bitwise.
  GazeTrack slice;
  int L = 16;
  double t0 = 2.0, duration = 4.0;
  for (int i = 0; i <= L; ++i)
    slice.samples.push_back(
        {t0 + i * (duration / L), 0.1 + 0.05 * i, 0.9 - 0.05 * i, 1.0});

  std::vector<double> out;
  bool empty = true;
  resample_gaze(slice, t0, duration, L, out, &empty);
  CHECK_FALSE(empty);
  REQUIRE(out.size() == static_cast<std::size_t>(2 * L));
  for (int i = 0; i < L; ++i) {
    CHECK(out[i] == slice.samples[i].x);
    CHECK(out[L + i] == slice.samples[i].y);
  }
}

TEST_CASE("resampling interpolates midpoints linearly") {
  GazeTrack slice;
  slice.samples.push_back({0.0, 0.0, 1.0, 1.0});
  slice.samples.push_back({1.0, 1.0, 0.0, 1.0});
  std::vector<double> out;
  resample_gaze(slice, 0.0, 1.0, 4, out);
  // Grid 0, 0.25, 0.5, 0.75.
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.25);
  CHECK(out[2] == 0.5);
  CHECK(out[3] == 0.75);
  CHECK(out[4] == 1.0);
  CHECK(out[7] == 0.25);
}

TEST_CASE("resampling holds boundary values outside the sampled range") {
  GazeTrack slice;
  slice.samples.push_back({5.4, 0.2, 0.3, 1.0});
  slice.samples.push_back({5.6, 0.8, 0.7, 1.0});
  std::vector<double> out;
  // Window [5,6): grid points below 5.4 hold the first sample, those at or
  // above 5.6 hold the last.
  resample_gaze(slice, 5.0, 1.0, 10, out);
  CHECK(out[0] == 0.2);
  CHECK(out[3] == 0.2);   // t=5.3
  CHECK(out[10] == 0.3);  // y channel
  CHECK(out[7] == 0.8);   // t=5.7
  CHECK(out[9] == 0.8);
  CHECK(out[19] == 0.7);
  CHECK(out[5] == Catch::Approx(0.5));  // t=5.5, midway
}

TEST_CASE("empty slice resamples to screen center and flags it") {
  std::vector<double> out;
  bool empty = false;
  resample_gaze(GazeTrack{}, 0.0, 5.0, 8, out, &empty);
  CHECK(empty);
  REQUIRE(out.size() == 16);
  for (double v : out) CHECK(v == 0.5);
}

TEST_CASE("resample target length must be at least 2") {
  GazeTrack slice;
  slice.samples.push_back({0.0, 0.5, 0.5, 1.0});
  std::vector<double> out;
  REQUIRE_THROWS_AS(resample_gaze(slice, 0.0, 1.0, 1, out), Error);
  REQUIRE_THROWS_AS(resample_gaze(slice, 0.0, 1.0, 0, out), Error);
}

TEST_CASE("resampled values interpolate against an independent oracle") {
  Rng rng(4242);
  for (int trial = 0; trial < 50; ++trial) {
    GazeTrack slice;
    double t = rng.uniform(0, 100);
    int n = 2 + static_cast<int>(rng.uniform(0, 60));
    for (int i = 0; i < n; ++i) {
      t += rng.uniform(0.001, 0.05);
      slice.samples.push_back({t, rng.uniform01(), rng.uniform01(), 1.0});
    }
    double t0 = slice.samples.front().t - 0.1;
    double duration = (slice.samples.back().t - t0) + 0.1;
    int L = 2 + static_cast<int>(rng.uniform(0, 200));

    std::vector<double> out;
    resample_gaze(slice, t0, duration, L, out);

    // Oracle: binary search per grid point, no sweep state.
    for (int i = 0; i < L; ++i) {
      double ti = t0 + i * (duration / L);
      double ex, ey;
      if (ti <= slice.samples.front().t) {
        ex = slice.samples.front().x;
        ey = slice.samples.front().y;
      } else if (ti >= slice.samples.back().t) {
        ex = slice.samples.back().x;
        ey = slice.samples.back().y;
      } else {
        std::size_t hi = 1;
        while (slice.samples[hi].t <= ti) ++hi;
        const auto& a = slice.samples[hi - 1];
        const auto& b = slice.samples[hi];
        double w = (ti - a.t) / (b.t - a.t);
        ex = a.x + w * (b.x - a.x);
        ey = a.y + w * (b.y - a.y);
      }
      REQUIRE(out[i] == Catch::Approx(ex).margin(1e-12));
      REQUIRE(out[L + i] == Catch::Approx(ey).margin(1e-12));
      // Interpolation never leaves the hull of the inputs.
      REQUIRE(out[i] >= 0.0);
      REQUIRE(out[i] <= 1.0);
    }
  }
}

TEST_CASE("window feature extraction wires everything together") {
  WindowData w;
  w.span = {3, 15.0, 10.0};
  w.label = Label::Expert;
  w.phase_tag = PhaseTag::InitialOnly;
  w.gaze.nominal_rate = 50.0;
  for (int k = 0; k < 500; ++k)
    w.gaze.samples.push_back({15.0 + k / 50.0, 0.4, 0.6, 1.0});
  w.fixations = {fix(15.2, 120, 0.4, 0.6), fix(16.0, 180, 0.4, 0.6)};

  WindowFeatures f = extract_window_features(w, 50.0);
  CHECK(f.seq_len == 500);
  REQUIRE(f.gaze_seq.size() == 1000);
  CHECK(f.afd_ms == 150.0);
  CHECK(f.fc == 2.0);
  CHECK(f.aed == 0.0);
  CHECK(f.label == Label::Expert);
  CHECK(f.phase_tag == PhaseTag::InitialOnly);
  CHECK_FALSE(f.empty_gaze);
  CHECK(f.window_index == 3);
  CHECK(f.window_start_s == 15.0);
  CHECK(f.gaze_seq[0] == 0.4);
  CHECK(f.gaze_seq[500] == 0.6);

  // Fractional rate*size rounds to the nearest integer length.
  w.span.size = 10.02;
  CHECK(extract_window_features(w, 50.0).seq_len == 501);
}

TEST_CASE("normalizer computes population moments per stream") {
  std::vector<WindowFeatures> train(4);
  double afd[] = {100, 200, 300, 400};
  double fc[] = {2, 4, 6, 8};
  for (int i = 0; i < 4; ++i) {
    train[i].afd_ms = afd[i];
    train[i].fc = fc[i];
    train[i].aed = 0.25;  // constant stream
  }
  FeatureStats stats = fit_normalizer(train);
  CHECK(stats.afd.mean == 250.0);
  // Population std over {100,200,300,400}: sqrt(12500).
  CHECK(stats.afd.std == Catch::Approx(std::sqrt(12500.0)));
  CHECK_FALSE(stats.afd.constant);
  CHECK(stats.fc.mean == 5.0);
  CHECK(stats.aed.constant);
  CHECK(stats.aed.std == 1.0);

  WindowFeatures probe;
  probe.afd_ms = 250.0;
  probe.fc = 5.0 + std::sqrt(5.0);
  probe.aed = 123.0;  // constant stream maps everything to 0
  WindowFeatures z = apply_normalizer(stats, probe);
  CHECK(z.afd_ms == 0.0);
  CHECK(z.fc == Catch::Approx(1.0));
  CHECK(z.aed == 0.0);
}

TEST_CASE("normalized training data has zero mean and unit variance") {
  Rng rng(9);
  std::vector<WindowFeatures> train(200);
  for (auto& f : train) {
    f.afd_ms = rng.uniform(80, 600);
    f.fc = std::floor(rng.uniform(0, 30));
    f.aed = rng.uniform01();
  }
  FeatureStats stats = fit_normalizer(train);
  auto normalized = train;
  apply_normalizer_in_place(stats, normalized);
  double mean = 0, var = 0;
  for (const auto& f : normalized) mean += f.afd_ms;
  mean /= 200;
  for (const auto& f : normalized) var += (f.afd_ms - mean) * (f.afd_ms - mean);
  var /= 200;
  CHECK(mean == Catch::Approx(0.0).margin(1e-12));
  CHECK(var == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_normalizer rejects an empty training set") {
  REQUIRE_THROWS_AS(fit_normalizer({}), Error);
}

TEST_CASE("image features split fixations by viewing span") {
  Session s;
  s.participant_id = "p";
  s.label = Label::Expert;
  ImageEvent a;
  a.image_id = "img000";
  a.shown_at = 0.0;
  a.initial_decision_at = 4.0;
  a.final_decision_at = 5.0;
  ImageEvent b;
  b.image_id = "img001";
  b.shown_at = 5.0;
  b.initial_decision_at = 8.0;
  b.final_decision_at = 10.0;
  s.events = {a, b};

  std::vector<Fixation> fx{fix(0.5, 100, 0.1, 0.1), fix(2.0, 300, 0.4, 0.5),
                           fix(4.9, 200, 0.4, 0.5),  // straddles into img001 but starts in img000
                           fix(5.0, 400, 0.2, 0.2),  // boundary start: img001
                           fix(9.99, 100, 0.2, 0.2)};

  auto imgs = extract_image_features(s, fx);
  REQUIRE(imgs.size() == 2);
  CHECK(imgs[0].image_id == "img000");
  CHECK(imgs[0].fc == 3.0);
  CHECK(imgs[0].afd_ms == 200.0);
  CHECK(imgs[0].gri == Catch::Approx(200.0 / 3.0));
  CHECK(imgs[1].fc == 2.0);
  CHECK(imgs[1].afd_ms == 250.0);
  CHECK(imgs[1].aed == 0.0);
  CHECK(imgs[1].label == Label::Expert);
}
