#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gazegrade/metrics.hpp"
#include "gazegrade/rng.hpp"

using namespace gazegrade;

namespace {

// Definition-level AUROC: positive-over-negative pair counting.
double pairwise_auroc(std::span<const double> scores, std::span<const Label> labels) {
  double wins = 0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != Label::Expert) continue;
    ++n_pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == Label::Expert) continue;
      wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  }
  n_neg = scores.size() - n_pos;
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

constexpr Label E = Label::Expert;
constexpr Label N = Label::NonExpert;

}  // namespace

TEST_CASE("auroc on pencil-and-paper cases") {
  std::vector<double> s1{0.9, 0.8, 0.1, 0.2};
  std::vector<Label> l1{E, E, N, N};
  CHECK(auroc(s1, l1) == 1.0);

  std::vector<double> s2{0.6, 0.4, 0.5, 0.3};
  std::vector<Label> l2{E, E, N, N};
  CHECK(auroc(s2, l2) == 0.75);

  std::vector<double> s3{0.5, 0.5, 0.5, 0.5};
  std::vector<Label> l3{E, N, E, N};
  CHECK(auroc(s3, l3) == 0.5);

  std::vector<double> s4{0.1, 0.9};
  std::vector<Label> l4{E, N};
  CHECK(auroc(s4, l4) == 0.0);
}

TEST_CASE("auroc matches brute-force pair counting") {
  Rng rng(1001);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 2 + static_cast<std::size_t>(rng.uniform(0, 199));
    std::vector<double> scores(n);
    std::vector<Label> labels(n);
    bool any_pos = false, any_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Quantized scores force ties.
      scores[i] = std::floor(rng.uniform01() * 20) / 20.0;
      labels[i] = rng.bernoulli(0.4) ? E : N;
      (labels[i] == E ? any_pos : any_neg) = true;
    }
    if (!any_pos || !any_neg) continue;
    double fast = auroc(scores, labels);
    double slow = pairwise_auroc(scores, labels);
    REQUIRE(std::abs(fast - slow) <= 1e-12);
  }
}

TEST_CASE("flipping labels complements auroc exactly") {
  Rng rng(77);
  std::vector<double> scores(60);
  std::vector<Label> labels(60), flipped(60);
  for (std::size_t i = 0; i < 60; ++i) {
    scores[i] = std::floor(rng.uniform01() * 10) / 10.0;
    labels[i] = i % 3 == 0 ? E : N;
    flipped[i] = labels[i] == E ? N : E;
  }
  CHECK(auroc(scores, labels) + auroc(scores, flipped) == 1.0);
}

TEST_CASE("auroc ignores strictly increasing score transforms") {
  Rng rng(55);
  std::vector<double> scores(80);
  std::vector<Label> labels(80);
  for (std::size_t i = 0; i < 80; ++i) {
    scores[i] = rng.uniform01();
    labels[i] = rng.bernoulli(0.5) ? E : N;
  }
  labels[0] = E;
  labels[1] = N;
  double base = auroc(scores, labels);
  std::vector<double> squashed(80), blown(80);
  for (std::size_t i = 0; i < 80; ++i) {
    squashed[i] = 1.0 / (1.0 + std::exp(-scores[i]));
    blown[i] = scores[i] * 1e6 - 3.0;
  }
  CHECK(auroc(squashed, labels) == base);
  CHECK(auroc(blown, labels) == base);
}

TEST_CASE("auroc rejects degenerate input") {
  std::vector<double> s{0.1, 0.2};
  std::vector<Label> same{E, E}, short_l{E};
  REQUIRE_THROWS_AS(auroc(s, same), Error);
  REQUIRE_THROWS_AS(auroc(s, short_l), Error);
  std::vector<Label> all_neg{N, N};
  REQUIRE_THROWS_AS(auroc(s, all_neg), Error);
}

TEST_CASE("roc curve anchors, monotonicity, and tie grouping") {
  std::vector<double> scores{0.9, 0.7, 0.7, 0.3};
  std::vector<Label> labels{E, E, N, N};
  RocCurve c = roc_curve(scores, labels);

  REQUIRE(c.fpr.size() == c.tpr.size());
  CHECK(c.fpr.front() == 0.0);
  CHECK(c.tpr.front() == 0.0);
  CHECK(c.fpr.back() == 1.0);
  CHECK(c.tpr.back() == 1.0);
  CHECK(std::isinf(c.thresholds.front()));
  // Unique scores 0.9, 0.7, 0.3 -> 3 sweep points + anchor.
  REQUIRE(c.fpr.size() == 4);
  // The tied 0.7 pair (one of each class) moves diagonally in one step.
  CHECK(c.fpr[2] == 0.5);
  CHECK(c.tpr[2] == 1.0);
  CHECK(c.thresholds[2] == 0.7);
  CHECK(c.auc == auroc(scores, labels));

  for (std::size_t i = 1; i < c.fpr.size(); ++i) {
    CHECK(c.fpr[i] >= c.fpr[i - 1]);
    CHECK(c.tpr[i] >= c.tpr[i - 1]);
  }
}

TEST_CASE("trapezoid area under the sweep curve equals auroc") {
  Rng rng(222);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 4 + static_cast<std::size_t>(rng.uniform(0, 120));
    std::vector<double> scores(n);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::floor(rng.uniform01() * 12) / 12.0;
      labels[i] = rng.bernoulli(0.5) ? E : N;
    }
    labels[0] = E;
    labels[1] = N;
    RocCurve c = roc_curve(scores, labels);
    double area = 0;
    for (std::size_t i = 1; i < c.fpr.size(); ++i)
      area += 0.5 * (c.tpr[i] + c.tpr[i - 1]) * (c.fpr[i] - c.fpr[i - 1]);
    REQUIRE(area == Catch::Approx(c.auc).margin(1e-12));
  }
}

TEST_CASE("tpr interpolation follows the envelope") {
  RocCurve c;
  c.fpr = {0.0, 0.0, 0.5, 1.0, 1.0};
  c.tpr = {0.0, 0.4, 0.6, 0.8, 1.0};
  c.thresholds = {0, 0, 0, 0, 0};
  // Exact hits on vertical runs take the top.
  CHECK(interpolate_tpr(c, 0.0) == 0.4);
  CHECK(interpolate_tpr(c, 1.0) == 1.0);
  CHECK(interpolate_tpr(c, 0.5) == 0.6);
  // Linear between vertices.
  CHECK(interpolate_tpr(c, 0.25) == Catch::Approx(0.5));
  CHECK(interpolate_tpr(c, 0.75) == Catch::Approx(0.7));
}

TEST_CASE("mean roc averages curves on the fpr grid") {
  // Two triangle curves whose average is computable by hand.
  RocCurve a;
  a.fpr = {0.0, 0.0, 1.0};
  a.tpr = {0.0, 1.0, 1.0};  // perfect: tpr 1 everywhere past fpr 0
  a.thresholds = {0, 0, 0};
  a.auc = 1.0;
  RocCurve b;
  b.fpr = {0.0, 1.0};
  b.tpr = {0.0, 1.0};  // chance diagonal
  b.thresholds = {0, 0};
  b.auc = 0.5;

  std::vector<RocCurve> curves{a, b};
  RocCurve m = mean_roc(curves);
  REQUIRE(m.fpr.size() == 101);
  CHECK(m.auc == 0.75);
  CHECK(m.tpr.front() == 0.5);   // (1 + 0) / 2 at fpr 0
  CHECK(m.tpr.back() == 1.0);
  // At fpr 0.5: (1 + 0.5) / 2.
  CHECK(m.tpr[50] == Catch::Approx(0.75));
  for (std::size_t i = 1; i < m.tpr.size(); ++i) CHECK(m.tpr[i] >= m.tpr[i - 1]);

  REQUIRE_THROWS_AS(mean_roc({}), Error);
}
