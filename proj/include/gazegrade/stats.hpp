#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"

namespace gazegrade {

enum class MannWhitneyMethod { Auto, Normal, Exact };

struct UTestResult {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double u1 = 0;  // statistic from the first group's side
  double u2 = 0;
  double mean_u = 0;
  double z = 0;        // normal path only
  double p_two_sided = 1;
  double alpha = 0.05;
  bool significant = false;
  bool exact = false;
};

namespace detail {

// Midranks over the pooled sample; tie-group sizes returned for the
// variance correction.
inline std::vector<double> midranks(std::span<const double> pooled,
                                    std::vector<std::size_t>* tie_sizes) {
  std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    double mid = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    if (tie_sizes && j > i) tie_sizes->push_back(j - i + 1);
    i = j + 1;
  }
  return ranks;
}

inline double exact_p(std::span<const double> ranks, std::size_t n1, double u_obs,
                      double mean_u) {
  std::size_t n = ranks.size();
  const double offset = static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  const double threshold = std::abs(u_obs - mean_u) - 1e-12;

  // Walk all C(n, n1) group-1 assignments; ranks are fixed by the pooled
  // values, so each assignment's U is just a rank-sum shift.
  std::vector<std::size_t> idx(n1);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::uint64_t hits = 0, total = 0;
  while (true) {
    double rank_sum = 0;
    for (std::size_t k : idx) rank_sum += ranks[k];
    double u = rank_sum - offset;
    if (std::abs(u - mean_u) >= threshold) ++hits;
    ++total;

    std::size_t pos = n1;
    while (pos > 0 && idx[pos - 1] == n - n1 + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t k = pos; k < n1; ++k) idx[k] = idx[k - 1] + 1;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace detail

// Two-sided Mann-Whitney U. Auto runs the exact permutation test when
// n1*n2 <= 64 and the tie-corrected normal approximation (with continuity
// correction) otherwise.
inline UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                  double alpha = 0.05,
                                  MannWhitneyMethod method = MannWhitneyMethod::Auto) {
  if (a.empty() || b.empty())
    fail(ErrorCategory::metric, "mann_whitney_u: both groups must be non-empty");
  if (!(alpha > 0 && alpha < 1))
    fail(ErrorCategory::config, "mann_whitney_u: alpha must lie in (0, 1)");
  UTestResult r;
  r.alpha = alpha;
  r.n1 = a.size();
  r.n2 = b.size();
  const double n1 = static_cast<double>(r.n1);
  const double n2 = static_cast<double>(r.n2);
  const double n = n1 + n2;

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> tie_sizes;
  std::vector<double> ranks = detail::midranks(pooled, &tie_sizes);

  double rank_sum1 = 0;
  for (std::size_t i = 0; i < r.n1; ++i) rank_sum1 += ranks[i];
  r.u1 = rank_sum1 - n1 * (n1 + 1) / 2.0;
  r.u2 = n1 * n2 - r.u1;
  r.mean_u = n1 * n2 / 2.0;

  bool exact = method == MannWhitneyMethod::Exact ||
               (method == MannWhitneyMethod::Auto && r.n1 * r.n2 <= 64);
  if (exact) {
    r.exact = true;
    r.p_two_sided = detail::exact_p(ranks, r.n1, r.u1, r.mean_u);
    r.significant = r.p_two_sided < alpha;
    return r;
  }

  double tie_term = 0;
  for (std::size_t t : tie_sizes) {
    double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  double var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)));
  if (var <= 0) {
    // All pooled values identical; no evidence either way.
    r.z = 0;
    r.p_two_sided = 1;
    return r;
  }
  double diff = r.u1 - r.mean_u;
  double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);  // continuity, toward the mean
  r.z = (diff + cc) / std::sqrt(var);
  r.p_two_sided = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  r.significant = r.p_two_sided < alpha;
  return r;
}

inline double median(std::vector<double> v) {
  if (v.empty()) fail(ErrorCategory::metric, "median of empty set");
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

inline double mean(std::span<const double> v) {
  if (v.empty()) fail(ErrorCategory::metric, "mean of empty set");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// One feature's expert-vs-non-expert contrast.
struct GroupComparison {
  std::string feature;
  std::size_t n_expert = 0;
  std::size_t n_nonexpert = 0;
  double median_expert = 0;
  double median_nonexpert = 0;
  double mean_expert = 0;
  double mean_nonexpert = 0;
  UTestResult test;
  std::string direction;  // "expert_lower", "expert_higher", or "none"
};

inline GroupComparison compare_groups(const std::string& feature,
                                      std::span<const double> expert,
                                      std::span<const double> nonexpert,
                                      double alpha = 0.05,
                                      MannWhitneyMethod method = MannWhitneyMethod::Auto) {
  GroupComparison c;
  c.feature = feature;
  c.n_expert = expert.size();
  c.n_nonexpert = nonexpert.size();
  c.test = mann_whitney_u(expert, nonexpert, alpha, method);
  c.median_expert = median({expert.begin(), expert.end()});
  c.median_nonexpert = median({nonexpert.begin(), nonexpert.end()});
  c.mean_expert = mean(expert);
  c.mean_nonexpert = mean(nonexpert);
  if (c.median_expert < c.median_nonexpert)
    c.direction = "expert_lower";
  else if (c.median_expert > c.median_nonexpert)
    c.direction = "expert_higher";
  else
    c.direction = "none";
  return c;
}

}  // namespace gazegrade
