#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade {

// AUROC via the rank-sum identity: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg)
// with midranks, so score ties contribute 1/2. Exact in double arithmetic.
inline double auroc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size())
    fail(ErrorCategory::metric, "auroc: scores and labels differ in length");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (Label l : labels)
    if (l == Label::Expert) ++n_pos;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    fail(ErrorCategory::metric, "auroc: need both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == Label::Expert) rank_sum_pos += mid;
    i = j + 1;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1) / 2.0) / (np * nn);
}

// Threshold-sweep ROC. Points are emitted per distinct score (descending),
// so tied scores move the curve diagonally in one step. Includes (0,0)
// and (1,1) endpoints.
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // score at each step; +inf for the (0,0) anchor
  double auc = 0;
};

inline RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size())
    fail(ErrorCategory::metric, "roc_curve: scores and labels differ in length");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (Label l : labels)
    if (l == Label::Expert) ++n_pos;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    fail(ErrorCategory::metric, "roc_curve: need both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve c;
  c.fpr.push_back(0);
  c.tpr.push_back(0);
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == Label::Expert)
        ++tp;
      else
        ++fp;
    }
    c.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    c.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
    c.thresholds.push_back(scores[order[i]]);
    i = j + 1;
  }
  c.auc = auroc(scores, labels);
  return c;
}

// TPR at a given FPR by linear interpolation between curve vertices. An
// exact hit on a vertical run takes the top of the run (the achievable TPR
// at that FPR), matching the usual vertical-averaging convention.
inline double interpolate_tpr(const RocCurve& c, double fpr) {
  auto it = std::upper_bound(c.fpr.begin(), c.fpr.end(), fpr);
  if (it == c.fpr.begin()) return c.tpr.front();
  std::size_t lo = static_cast<std::size_t>(it - c.fpr.begin()) - 1;
  if (it == c.fpr.end() || c.fpr[lo] == fpr) return c.tpr[lo];
  double w = (fpr - c.fpr[lo]) / (c.fpr[lo + 1] - c.fpr[lo]);
  return c.tpr[lo] + w * (c.tpr[lo + 1] - c.tpr[lo]);
}

// Vertical averaging on a fixed FPR grid (0, 0.01, ..., 1).
inline RocCurve mean_roc(std::span<const RocCurve> curves) {
  if (curves.empty()) fail(ErrorCategory::metric, "mean_roc: no curves");
  RocCurve out;
  const int grid = 100;
  for (int g = 0; g <= grid; ++g) {
    double f = static_cast<double>(g) / grid;
    double t = 0;
    for (const auto& c : curves) t += interpolate_tpr(c, f);
    out.fpr.push_back(f);
    out.tpr.push_back(t / static_cast<double>(curves.size()));
    out.thresholds.push_back(0);
  }
  double auc = 0;
  for (const auto& c : curves) auc += c.auc;
  out.auc = auc / static_cast<double>(curves.size());
  return out;
}

}  // namespace gazegrade
