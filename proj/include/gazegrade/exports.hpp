#pragma once

#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazegrade/eval.hpp"
#include "gazegrade/features.hpp"
#include "gazegrade/io.hpp"
#include "gazegrade/metrics.hpp"
#include "gazegrade/stats.hpp"
#include "gazegrade/train.hpp"

namespace gazegrade {

namespace detail {

template <typename WriteFn>
void write_text_file(const std::string& path, WriteFn&& fn) {
  std::ofstream os(path, std::ios::binary);  // binary: no platform newline surprises
  if (!os) fail(ErrorCategory::io, "cannot open for writing: " + path);
  fn(os);
  if (!os) fail(ErrorCategory::io, "write failed: " + path);
}

}  // namespace detail

inline void write_feature_matrix_csv(std::ostream& os, std::span<const WindowFeatures> fs) {
  os << "participant_id,window_index,afd_ms,fc,aed,label,phase_tag\n";
  for (const auto& f : fs)
    os << f.participant_id << ',' << f.window_index << ',' << detail::fmt_double(f.afd_ms)
       << ',' << detail::fmt_double(f.fc) << ',' << detail::fmt_double(f.aed) << ','
       << to_string(f.label) << ',' << to_string(f.phase_tag) << '\n';
}

// Per-participant window counts; a quick sanity view of how much data each
// session contributes at a given window size.
struct InventoryRow {
  std::string participant_id;
  Label label = Label::NonExpert;
  double window_size = 0;
  std::size_t n_windows = 0;
  std::size_t n_initial_only = 0;
};

inline InventoryRow inventory_row(const SessionWindows& sw, double window_size) {
  InventoryRow r;
  r.participant_id = sw.participant_id;
  r.label = sw.label;
  r.window_size = window_size;
  r.n_windows = sw.windows.size();
  for (const auto& w : sw.windows)
    if (w.phase_tag == PhaseTag::InitialOnly) ++r.n_initial_only;
  return r;
}

inline void write_inventory_csv(std::ostream& os, std::span<const InventoryRow> rows) {
  os << "participant_id,label,window_size_s,n_windows,n_initial_only\n";
  for (const auto& r : rows)
    os << r.participant_id << ',' << to_string(r.label) << ','
       << detail::fmt_double(r.window_size) << ',' << r.n_windows << ',' << r.n_initial_only
       << '\n';
}

// Table-style per-image rows; gri_rescaled is the per-session min-max view.
inline void write_image_features_csv(std::ostream& os,
                                     const std::string& participant_id,
                                     std::span<const ImageFeatures> imgs,
                                     std::span<const double> gri_rescaled) {
  os << "participant_id,image_id,afd_ms,fc,aed,gri,gri_rescaled,label\n";
  for (std::size_t i = 0; i < imgs.size(); ++i)
    os << participant_id << ',' << imgs[i].image_id << ','
       << detail::fmt_double(imgs[i].afd_ms) << ',' << detail::fmt_double(imgs[i].fc) << ','
       << detail::fmt_double(imgs[i].aed) << ',' << detail::fmt_double(imgs[i].gri) << ','
       << detail::fmt_double(i < gri_rescaled.size() ? gri_rescaled[i] : 0.0) << ','
       << to_string(imgs[i].label) << '\n';
}

inline nlohmann::json comparison_json(const GroupComparison& c) {
  return {{"feature", c.feature},
          {"u", c.test.u1},
          {"p", c.test.p_two_sided},
          {"n1", c.test.n1},
          {"n2", c.test.n2},
          {"method", c.test.exact ? "exact" : "normal_approx"},
          {"alpha", c.test.alpha},
          {"significant", c.test.significant},
          {"direction", c.direction},
          {"median_expert", c.median_expert},
          {"median_nonexpert", c.median_nonexpert}};
}

inline void write_stats_report_json(std::ostream& os,
                                    std::span<const GroupComparison> comparisons,
                                    const std::string& granularity) {
  nlohmann::json j;
  j["granularity"] = granularity;
  j["features"] = nlohmann::json::array();
  for (const auto& c : comparisons) j["features"].push_back(comparison_json(c));
  os << j.dump(2) << '\n';
}

inline void write_metrics_json(std::ostream& os, const BatchResult& b) {
  nlohmann::json j;
  j["window_size_s"] = b.window_size;
  j["phase_filter"] = to_string(b.phase);
  j["n_models"] = b.models.size();
  j["mean_auroc"] = b.mean_auroc;
  j["std_auroc"] = b.std_auroc;
  j["std_is_degenerate"] = b.degenerate_std;
  j["per_model"] = nlohmann::json::array();
  for (const auto& m : b.models) {
    nlohmann::json e;
    e["seed"] = m.seed;
    e["auroc"] = m.auroc;
    e["split"] = {{"train", m.split.train}, {"val", m.split.val}, {"test", m.split.test}};
    e["epochs_run"] = m.history.epochs.size();
    e["best_val_auroc"] = m.history.best_val_auroc;
    j["per_model"].push_back(std::move(e));
  }
  os << j.dump(2) << '\n';
}

inline void write_roc_csv(std::ostream& os, const RocCurve& c) {
  os << "fpr,tpr,threshold\n";
  for (std::size_t i = 0; i < c.fpr.size(); ++i)
    os << detail::fmt_double(c.fpr[i]) << ',' << detail::fmt_double(c.tpr[i]) << ','
       << detail::fmt_double(c.thresholds[i]) << '\n';
}

inline void write_trace_csv(std::ostream& os, std::span<const TracePoint> trace) {
  os << "window_start_s,expertise_score\n";
  for (const auto& p : trace)
    os << detail::fmt_double(p.window_start) << ',' << detail::fmt_double(p.score) << '\n';
}

inline void write_history_csv(std::ostream& os, const nn::TrainingHistory& h) {
  os << "epoch,learning_rate,train_loss,val_auroc\n";
  for (const auto& e : h.epochs)
    os << e.epoch << ',' << detail::fmt_double(e.learning_rate) << ','
       << detail::fmt_double(e.train_loss) << ',' << detail::fmt_double(e.val_auroc) << '\n';
}

}  // namespace gazegrade
