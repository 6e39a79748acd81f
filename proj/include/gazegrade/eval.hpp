#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/features.hpp"
#include "gazegrade/fixation.hpp"
#include "gazegrade/metrics.hpp"
#include "gazegrade/nn.hpp"
#include "gazegrade/rng.hpp"
#include "gazegrade/train.hpp"
#include "gazegrade/types.hpp"
#include "gazegrade/window.hpp"

namespace gazegrade {

enum class PhaseFilter { All, InitialOnly };

inline std::string to_string(PhaseFilter p) {
  return p == PhaseFilter::All ? "all" : "initial_only";
}

struct SplitPlan {
  std::vector<std::string> train, val, test;  // participant ids
  std::uint64_t seed = 0;
};

struct ParticipantRef {
  std::string id;
  Label label = Label::NonExpert;
};

// 4/1/1 experts and 4/1/1 sampled non-experts, subject-disjoint by
// construction. Ids are sorted before the seeded shuffle so the plan depends
// only on the id set and the seed.
inline SplitPlan make_split(std::span<const ParticipantRef> participants, std::uint64_t seed) {
  std::vector<std::string> experts, nonexperts;
  for (const auto& p : participants)
    (p.label == Label::Expert ? experts : nonexperts).push_back(p.id);
  std::sort(experts.begin(), experts.end());
  std::sort(nonexperts.begin(), nonexperts.end());
  experts.erase(std::unique(experts.begin(), experts.end()), experts.end());
  nonexperts.erase(std::unique(nonexperts.begin(), nonexperts.end()), nonexperts.end());

  if (experts.size() < 6)
    fail(ErrorCategory::config, "insufficient experts: have " +
                                    std::to_string(experts.size()) + ", need 6");
  if (nonexperts.size() < 6)
    fail(ErrorCategory::config, "insufficient non-experts: have " +
                                    std::to_string(nonexperts.size()) + ", need 6");

  Rng rng(derive_seed(seed, 0xA));
  rng.shuffle(experts);
  rng.shuffle(nonexperts);

  SplitPlan plan;
  plan.seed = seed;
  for (int i = 0; i < 4; ++i) plan.train.push_back(experts[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 4; ++i) plan.train.push_back(nonexperts[static_cast<std::size_t>(i)]);
  plan.val = {experts[4], nonexperts[4]};
  plan.test = {experts[5], nonexperts[5]};
  return plan;
}

inline SplitPlan make_split(std::span<const Session> sessions, std::uint64_t seed) {
  std::vector<ParticipantRef> refs;
  refs.reserve(sessions.size());
  for (const auto& s : sessions) refs.push_back({s.participant_id, s.label});
  return make_split(std::span<const ParticipantRef>(refs), seed);
}

// Window features of one session, before normalization.
struct SessionWindows {
  std::string participant_id;
  Label label = Label::NonExpert;
  std::vector<WindowFeatures> windows;
};

inline SessionWindows compute_session_windows(const Session& s, double window_size,
                                              const IdtParams& idt, PhaseFilter phase) {
  SessionWindows out;
  out.participant_id = s.participant_id;
  out.label = s.label;
  std::vector<Fixation> fixations = detect_fixations(s.track, idt);
  std::vector<WindowSpan> spans = generate_windows(s.duration(), window_size);
  std::vector<WindowData> windows;
  windows.reserve(spans.size());
  for (const auto& span : spans) windows.push_back(slice_window(s, span, fixations));
  if (phase == PhaseFilter::InitialOnly)
    std::erase_if(windows,
                  [](const WindowData& w) { return w.phase_tag != PhaseTag::InitialOnly; });
  out.windows.reserve(windows.size());
  for (const auto& w : windows) {
    WindowFeatures f = extract_window_features(w, s.track.nominal_rate);
    f.participant_id = s.participant_id;
    out.windows.push_back(std::move(f));
  }
  return out;
}

inline std::vector<SessionWindows> compute_all_windows(std::span<const Session> sessions,
                                                       double window_size,
                                                       const IdtParams& idt,
                                                       PhaseFilter phase) {
  std::vector<SessionWindows> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions)
    out.push_back(compute_session_windows(s, window_size, idt, phase));
  return out;
}

struct ModelRunResult {
  std::uint64_t seed = 0;
  double auroc = 0;
  SplitPlan split;
  RocCurve roc;
  nn::TrainingHistory history;
};

struct BatchResult {
  double window_size = 0;
  PhaseFilter phase = PhaseFilter::All;
  double mean_auroc = 0;
  double std_auroc = 0;       // sample standard deviation over models
  bool degenerate_std = false;  // single-model batch, std not meaningful
  std::vector<ModelRunResult> models;
  RocCurve mean_curve;
};

struct EvalConfig {
  double window_size = 5;
  int n_models = 12;
  PhaseFilter phase = PhaseFilter::All;
  std::uint64_t base_seed = 0;
  IdtParams idt;
  nn::ModelConfig model;  // seq_len is derived from the data, not taken from here
  nn::TrainConfig train;
};

namespace detail {

inline std::vector<WindowFeatures> gather_windows(
    const std::vector<SessionWindows>& all, std::span<const std::string> ids,
    const char* split_name) {
  std::vector<WindowFeatures> out;
  for (const auto& id : ids) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const SessionWindows& sw) { return sw.participant_id == id; });
    if (it == all.end())
      fail(ErrorCategory::config, std::string("split references unknown participant '") + id + "'");
    out.insert(out.end(), it->windows.begin(), it->windows.end());
  }
  if (out.empty())
    fail(ErrorCategory::config,
         std::string(split_name) + " split contains no windows (sessions too short?)");
  return out;
}

}  // namespace detail

// One full train/evaluate cycle at the given seed. Test scores pool every
// window of both test sessions.
inline ModelRunResult run_single_model(const std::vector<SessionWindows>& all,
                                       std::span<const ParticipantRef> participants,
                                       const EvalConfig& cfg, std::uint64_t run_seed) {
  ModelRunResult r;
  r.seed = run_seed;
  r.split = make_split(participants, run_seed);

  std::vector<WindowFeatures> train_set = detail::gather_windows(all, r.split.train, "train");
  std::vector<WindowFeatures> val_set = detail::gather_windows(all, r.split.val, "val");
  std::vector<WindowFeatures> test_set = detail::gather_windows(all, r.split.test, "test");

  FeatureStats stats = fit_normalizer(train_set);
  apply_normalizer_in_place(stats, train_set);
  apply_normalizer_in_place(stats, val_set);
  apply_normalizer_in_place(stats, test_set);

  nn::ModelConfig mc = cfg.model;
  mc.seq_len = train_set.front().seq_len;
  mc.seed = derive_seed(run_seed, 0x3);
  nn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(run_seed, 0x4);

  auto [model, history] = nn::train(nn::init_model<float>(mc), train_set, val_set, tc);
  r.history = std::move(history);

  nn::Workspace<float> ws;
  std::vector<double> scores = nn::predict_scores(model, test_set, ws);
  std::vector<Label> labels;
  labels.reserve(test_set.size());
  for (const auto& f : test_set) labels.push_back(f.label);
  r.roc = roc_curve(scores, labels);
  r.auroc = r.roc.auc;
  return r;
}

// n_models independent runs at seeds base_seed + i; each run re-splits,
// re-initializes, and re-trains, so both the non-expert sampling and the
// initialization vary across the batch.
inline BatchResult run_batch(std::span<const Session> sessions, const EvalConfig& cfg) {
  if (cfg.n_models < 1) fail(ErrorCategory::config, "n_models must be positive");
  if (sessions.empty()) fail(ErrorCategory::config, "run_batch: no sessions");
  double rate = sessions.front().track.nominal_rate;
  for (const auto& s : sessions)
    if (s.track.nominal_rate != rate)
      fail(ErrorCategory::config, "sessions disagree on nominal sampling rate");

  std::vector<SessionWindows> all =
      compute_all_windows(sessions, cfg.window_size, cfg.idt, cfg.phase);
  std::vector<ParticipantRef> participants;
  participants.reserve(sessions.size());
  for (const auto& s : sessions) participants.push_back({s.participant_id, s.label});

  BatchResult batch;
  batch.window_size = cfg.window_size;
  batch.phase = cfg.phase;
  for (int i = 0; i < cfg.n_models; ++i) {
    std::uint64_t run_seed = cfg.base_seed + static_cast<std::uint64_t>(i);
    try {
      batch.models.push_back(run_single_model(all, participants, cfg, run_seed));
    } catch (const Error& e) {
      fail(e.category(), "model run with seed " + std::to_string(run_seed) +
                             " failed: " + e.what());
    }
  }

  double sum = 0;
  for (const auto& m : batch.models) sum += m.auroc;
  batch.mean_auroc = sum / cfg.n_models;
  if (cfg.n_models == 1) {
    batch.std_auroc = 0;
    batch.degenerate_std = true;
  } else {
    double ss = 0;
    for (const auto& m : batch.models) {
      double d = m.auroc - batch.mean_auroc;
      ss += d * d;
    }
    batch.std_auroc = std::sqrt(ss / (cfg.n_models - 1));
  }

  std::vector<RocCurve> curves;
  curves.reserve(batch.models.size());
  for (const auto& m : batch.models) curves.push_back(m.roc);
  batch.mean_curve = mean_roc(curves);
  return batch;
}

struct TracePoint {
  double window_start = 0;
  double score = 0;
};

// Per-window expertise score over one session, in temporal order.
inline std::vector<TracePoint> softmax_trace(const nn::Model<float>& m,
                                             const FeatureStats& stats, const Session& s,
                                             double window_size, const IdtParams& idt = {}) {
  SessionWindows sw = compute_session_windows(s, window_size, idt, PhaseFilter::All);
  apply_normalizer_in_place(stats, sw.windows);
  nn::Workspace<float> ws;
  std::vector<double> scores = nn::predict_scores(m, sw.windows, ws);
  std::vector<TracePoint> trace;
  trace.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    trace.push_back({sw.windows[i].window_start_s, scores[i]});
  return trace;
}

}  // namespace gazegrade
