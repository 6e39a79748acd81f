#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/rng.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade::synth {

// Generator knobs, not population claims. Defaults give clearly separable
// groups; push the medians together to probe classifier resolution.
struct BehaviorProfile {
  double fixation_duration_median_ms = 380;
  double fixation_duration_sigma_log = 0.45;
  double fixation_duration_min_ms = 80;
  double fixation_duration_max_ms = 4000;
  double saccade_amplitude_median = 0.15;  // normalized screen units
  double saccade_amplitude_sigma_log = 0.5;
  double fixation_rate_hz = 2.2;
  double jitter_std = 0.003;  // within-fixation positional noise
  double initial_phase_mean_s = 9.5;
  double initial_phase_std_s = 1.5;
  double final_phase_mean_s = 2.0;
  double final_phase_std_s = 0.5;
  double confidence_dropout = 0.0;  // fraction of samples emitted below threshold

  void validate() const {
    if (!(fixation_duration_median_ms > 0) || !(saccade_amplitude_median > 0))
      fail(ErrorCategory::config, "profile medians must be positive");
    if (!(fixation_rate_hz > 0)) fail(ErrorCategory::config, "fixation rate must be positive");
    if (jitter_std < 0 || confidence_dropout < 0 || confidence_dropout > 1)
      fail(ErrorCategory::config, "invalid jitter or dropout");
    if (!(initial_phase_mean_s > 0) || !(final_phase_mean_s > 0))
      fail(ErrorCategory::config, "phase durations must be positive");
  }

  static BehaviorProfile expert() {
    BehaviorProfile p;
    p.fixation_duration_median_ms = 220;
    p.saccade_amplitude_median = 0.08;
    p.fixation_rate_hz = 3.5;
    return p;
  }
  static BehaviorProfile nonexpert() { return BehaviorProfile{}; }
};

struct SynthSpec {
  int n_experts = 10;
  int n_nonexperts = 10;
  int images_per_session = 54;
  double sampling_rate = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_experts < 0 || n_nonexperts < 0) fail(ErrorCategory::config, "counts must be >= 0");
    if (images_per_session < 1) fail(ErrorCategory::config, "need at least one image");
    if (!(sampling_rate > 0)) fail(ErrorCategory::config, "sampling rate must be positive");
  }
};

// Ground truth the detector is later checked against.
struct TrueFixation {
  double start = 0;
  double duration_ms = 0;
  double x = 0, y = 0;
};

struct SynthSession {
  Session session;
  std::vector<TrueFixation> true_fixations;
};

namespace detail {

// Fold a coordinate back into [0,1] by mirror reflection at both edges.
inline double reflect(double v) {
  v = std::fmod(v, 2.0);
  if (v < 0) v += 2.0;
  return v <= 1.0 ? v : 2.0 - v;
}

}  // namespace detail

// Alternating fixation/saccade process sampled on the global clock
// t_k = k / rate. Fixation durations and saccade amplitudes are log-normal;
// the saccade transit time absorbs the difference between the sampled
// fixation duration and the configured fixation rate's cycle length.
inline SynthSession generate_session(const BehaviorProfile& profile, int n_images,
                                     double rate, std::uint64_t seed,
                                     const std::string& participant_id, Label label) {
  profile.validate();
  if (n_images < 1) fail(ErrorCategory::config, "need at least one image");
  if (!(rate > 0)) fail(ErrorCategory::config, "sampling rate must be positive");

  Rng rng(seed);
  SynthSession out;
  Session& s = out.session;
  s.participant_id = participant_id;
  s.label = label;
  s.track.nominal_rate = rate;

  // Image schedule first: contiguous events, phases clipped to sane floors.
  double t = 0;
  for (int i = 0; i < n_images; ++i) {
    ImageEvent ev;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "img%03d", i);
    ev.image_id = buf;
    double init_dur = std::max(2.0, rng.normal(profile.initial_phase_mean_s,
                                               profile.initial_phase_std_s));
    double final_dur = std::max(0.5, rng.normal(profile.final_phase_mean_s,
                                                profile.final_phase_std_s));
    ev.shown_at = t;
    ev.initial_decision_at = t + init_dur;
    ev.final_decision_at = t + init_dur + final_dur;
    ev.ground_truth = rng.bernoulli(0.5) ? "genuine" : "spoof";
    ev.initial_decision = rng.bernoulli(0.5) ? "genuine" : "spoof";
    ev.final_decision = rng.bernoulli(0.5) ? ev.initial_decision : ev.ground_truth;
    t = ev.final_decision_at;
    s.events.push_back(std::move(ev));
  }
  const double total = t;
  const double cycle = 1.0 / profile.fixation_rate_hz;

  double x = 0.5, y = 0.5;
  double seg_start = 0;
  long long next_k = 0;  // next global sample index to emit

  auto emit_segment = [&](double seg_end, bool fixating, double x0, double y0, double x1,
                          double y1) {
    while (next_k / rate < seg_end) {
      double tk = next_k / rate;
      if (tk >= total) return;
      double px, py;
      if (fixating) {
        px = detail::reflect(x0 + rng.normal(0, profile.jitter_std));
        py = detail::reflect(y0 + rng.normal(0, profile.jitter_std));
      } else {
        double w = (tk - seg_start) / (seg_end - seg_start);
        px = x0 + w * (x1 - x0);
        py = y0 + w * (y1 - y0);
      }
      double conf = 1.0;
      if (profile.confidence_dropout > 0 && rng.bernoulli(profile.confidence_dropout))
        conf = 0.1;
      s.track.samples.push_back({tk, px, py, conf});
      ++next_k;
    }
  };

  while (seg_start < total) {
    double dur_ms = std::clamp(
        rng.lognormal_median(profile.fixation_duration_median_ms,
                             profile.fixation_duration_sigma_log),
        profile.fixation_duration_min_ms, profile.fixation_duration_max_ms);
    double fix_end = std::min(total, seg_start + dur_ms / 1000.0);
    out.true_fixations.push_back({seg_start, (fix_end - seg_start) * 1000.0, x, y});
    emit_segment(fix_end, true, x, y, x, y);
    if (fix_end >= total) break;

    double amp = rng.lognormal_median(profile.saccade_amplitude_median,
                                      profile.saccade_amplitude_sigma_log);
    double angle = rng.uniform(0, 2 * std::numbers::pi);
    double nx = detail::reflect(x + amp * std::cos(angle));
    double ny = detail::reflect(y + amp * std::sin(angle));
    double transit = std::clamp(cycle - dur_ms / 1000.0, 0.01, 0.2);
    double sac_end = std::min(total, fix_end + transit);
    seg_start = fix_end;
    emit_segment(sac_end, false, x, y, nx, ny);
    x = nx;
    y = ny;
    seg_start = sac_end;
  }

  // The sample clock cannot land exactly on the schedule's end, so snap the
  // last event's close to the final sample; otherwise the track would not
  // cover the event span.
  if (!s.track.samples.empty())
    s.events.back().final_decision_at =
        std::min(s.events.back().final_decision_at, s.track.samples.back().t);

  return out;
}

inline std::vector<SynthSession> generate_cohort(const BehaviorProfile& expert_profile,
                                                 const BehaviorProfile& nonexpert_profile,
                                                 const SynthSpec& spec) {
  spec.validate();
  expert_profile.validate();
  nonexpert_profile.validate();
  std::vector<SynthSession> out;
  out.reserve(static_cast<std::size_t>(spec.n_experts + spec.n_nonexperts));
  char buf[32];
  for (int i = 0; i < spec.n_experts; ++i) {
    std::snprintf(buf, sizeof(buf), "expert%02d", i);
    out.push_back(generate_session(expert_profile, spec.images_per_session,
                                   spec.sampling_rate, derive_seed(spec.seed, 0x100 + i),
                                   buf, Label::Expert));
  }
  for (int i = 0; i < spec.n_nonexperts; ++i) {
    std::snprintf(buf, sizeof(buf), "novice%02d", i);
    out.push_back(generate_session(nonexpert_profile, spec.images_per_session,
                                   spec.sampling_rate, derive_seed(spec.seed, 0x200 + i),
                                   buf, Label::NonExpert));
  }
  return out;
}

}  // namespace gazegrade::synth
