// Generates a small synthetic cohort and prints the expert/non-expert
// contrast for the three per-window statistics.

#include <cstdio>
#include <vector>

#include "gazegrade/eval.hpp"
#include "gazegrade/stats.hpp"
#include "gazegrade/synth.hpp"

using namespace gazegrade;

int main() {
  synth::SynthSpec spec;
  spec.n_experts = 4;
  spec.n_nonexperts = 4;
  spec.images_per_session = 6;
  spec.sampling_rate = 50;
  spec.seed = 7;
  std::vector<synth::SynthSession> cohort = synth::generate_cohort(
      synth::BehaviorProfile::expert(), synth::BehaviorProfile::nonexpert(), spec);

  std::vector<Session> sessions;
  sessions.reserve(cohort.size());
  for (auto& c : cohort) sessions.push_back(std::move(c.session));

  std::vector<double> afd[2], fc[2], aed[2];
  for (const SessionWindows& sw :
       compute_all_windows(sessions, 5.0, IdtParams{}, PhaseFilter::All)) {
    int g = sw.label == Label::Expert ? 0 : 1;
    for (const WindowFeatures& w : sw.windows) {
      afd[g].push_back(w.afd_ms);
      fc[g].push_back(w.fc);
      aed[g].push_back(w.aed);
    }
  }

  std::printf("%-8s %-14s %10s %10s %8s\n", "feature", "direction", "median_e", "median_n",
              "p");
  for (const auto& [name, e, n] :
       {std::tuple{"afd_ms", &afd[0], &afd[1]}, std::tuple{"fc", &fc[0], &fc[1]},
        std::tuple{"aed", &aed[0], &aed[1]}}) {
    GroupComparison c = compare_groups(name, *e, *n);
    std::printf("%-8s %-14s %10.3f %10.3f %8.2g\n", name, c.direction.c_str(),
                c.median_expert, c.median_nonexpert, c.test.p_two_sided);
  }
  return 0;
}
