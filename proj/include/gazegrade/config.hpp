#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "gazegrade/error.hpp"
#include "gazegrade/fixation.hpp"
#include "gazegrade/heatmap.hpp"
#include "gazegrade/io.hpp"
#include "gazegrade/nn.hpp"
#include "gazegrade/synth.hpp"
#include "gazegrade/train.hpp"
#include "gazegrade/validate.hpp"

namespace gazegrade {

// Everything a run can configure, in one place. Parsing is strict: unknown
// keys are rejected with their dotted path, and every run echoes the fully
// resolved configuration so outputs are reproducible from the echo alone.
struct RunConfig {
  std::uint64_t seed = 0;
  double window_size_s = 5;
  bool initial_phase_only = false;
  int n_models = 12;
  CsvOptions csv;
  IdtParams idt;
  ValidateOptions validate;
  nn::ModelConfig model;
  nn::TrainConfig train;
  synth::SynthSpec synth;
  synth::BehaviorProfile expert_profile = synth::BehaviorProfile::expert();
  synth::BehaviorProfile nonexpert_profile = synth::BehaviorProfile::nonexpert();
  double stats_alpha = 0.05;
  std::string stats_granularity = "window";  // or "image"
  HeatmapParams heatmap;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    fail(ErrorCategory::config, "config section '" + path + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      fail(ErrorCategory::config,
           "unknown config key: " + (path.empty() ? item.key() : path + "." + item.key()));
  }
}

template <typename T>
void get_to(const nlohmann::json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCategory::config,
         "bad value type for config key: " + (path.empty() ? key : path + "." + key));
  }
}

inline void parse_profile(const nlohmann::json& j, const std::string& path,
                          synth::BehaviorProfile& p) {
  check_keys(j, path,
             {"fixation_duration_median_ms", "fixation_duration_sigma_log",
              "fixation_duration_min_ms", "fixation_duration_max_ms",
              "saccade_amplitude_median", "saccade_amplitude_sigma_log", "fixation_rate_hz",
              "jitter_std", "initial_phase_mean_s", "initial_phase_std_s",
              "final_phase_mean_s", "final_phase_std_s", "confidence_dropout"});
  get_to(j, "fixation_duration_median_ms", path, p.fixation_duration_median_ms);
  get_to(j, "fixation_duration_sigma_log", path, p.fixation_duration_sigma_log);
  get_to(j, "fixation_duration_min_ms", path, p.fixation_duration_min_ms);
  get_to(j, "fixation_duration_max_ms", path, p.fixation_duration_max_ms);
  get_to(j, "saccade_amplitude_median", path, p.saccade_amplitude_median);
  get_to(j, "saccade_amplitude_sigma_log", path, p.saccade_amplitude_sigma_log);
  get_to(j, "fixation_rate_hz", path, p.fixation_rate_hz);
  get_to(j, "jitter_std", path, p.jitter_std);
  get_to(j, "initial_phase_mean_s", path, p.initial_phase_mean_s);
  get_to(j, "initial_phase_std_s", path, p.initial_phase_std_s);
  get_to(j, "final_phase_mean_s", path, p.final_phase_mean_s);
  get_to(j, "final_phase_std_s", path, p.final_phase_std_s);
  get_to(j, "confidence_dropout", path, p.confidence_dropout);
}

inline nlohmann::json profile_json(const synth::BehaviorProfile& p) {
  return {{"fixation_duration_median_ms", p.fixation_duration_median_ms},
          {"fixation_duration_sigma_log", p.fixation_duration_sigma_log},
          {"fixation_duration_min_ms", p.fixation_duration_min_ms},
          {"fixation_duration_max_ms", p.fixation_duration_max_ms},
          {"saccade_amplitude_median", p.saccade_amplitude_median},
          {"saccade_amplitude_sigma_log", p.saccade_amplitude_sigma_log},
          {"fixation_rate_hz", p.fixation_rate_hz},
          {"jitter_std", p.jitter_std},
          {"initial_phase_mean_s", p.initial_phase_mean_s},
          {"initial_phase_std_s", p.initial_phase_std_s},
          {"final_phase_mean_s", p.final_phase_mean_s},
          {"final_phase_std_s", p.final_phase_std_s},
          {"confidence_dropout", p.confidence_dropout}};
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  detail::check_keys(j, "",
                     {"seed", "window_size_s", "initial_phase_only", "n_models", "csv", "idt",
                      "validate", "model", "train", "synth", "expert_profile",
                      "nonexpert_profile", "stats", "heatmap"});
  detail::get_to(j, "seed", "", c.seed);
  detail::get_to(j, "window_size_s", "", c.window_size_s);
  detail::get_to(j, "initial_phase_only", "", c.initial_phase_only);
  detail::get_to(j, "n_models", "", c.n_models);

  if (j.contains("csv")) {
    const auto& s = j.at("csv");
    detail::check_keys(s, "csv", {"confidence_threshold", "nominal_rate"});
    detail::get_to(s, "confidence_threshold", "csv", c.csv.confidence_threshold);
    detail::get_to(s, "nominal_rate", "csv", c.csv.nominal_rate);
  }
  if (j.contains("idt")) {
    const auto& s = j.at("idt");
    detail::check_keys(s, "idt", {"dispersion_threshold", "min_duration_ms", "max_duration_ms"});
    detail::get_to(s, "dispersion_threshold", "idt", c.idt.dispersion_threshold);
    detail::get_to(s, "min_duration_ms", "idt", c.idt.min_duration_ms);
    detail::get_to(s, "max_duration_ms", "idt", c.idt.max_duration_ms);
  }
  if (j.contains("validate")) {
    const auto& s = j.at("validate");
    detail::check_keys(s, "validate", {"max_dropped_fraction", "max_gap_s"});
    detail::get_to(s, "max_dropped_fraction", "validate", c.validate.max_dropped_fraction);
    detail::get_to(s, "max_gap_s", "validate", c.validate.max_gap_s);
  }
  if (j.contains("model")) {
    const auto& s = j.at("model");
    detail::check_keys(
        s, "model", {"stem_channels", "block_channels", "kernel", "scalar_hidden", "fusion_hidden"});
    detail::get_to(s, "stem_channels", "model", c.model.stem_channels);
    detail::get_to(s, "block_channels", "model", c.model.block_channels);
    detail::get_to(s, "kernel", "model", c.model.kernel);
    detail::get_to(s, "scalar_hidden", "model", c.model.scalar_hidden);
    detail::get_to(s, "fusion_hidden", "model", c.model.fusion_hidden);
  }
  if (j.contains("train")) {
    const auto& s = j.at("train");
    detail::check_keys(s, "train",
                       {"learning_rate", "momentum", "batch_size", "epochs", "patience",
                        "early_stopping", "cosine_decay", "balanced_sampling"});
    detail::get_to(s, "learning_rate", "train", c.train.learning_rate);
    detail::get_to(s, "momentum", "train", c.train.momentum);
    detail::get_to(s, "batch_size", "train", c.train.batch_size);
    detail::get_to(s, "epochs", "train", c.train.epochs);
    detail::get_to(s, "patience", "train", c.train.patience);
    detail::get_to(s, "early_stopping", "train", c.train.early_stopping);
    detail::get_to(s, "cosine_decay", "train", c.train.cosine_decay);
    detail::get_to(s, "balanced_sampling", "train", c.train.balanced_sampling);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    detail::check_keys(s, "synth",
                       {"n_experts", "n_nonexperts", "images_per_session", "sampling_rate"});
    detail::get_to(s, "n_experts", "synth", c.synth.n_experts);
    detail::get_to(s, "n_nonexperts", "synth", c.synth.n_nonexperts);
    detail::get_to(s, "images_per_session", "synth", c.synth.images_per_session);
    detail::get_to(s, "sampling_rate", "synth", c.synth.sampling_rate);
  }
  if (j.contains("expert_profile"))
    detail::parse_profile(j.at("expert_profile"), "expert_profile", c.expert_profile);
  if (j.contains("nonexpert_profile"))
    detail::parse_profile(j.at("nonexpert_profile"), "nonexpert_profile", c.nonexpert_profile);
  if (j.contains("stats")) {
    const auto& s = j.at("stats");
    detail::check_keys(s, "stats", {"alpha", "granularity"});
    detail::get_to(s, "alpha", "stats", c.stats_alpha);
    detail::get_to(s, "granularity", "stats", c.stats_granularity);
    if (c.stats_granularity != "window" && c.stats_granularity != "image")
      fail(ErrorCategory::config, "stats.granularity must be 'window' or 'image'");
  }
  if (j.contains("heatmap")) {
    const auto& s = j.at("heatmap");
    detail::check_keys(s, "heatmap", {"width", "height", "kernel_sigma_px"});
    detail::get_to(s, "width", "heatmap", c.heatmap.width);
    detail::get_to(s, "height", "heatmap", c.heatmap.height);
    detail::get_to(s, "kernel_sigma_px", "heatmap", c.heatmap.kernel_sigma_px);
  }
  return c;
}

inline RunConfig load_run_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCategory::io, "cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, "config file " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

// Full echo of the resolved configuration, written into every run's output
// directory.
inline nlohmann::json run_config_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["window_size_s"] = c.window_size_s;
  j["initial_phase_only"] = c.initial_phase_only;
  j["n_models"] = c.n_models;
  j["csv"] = {{"confidence_threshold", c.csv.confidence_threshold},
              {"nominal_rate", c.csv.nominal_rate}};
  j["idt"] = {{"dispersion_threshold", c.idt.dispersion_threshold},
              {"min_duration_ms", c.idt.min_duration_ms},
              {"max_duration_ms", c.idt.max_duration_ms}};
  j["validate"] = {{"max_dropped_fraction", c.validate.max_dropped_fraction},
                   {"max_gap_s", c.validate.max_gap_s}};
  j["model"] = {{"stem_channels", c.model.stem_channels},
                {"block_channels", c.model.block_channels},
                {"kernel", c.model.kernel},
                {"scalar_hidden", c.model.scalar_hidden},
                {"fusion_hidden", c.model.fusion_hidden}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},
                {"patience", c.train.patience},
                {"early_stopping", c.train.early_stopping},
                {"cosine_decay", c.train.cosine_decay},
                {"balanced_sampling", c.train.balanced_sampling}};
  j["synth"] = {{"n_experts", c.synth.n_experts},
                {"n_nonexperts", c.synth.n_nonexperts},
                {"images_per_session", c.synth.images_per_session},
                {"sampling_rate", c.synth.sampling_rate}};
  j["expert_profile"] = detail::profile_json(c.expert_profile);
  j["nonexpert_profile"] = detail::profile_json(c.nonexpert_profile);
  j["stats"] = {{"alpha", c.stats_alpha}, {"granularity", c.stats_granularity}};
  j["heatmap"] = {{"width", c.heatmap.width},
                  {"height", c.heatmap.height},
                  {"kernel_sigma_px", c.heatmap.kernel_sigma_px}};
  return j;
}

}  // namespace gazegrade
