// Command-line front end: every subcommand reads an optional JSON config,
// applies flag overrides, echoes the resolved config into its output
// directory, and writes deterministic outputs. Wall-clock timestamps go to
// run_meta.json and nowhere else, so byte-comparing primary outputs across
// reruns is meaningful.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazegrade/checkpoint.hpp"
#include "gazegrade/config.hpp"
#include "gazegrade/eval.hpp"
#include "gazegrade/exports.hpp"
#include "gazegrade/features.hpp"
#include "gazegrade/fixation.hpp"
#include "gazegrade/heatmap.hpp"
#include "gazegrade/io.hpp"
#include "gazegrade/stats.hpp"
#include "gazegrade/store.hpp"
#include "gazegrade/synth.hpp"
#include "gazegrade/validate.hpp"

namespace fs = std::filesystem;
using namespace gazegrade;

namespace {

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCategory::io, "cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void echo_config(const fs::path& out, const RunConfig& cfg) {
  detail::write_text_file((out / "config.json").string(),
                          [&](std::ostream& os) { os << run_config_json(cfg).dump(2) << '\n'; });
}

void write_run_meta(const fs::path& out, const std::vector<std::string>& argv,
                    std::chrono::system_clock::time_point started) {
  nlohmann::json j;
  j["invocation"] = argv;
  j["started_utc"] = iso_utc(started);
  j["finished_utc"] = iso_utc(std::chrono::system_clock::now());
  detail::write_text_file((out / "run_meta.json").string(),
                          [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// Flags shared by most subcommands. Option presence is queried through the
// CLI11 option pointers so a flag only overrides the config when given.
struct Common {
  std::string config_file;
  std::string out_dir;
  std::uint64_t seed = 0;
  double window_size = 5;
  bool initial_phase_only = false;
  int n_models = 12;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* window_opt = nullptr;
  CLI::Option* phase_opt = nullptr;
  CLI::Option* models_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, bool with_window, bool with_models) {
  cmd->add_option("--config", c.config_file, "JSON run configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir, "output directory (created if missing)")->required();
  c.seed_opt = cmd->add_option("--seed", c.seed, "master seed override");
  if (with_window) {
    c.window_opt = cmd->add_option("--window-size", c.window_size,
                                   "window length in seconds (5, 10, 15, 20, or 30)");
    c.phase_opt = cmd->add_flag("--initial-phase-only", c.initial_phase_only,
                                "use only windows before the initial decision");
  }
  if (with_models)
    c.models_opt = cmd->add_option("--n-models", c.n_models, "models per evaluation batch");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_file.empty() ? RunConfig{} : load_run_config_file(c.config_file);
  if (c.seed_opt && c.seed_opt->count()) cfg.seed = c.seed;
  if (c.window_opt && c.window_opt->count()) {
    static const std::set<double> allowed{5, 10, 15, 20, 30};
    if (!allowed.count(c.window_size))
      fail(ErrorCategory::config, "--window-size must be one of 5, 10, 15, 20, 30");
    cfg.window_size_s = c.window_size;
  }
  if (c.phase_opt && c.phase_opt->count()) cfg.initial_phase_only = true;
  if (c.models_opt && c.models_opt->count()) cfg.n_models = c.n_models;
  if (!(cfg.window_size_s > 0)) fail(ErrorCategory::config, "window size must be positive");
  if (cfg.n_models < 1) fail(ErrorCategory::config, "n_models must be positive");
  return cfg;
}

PhaseFilter phase_of(const RunConfig& cfg) {
  if (!cfg.initial_phase_only) return PhaseFilter::All;
  if (cfg.window_size_s > 10)
    std::cerr << "note: " << cfg.window_size_s
              << " s windows rarely fit inside an initial decision phase; "
                 "expect few or no windows\n";
  return PhaseFilter::InitialOnly;
}

std::vector<Session> load_sessions(const std::string& store, const RunConfig& cfg) {
  std::vector<Session> sessions = load_store_sessions(store, cfg.csv);
  if (sessions.empty())
    fail(ErrorCategory::config, "store '" + store + "' has no usable sessions");
  return sessions;
}

void cmd_synth(const RunConfig& cfg, const fs::path& out) {
  synth::SynthSpec sp = cfg.synth;
  sp.seed = cfg.seed;
  auto cohort = synth::generate_cohort(cfg.expert_profile, cfg.nonexpert_profile, sp);
  std::vector<Session> sessions;
  sessions.reserve(cohort.size());
  for (auto& s : cohort) sessions.push_back(std::move(s.session));
  StoreIndex index = write_session_store(out, sessions, cfg.validate);
  std::cout << "wrote " << index.sessions.size() << " sessions to " << out.string() << '\n';
}

void cmd_ingest(const std::vector<std::string>& manifests, const RunConfig& cfg,
                const fs::path& out) {
  std::vector<Session> sessions;
  std::set<std::string> seen;
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& path : manifests) {
    Session s = parse_session_file(path, fs::path(path).parent_path(), cfg.csv);
    if (!seen.insert(s.participant_id).second)
      fail(ErrorCategory::validation, "duplicate participant id '" + s.participant_id + "'");
    ValidationReport r = validate_session(s, cfg.validate);
    reports.push_back({{"participant_id", s.participant_id},
                       {"source", path},
                       {"usable", r.usable},
                       {"dropped_fraction", r.dropped_fraction},
                       {"max_gap_s", r.max_gap_s},
                       {"violations", r.violations}});
    sessions.push_back(std::move(s));
  }
  StoreIndex index = write_session_store(out, sessions, cfg.validate);
  detail::write_text_file((out / "validation_reports.json").string(),
                          [&](std::ostream& os) { os << reports.dump(2) << '\n'; });
  std::size_t usable = 0;
  for (const auto& e : index.sessions) usable += e.usable ? 1 : 0;
  std::cout << "ingested " << index.sessions.size() << " sessions (" << usable
            << " usable) into " << out.string() << '\n';
}

void cmd_features(const std::string& store, const RunConfig& cfg, const fs::path& out) {
  auto sessions = load_sessions(store, cfg);
  PhaseFilter phase = phase_of(cfg);
  auto all = compute_all_windows(sessions, cfg.window_size_s, cfg.idt, phase);

  std::vector<WindowFeatures> flat;
  std::vector<InventoryRow> inventory;
  for (const auto& sw : all) {
    inventory.push_back(inventory_row(sw, cfg.window_size_s));
    flat.insert(flat.end(), sw.windows.begin(), sw.windows.end());
  }
  detail::write_text_file((out / "features.csv").string(),
                          [&](std::ostream& os) { write_feature_matrix_csv(os, flat); });
  detail::write_text_file((out / "inventory.csv").string(),
                          [&](std::ostream& os) { write_inventory_csv(os, inventory); });

  fs::create_directories(out / "images");
  fs::create_directories(out / "heatmaps");
  for (const auto& s : sessions) {
    auto fixations = detect_fixations(s.track, cfg.idt);
    auto imgs = extract_image_features(s, fixations);
    std::vector<double> gri;
    gri.reserve(imgs.size());
    for (const auto& img : imgs) gri.push_back(img.gri);
    std::vector<double> rescaled = min_max_rescale(gri);
    detail::write_text_file((out / "images" / (s.participant_id + ".csv")).string(),
                            [&](std::ostream& os) {
                              write_image_features_csv(os, s.participant_id, imgs, rescaled);
                            });
    Heatmap hm = render_heatmap(s.track, cfg.heatmap);
    write_pgm_file((out / "heatmaps" / (s.participant_id + ".pgm")).string(), hm);
  }
  std::cout << "wrote features for " << flat.size() << " windows across " << sessions.size()
            << " sessions to " << out.string() << '\n';
}

void cmd_stats(const std::string& store, const RunConfig& cfg, const fs::path& out) {
  auto sessions = load_sessions(store, cfg);
  std::vector<double> vals[2][4];  // [expert?][afd, fc, aed, gri]
  if (cfg.stats_granularity == "window") {
    PhaseFilter phase = phase_of(cfg);
    auto all = compute_all_windows(sessions, cfg.window_size_s, cfg.idt, phase);
    for (const auto& sw : all) {
      int g = sw.label == Label::Expert ? 0 : 1;
      for (const auto& w : sw.windows) {
        vals[g][0].push_back(w.afd_ms);
        vals[g][1].push_back(w.fc);
        vals[g][2].push_back(w.aed);
        vals[g][3].push_back(gaze_relational_index(w.afd_ms, w.fc));
      }
    }
  } else {
    for (const auto& s : sessions) {
      auto fixations = detect_fixations(s.track, cfg.idt);
      auto imgs = extract_image_features(s, fixations);
      int g = s.label == Label::Expert ? 0 : 1;
      for (const auto& img : imgs) {
        vals[g][0].push_back(img.afd_ms);
        vals[g][1].push_back(img.fc);
        vals[g][2].push_back(img.aed);
        vals[g][3].push_back(img.gri);
      }
    }
  }
  if (vals[0][0].empty() || vals[1][0].empty())
    fail(ErrorCategory::config, "store must contain both expert and non-expert sessions");

  const char* names[4] = {"afd_ms", "fc", "aed", "gri"};
  std::vector<GroupComparison> comparisons;
  for (int f = 0; f < 4; ++f)
    comparisons.push_back(compare_groups(names[f], vals[0][f], vals[1][f], cfg.stats_alpha));
  detail::write_text_file((out / "stats.json").string(), [&](std::ostream& os) {
    write_stats_report_json(os, comparisons, cfg.stats_granularity);
  });
  for (const auto& c : comparisons)
    std::cout << c.feature << ": direction=" << c.direction << " p="
              << detail::fmt_double(c.test.p_two_sided)
              << (c.test.significant ? " (significant)" : "") << '\n';
}

void cmd_train(const std::string& store, const RunConfig& cfg, const fs::path& out) {
  auto sessions = load_sessions(store, cfg);
  PhaseFilter phase = phase_of(cfg);
  auto all = compute_all_windows(sessions, cfg.window_size_s, cfg.idt, phase);
  std::vector<ParticipantRef> participants;
  for (const auto& s : sessions) participants.push_back({s.participant_id, s.label});
  SplitPlan split = make_split(participants, cfg.seed);

  auto train_set = detail::gather_windows(all, split.train, "train");
  auto val_set = detail::gather_windows(all, split.val, "val");
  FeatureStats stats = fit_normalizer(train_set);
  apply_normalizer_in_place(stats, train_set);
  apply_normalizer_in_place(stats, val_set);

  nn::ModelConfig mc = cfg.model;
  mc.seq_len = train_set.front().seq_len;
  mc.seed = derive_seed(cfg.seed, 0x3);
  nn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, 0x4);
  auto [model, history] = nn::train(nn::init_model<float>(mc), train_set, val_set, tc);

  nn::CheckpointMeta meta;
  meta.window_size_s = cfg.window_size_s;
  meta.nominal_rate = sessions.front().track.nominal_rate;
  meta.normalizer = stats;
  nn::save_checkpoint((out / "checkpoint.bin").string(), model, meta);
  detail::write_text_file((out / "history.csv").string(),
                          [&](std::ostream& os) { write_history_csv(os, history); });
  nlohmann::json js = {{"seed", split.seed},
                       {"train", split.train},
                       {"val", split.val},
                       {"test", split.test}};
  detail::write_text_file((out / "split.json").string(),
                          [&](std::ostream& os) { os << js.dump(2) << '\n'; });
  std::cout << "trained " << history.epochs.size() << " epochs, best val AUROC "
            << detail::fmt_double(history.best_val_auroc) << " at epoch "
            << history.best_epoch << '\n';
}

void cmd_eval(const std::string& store, const RunConfig& cfg, const fs::path& out,
              bool plots) {
  auto sessions = load_sessions(store, cfg);
  EvalConfig ec;
  ec.window_size = cfg.window_size_s;
  ec.n_models = cfg.n_models;
  ec.phase = phase_of(cfg);
  ec.base_seed = cfg.seed;
  ec.idt = cfg.idt;
  ec.model = cfg.model;
  ec.train = cfg.train;
  BatchResult batch = run_batch(sessions, ec);

  detail::write_text_file((out / "metrics.json").string(),
                          [&](std::ostream& os) { write_metrics_json(os, batch); });
  detail::write_text_file((out / "roc_mean.csv").string(),
                          [&](std::ostream& os) { write_roc_csv(os, batch.mean_curve); });
  if (plots) {
    Heatmap plot = render_line_plot(batch.mean_curve.tpr, 512, 512);
    write_pgm_file((out / "roc_mean.pgm").string(), plot);
  }
  std::cout << "mean AUROC " << detail::fmt_double(batch.mean_auroc) << " +/- "
            << detail::fmt_double(batch.std_auroc) << " over " << batch.models.size()
            << " models\n";
}

void cmd_trace(const std::string& checkpoint, const std::string& store,
               const std::string& participant, const RunConfig& cfg, const fs::path& out,
               bool plots) {
  nn::LoadedCheckpoint lc = nn::load_checkpoint(checkpoint);
  auto sessions = load_sessions(store, cfg);
  const Session* target = nullptr;
  for (const auto& s : sessions)
    if (s.participant_id == participant) target = &s;
  if (!target)
    fail(ErrorCategory::config, "participant '" + participant + "' not found in store");

  long expect = std::lround(target->track.nominal_rate * lc.meta.window_size_s);
  if (expect != lc.model.cfg.seq_len)
    fail(ErrorCategory::config,
         "checkpoint was trained at " + std::to_string(lc.model.cfg.seq_len) +
             " samples per window; this session yields " + std::to_string(expect));

  auto trace = softmax_trace(lc.model, lc.meta.normalizer, *target, lc.meta.window_size_s,
                             cfg.idt);
  detail::write_text_file((out / ("trace_" + participant + ".csv")).string(),
                          [&](std::ostream& os) { write_trace_csv(os, trace); });
  if (plots) {
    std::vector<double> scores;
    scores.reserve(trace.size());
    for (const auto& p : trace) scores.push_back(p.score);
    Heatmap plot = render_line_plot(scores, 1024, 256);
    write_pgm_file((out / ("trace_" + participant + ".pgm")).string(), plot);
  }
  std::cout << "wrote " << trace.size() << " trace points for " << participant << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze-based expertise assessment pipeline"};
  app.require_subcommand(1);

  auto started = std::chrono::system_clock::now();
  std::vector<std::string> argv_copy(argv, argv + argc);

  Common synth_c, ingest_c, features_c, stats_c, train_c, eval_c, trace_c;
  std::vector<std::string> ingest_manifests;
  std::string features_store, stats_store, train_store, eval_store, trace_store;
  std::string trace_checkpoint, trace_participant;
  bool eval_plots = false, trace_plots = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic session store");
  add_common(synth, synth_c, false, false);

  CLI::App* ingest = app.add_subcommand("ingest", "validate sessions into a store");
  ingest->add_option("manifests", ingest_manifests, "session manifest JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(ingest, ingest_c, false, false);

  CLI::App* features = app.add_subcommand("features", "extract window and image features");
  features->add_option("--store", features_store, "session store directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common(features, features_c, true, false);

  CLI::App* stats = app.add_subcommand("stats", "group comparison of gaze features");
  stats->add_option("--store", stats_store, "session store directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common(stats, stats_c, true, false);

  CLI::App* train = app.add_subcommand("train", "train one classifier on one split");
  train->add_option("--store", train_store, "session store directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common(train, train_c, true, false);

  CLI::App* eval = app.add_subcommand("eval", "train and evaluate a batch of models");
  eval->add_option("--store", eval_store, "session store directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_flag("--plots", eval_plots, "also write PGM line plots");
  add_common(eval, eval_c, true, true);

  CLI::App* trace = app.add_subcommand("trace", "per-window expertise score over a session");
  trace->add_option("--checkpoint", trace_checkpoint, "trained model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  trace->add_option("--store", trace_store, "session store directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  trace->add_option("--participant", trace_participant, "participant id to trace")->required();
  trace->add_flag("--plots", trace_plots, "also write a PGM line plot");
  add_common(trace, trace_c, false, false);

  try {
    app.parse(argc, argv);

    const Common& c = synth->parsed()      ? synth_c
                      : ingest->parsed()   ? ingest_c
                      : features->parsed() ? features_c
                      : stats->parsed()    ? stats_c
                      : train->parsed()    ? train_c
                      : eval->parsed()     ? eval_c
                                           : trace_c;
    RunConfig cfg = resolve_config(c);
    fs::path out = prepare_out(c.out_dir);
    echo_config(out, cfg);

    if (synth->parsed()) cmd_synth(cfg, out);
    if (ingest->parsed()) cmd_ingest(ingest_manifests, cfg, out);
    if (features->parsed()) cmd_features(features_store, cfg, out);
    if (stats->parsed()) cmd_stats(stats_store, cfg, out);
    if (train->parsed()) cmd_train(train_store, cfg, out);
    if (eval->parsed()) cmd_eval(eval_store, cfg, out, eval_plots);
    if (trace->parsed())
      cmd_trace(trace_checkpoint, trace_store, trace_participant, cfg, out, trace_plots);

    write_run_meta(out, argv_copy, started);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error:config: " << e.what() << '\n';
    return e.get_exit_code();
  } catch (const Error& e) {
    std::cerr << "error:" << to_string(e.category()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
