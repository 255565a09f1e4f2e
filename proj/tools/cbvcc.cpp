// cbvcc: track-based video-patch classification pipeline.
//
// Subcommands: track, features, annotate, train, predict, evaluate, cv, snr,
// stratify, synth, pipeline. Settings come from --config <cbvcc.toml> and
// are overridden by flags. Exit codes: 0 ok, 2 config, 3 data, 4 numeric.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbvcc/annotation.hpp"
#include "cbvcc/config.hpp"
#include "cbvcc/cross_validation.hpp"
#include "cbvcc/features.hpp"
#include "cbvcc/io.hpp"
#include "cbvcc/metrics.hpp"
#include "cbvcc/pipeline.hpp"
#include "cbvcc/quality.hpp"
#include "cbvcc/stratify.hpp"
#include "cbvcc/synth.hpp"

namespace fs = std::filesystem;
using namespace cbvcc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::numeric: return kExitNumeric;
    default: return kExitData;
  }
}

void report_error(const std::string& kind, const std::string& message, int code) {
  nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << j.dump() << std::endl;
}

void warn(const std::string& message) {
  nlohmann::json j = {{"warning", message}};
  std::cerr << j.dump() << std::endl;
}

struct Settings {
  pipeline::PipelineConfig pipe;
  std::string variant = "manual-all";
  std::string features_path;
  std::string model_path;
  std::string predictions_path;
  std::string quality_path;
  std::string out;
  std::string split;
  std::string feature_set = "all";
  std::string stratify_by = "cells";
  double bin_width = 1.0;
  double snr_max = 12.0;
  int t_ann = kMidFrame;
  std::optional<double> threshold_override;
  synth::SynthParams synth;
  double snr_fixed = 0.0;
  int cells_fixed = -1;
};

void apply_config(const config::Config& c, Settings& s) {
  auto& p = s.pipe;
  if (auto v = c.get_int("seed")) p.seed = static_cast<std::uint64_t>(*v);
  if (auto v = c.get_int("jobs")) p.jobs = static_cast<int>(*v);
  if (auto v = c.get_string("paths.manifest")) p.manifest = *v;
  if (auto v = c.get_string("paths.tracks")) p.tracks_dir = *v;
  if (auto v = c.get_string("paths.patches")) p.patches_dir = *v;
  if (auto v = c.get_string("paths.out")) p.out_dir = *v;
  if (auto v = c.get_string("model.variant")) s.variant = *v;
  if (auto v = c.get_string("model.features")) s.feature_set = *v;
  if (auto v = c.get_double("model.c_reg")) p.c_reg = *v;
  if (auto v = c.get_double("model.threshold")) p.threshold = *v;
  if (auto v = c.get_bool("model.standardize")) p.standardize = *v;
  if (auto v = c.get_double("detection.sigma_min")) p.detection.sigma_min_px = *v;
  if (auto v = c.get_double("detection.sigma_max")) p.detection.sigma_max_px = *v;
  if (auto v = c.get_int("detection.n_sigma")) p.detection.n_sigma = static_cast<int>(*v);
  if (auto v = c.get_double("detection.threshold")) p.detection.log_threshold = *v;
  if (auto v = c.get_double("detection.noise_floor")) p.detection.noise_floor_cutoff = *v;
  if (auto v = c.get_double("detection.noise_sigma")) p.detection.noise_sigma = *v;
  if (auto v = c.get_double("linking.search_range")) p.linking.search_range_px = *v;
  if (auto v = c.get_int("linking.memory")) p.linking.memory_frames = static_cast<int>(*v);
  if (auto v = c.get_int("cv.k")) p.cv_k = static_cast<int>(*v);
  if (auto v = c.get_int("cv.repeats")) p.cv_repeats = static_cast<int>(*v);
  if (auto v = c.get_bool("cv.enabled")) p.run_cv = *v;
  if (auto v = c.get_double("stratify.bin_width")) s.bin_width = *v;
  if (auto v = c.get_double("stratify.snr_max")) s.snr_max = *v;
}

// Locates --config before CLI11 runs so config values become option defaults
// that explicit flags then overwrite.
std::optional<std::string> find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

std::optional<Split> split_filter(const std::string& s) {
  if (s.empty() || s == "all") return std::nullopt;
  return parse_split(s);
}

void require(const std::string& value, const std::string& what) {
  if (value.empty()) throw Error(ErrorKind::config, "missing required setting: " + what);
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<features::FeatureRow> load_features_for(const std::string& path) {
  require(path, "--features");
  return features::load_features_csv(path);
}

int cmd_track(const Settings& s) {
  const auto& p = s.pipe;
  require(p.manifest, "--manifest");
  require(p.patches_dir, "--patches");
  require(p.out_dir, "--out");
  const auto m = load_manifest(p.manifest);
  const auto outs = pipeline::track_manifest(m, p.patches_dir, p.detection, p.linking, p.seed, p.jobs);
  fs::create_directories(fs::path(p.out_dir) / "tracks");
  for (std::size_t i = 0; i < outs.size(); ++i) {
    save_tracks((fs::path(p.out_dir) / "tracks" / (m.entries[i].patch_id + ".csv")).string(), outs[i].tracks);
  }
  csv::write_file((fs::path(p.out_dir) / "tracking_report.json").string(),
                  pipeline::tracking_report(m, outs).dump(2) + "\n");
  return 0;
}

int cmd_features(const Settings& s) {
  const auto& p = s.pipe;
  require(p.manifest, "--manifest");
  require(p.tracks_dir, "--tracks");
  require(s.out, "--out");
  const auto m = load_manifest(p.manifest);
  const auto rows = pipeline::compute_features(m, pipeline::load_track_dir(m, p.tracks_dir),
                                               features::parse_feature_set(s.feature_set), p.jobs);
  ensure_parent(s.out);
  features::save_features_csv(s.out, rows);
  return 0;
}

int cmd_annotate(const Settings& s) {
  const auto& p = s.pipe;
  require(p.tracks_dir, "--tracks");
  require(s.out, "--out");
  std::vector<std::string> ids;
  if (!p.manifest.empty()) {
    for (const auto& e : load_manifest(p.manifest).entries) ids.push_back(e.patch_id);
  } else {
    if (!fs::is_directory(p.tracks_dir)) throw Error(ErrorKind::config, "tracks directory not found: " + p.tracks_dir);
    for (const auto& f : fs::directory_iterator(p.tracks_dir)) {
      if (f.path().extension() == ".csv") ids.push_back(f.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
  }
  std::string out = "patch_id,category,net_turning_angle_deg,straightness_before,straightness_after\n";
  for (const auto& id : ids) {
    const auto focus = pipeline::focus_track(load_tracks_for(p.tracks_dir, id));
    const auto r = annotation::annotate(focus, s.t_ann);
    out += id + ',' + std::string(annotation::to_string(r.category)) + ',' +
           csv::format_optional(r.net_turning_angle_deg) + ',' + csv::format_optional(r.straightness_before) +
           ',' + csv::format_optional(r.straightness_after) + '\n';
  }
  ensure_parent(s.out);
  csv::write_file(s.out, out);
  return 0;
}

int cmd_train(const Settings& s) {
  const auto& p = s.pipe;
  require(p.manifest, "--manifest");
  require(s.out, "--out");
  const auto rows = load_features_for(s.features_path);
  const auto m = load_manifest(p.manifest);
  const auto schema = features::schema(features::parse_feature_set(s.feature_set));
  const auto split = s.split.empty() ? std::optional<Split>(Split::train) : split_filter(s.split);
  auto data = pipeline::gather(rows, m, schema, split, false);
  // Unlabelled rows cannot train; drop them.
  pipeline::LabeledData labelled;
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    if (data.y[i] < 0) continue;
    labelled.X.push_back(data.X[i]);
    labelled.y.push_back(data.y[i]);
  }
  const auto model = classifier::train(labelled.X, labelled.y, schema, pipeline::train_options(p));
  if (!model.converged) {
    warn("training stopped before convergence (gradient norm " + csv::format_roundtrip(model.gradient_norm) + ")");
  }
  ensure_parent(s.out);
  csv::write_file(s.out, classifier::to_json(model).dump(2) + "\n");
  return 0;
}

int cmd_predict(const Settings& s) {
  require(s.model_path, "--model");
  require(s.out, "--out");
  std::ifstream in(s.model_path);
  if (!in) throw Error(ErrorKind::format, "cannot open model '" + s.model_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("model json: ") + e.what());
  }
  auto model = classifier::from_json(j);
  if (s.threshold_override) model.threshold = *s.threshold_override;
  const auto preds = pipeline::predict_rows(model, load_features_for(s.features_path));
  ensure_parent(s.out);
  save_predictions(preds, s.out);
  return 0;
}

int cmd_evaluate(const Settings& s) {
  require(s.predictions_path, "--predictions");
  require(s.pipe.manifest, "--manifest");
  require(s.out, "--out");
  const auto preds = load_predictions(s.predictions_path);
  const auto m = load_manifest(s.pipe.manifest);
  const auto rep = pipeline::evaluate_predictions(preds, m, split_filter(s.split));
  fs::create_directories(s.out);
  csv::write_file((fs::path(s.out) / "report.json").string(), evaluation::to_json(rep).dump(2) + "\n");
  csv::write_file((fs::path(s.out) / "roc.csv").string(), pipeline::format_roc_csv(rep.roc_points));
  return 0;
}

int cmd_cv(const Settings& s) {
  const auto& p = s.pipe;
  require(p.manifest, "--manifest");
  require(s.out, "--out");
  const auto rows = load_features_for(s.features_path);
  const auto m = load_manifest(p.manifest);
  const auto schema = features::schema(features::parse_feature_set(s.feature_set));
  const auto split = s.split.empty() ? std::optional<Split>(Split::train) : split_filter(s.split);
  const auto data = pipeline::gather(rows, m, schema, split, true);
  const auto plan = evaluation::grouped_kfold(data.groups, p.cv_k, p.cv_repeats, p.seed);
  const auto cv = evaluation::run_cv(data.X, data.y, schema, plan, pipeline::train_options(p), p.jobs);
  ensure_parent(s.out);
  csv::write_file(s.out, pipeline::format_cv_csv(cv));
  return 0;
}

int cmd_snr(const Settings& s) {
  const auto& p = s.pipe;
  require(p.manifest, "--manifest");
  require(p.patches_dir, "--patches");
  require(p.tracks_dir, "--tracks");
  require(s.out, "--out");
  const auto m = load_manifest(p.manifest);
  std::vector<quality::QualityReport> reports(m.entries.size());
  parallel_for(reports.size(), p.jobs, [&](std::size_t i) {
    const auto& e = m.entries[i];
    std::vector<Track> filled;
    for (const auto& tr : load_tracks_for(p.tracks_dir, e.patch_id)) {
      filled.push_back(tr.size() >= 2 ? tracking::interpolate_track(tr) : tr);
    }
    reports[i] = quality::patch_snr(pipeline::load_entry(e, p.patches_dir), filled);
  });
  std::string out = "patch_id,n_cells,snr\n";
  for (const auto& r : reports) {
    out += r.patch_id + ',' + std::to_string(r.n_cells) + ',' + csv::format_optional(r.snr) + '\n';
  }
  ensure_parent(s.out);
  csv::write_file(s.out, out);
  return 0;
}

int cmd_stratify(const Settings& s) {
  require(s.predictions_path, "--predictions");
  require(s.pipe.manifest, "--manifest");
  require(s.quality_path, "--quality");
  require(s.out, "--out");
  const auto preds = load_predictions(s.predictions_path);
  const auto m = load_manifest(s.pipe.manifest);
  const auto q = csv::read_file(s.quality_path);
  const auto c_id = q.require_column("patch_id", s.quality_path);
  const auto c_n = q.require_column("n_cells", s.quality_path);
  const auto c_snr = q.require_column("snr", s.quality_path);
  std::map<std::string, std::pair<double, std::optional<double>>> quality;
  for (const auto& row : q.rows) {
    std::optional<double> snr;
    if (!row[c_snr].empty()) snr = csv::parse_double(row[c_snr], s.quality_path);
    quality[row[c_id]] = {csv::parse_double(row[c_n], s.quality_path), snr};
  }

  evaluation::StratifyOptions opt;
  if (s.stratify_by == "cells") opt.kind = evaluation::StratumKind::cells;
  else if (s.stratify_by == "snr") opt.kind = evaluation::StratumKind::snr;
  else throw Error(ErrorKind::config, "--by must be 'cells' or 'snr'");
  opt.bin_width = s.bin_width;
  opt.snr_max = s.snr_max;

  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id[p.patch_id] = &p;
  const auto split = split_filter(s.split);
  std::vector<evaluation::StratifiedSample> samples;
  for (const auto& e : m.entries) {
    if ((split && e.split != split) || !e.label) continue;
    auto pit = by_id.find(e.patch_id);
    auto qit = quality.find(e.patch_id);
    if (pit == by_id.end() || qit == quality.end()) continue;
    evaluation::StratifiedSample smp;
    smp.y_true = *e.label;
    smp.prob = pit->second->prob_class1;
    smp.y_pred = pit->second->pred_label;
    if (opt.kind == evaluation::StratumKind::cells) smp.stratum_value = qit->second.first;
    else smp.stratum_value = qit->second.second;
    samples.push_back(smp);
  }
  std::string out = "stratum,bin,lo,hi,n,n_pos,n_neg,balanced_accuracy,auc,score,sufficient\n";
  for (const auto& r : evaluation::stratified_scores(samples, opt)) {
    out += s.stratify_by + ',' + r.label + ',' + csv::format_roundtrip(r.lo) + ',' + csv::format_roundtrip(r.hi) +
           ',' + std::to_string(r.n) + ',' + std::to_string(r.n_pos) + ',' + std::to_string(r.n_neg) + ',' +
           csv::format_roundtrip(r.balanced_accuracy) + ',' + csv::format_optional(r.auc) + ',' +
           csv::format_optional(r.score) + ',' + (r.sufficient ? "1" : "0") + '\n';
  }
  ensure_parent(s.out);
  csv::write_file(s.out, out);
  return 0;
}

int cmd_synth(Settings s) {
  require(s.out, "--out");
  auto& sp = s.synth;
  sp.seed = s.pipe.seed;
  if (s.snr_fixed > 0.0) sp.snr_min = sp.snr_max = s.snr_fixed;
  if (s.cells_fixed >= 0) sp.cells_min = sp.cells_max = s.cells_fixed;
  const auto data = synth::generate_dataset(sp, s.pipe.jobs);
  synth::write_dataset(s.out, data, s.pipe.jobs);
  return 0;
}

int cmd_pipeline(Settings s) {
  s.pipe.variant = pipeline::parse_variant(s.variant);
  require(s.pipe.out_dir, "--out");
  const auto res = pipeline::run_pipeline(s.pipe);
  if (!res.model.converged) warn("training stopped before convergence");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  try {
    if (auto path = find_config_arg(argc, argv)) apply_config(config::Config::load(*path), s);
  } catch (const Error& e) {
    report_error(std::string(to_string(e.kind())), e.what(), kExitConfig);
    return kExitConfig;
  }
  // Commands that write a single file read --out from here; directory
  // outputs use the shared out_dir.
  if (!s.pipe.out_dir.empty()) s.out = s.pipe.out_dir;

  CLI::App app{"Track-based cell behaviour classification pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "TOML config file (flags override it)");
  app.add_option("--seed", s.pipe.seed, "Global random seed");
  app.add_option("--jobs", s.pipe.jobs, "Worker threads for per-patch stages")->check(CLI::PositiveNumber);

  auto add_paths = [&](CLI::App* c, bool manifest, bool tracks, bool patches) {
    if (manifest) c->add_option("--manifest", s.pipe.manifest, "manifest.csv");
    if (tracks) c->add_option("--tracks", s.pipe.tracks_dir, "Directory of <patch_id>.csv track files");
    if (patches) c->add_option("--patches", s.pipe.patches_dir, "Directory manifest patch paths are relative to");
  };
  auto add_detection = [&](CLI::App* c) {
    auto& d = s.pipe.detection;
    c->add_option("--sigma-min", d.sigma_min_px);
    c->add_option("--sigma-max", d.sigma_max_px);
    c->add_option("--n-sigma", d.n_sigma);
    c->add_option("--log-threshold", d.log_threshold);
    c->add_option("--noise-floor", d.noise_floor_cutoff);
    c->add_option("--noise-sigma", d.noise_sigma);
    c->add_option("--search-range", s.pipe.linking.search_range_px);
    c->add_option("--memory", s.pipe.linking.memory_frames);
  };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--c", s.pipe.c_reg, "Inverse L2 regularization strength");
    c->add_option("--threshold", s.pipe.threshold, "Decision threshold on P(class 1)");
    c->add_flag("--standardize", s.pipe.standardize, "z-score features using training statistics");
  };

  auto* track = app.add_subcommand("track", "Detect and link cells in every patch");
  add_paths(track, true, false, true);
  add_detection(track);
  track->add_option("--out", s.pipe.out_dir, "Output directory");

  auto* feats = app.add_subcommand("features", "Compute focus-track features");
  add_paths(feats, true, true, false);
  feats->add_option("--set", s.feature_set, "all | basic");
  feats->add_option("--out", s.out, "features.csv");

  auto* annot = app.add_subcommand("annotate", "Apply the turn / straight / stationary rules");
  add_paths(annot, true, true, false);
  annot->add_option("--t-ann", s.t_ann, "Annotation frame");
  annot->add_option("--out", s.out, "annotations.csv");

  auto* train = app.add_subcommand("train", "Fit the logistic model");
  add_paths(train, true, false, false);
  add_model(train);
  train->add_option("--features", s.features_path);
  train->add_option("--set", s.feature_set, "all | basic");
  train->add_option("--split", s.split, "Split to train on (default train; 'all' for every labelled row)");
  train->add_option("--out", s.out, "model.json");

  auto* predict = app.add_subcommand("predict", "Score features with a saved model");
  predict->add_option("--model", s.model_path);
  predict->add_option("--features", s.features_path);
  predict->add_option("--threshold", s.threshold_override);
  predict->add_option("--out", s.out, "predictions.csv");

  auto* evaluate = app.add_subcommand("evaluate", "Challenge metrics for a predictions file");
  add_paths(evaluate, true, false, false);
  evaluate->add_option("--predictions", s.predictions_path);
  evaluate->add_option("--split", s.split, "Restrict to one split");
  evaluate->add_option("--out", s.out, "Output directory for report.json and roc.csv");

  auto* cv = app.add_subcommand("cv", "Repeated grouped k-fold cross-validation");
  add_paths(cv, true, false, false);
  add_model(cv);
  cv->add_option("--features", s.features_path);
  cv->add_option("--set", s.feature_set, "all | basic");
  cv->add_option("--split", s.split, "Rows to cross-validate (default train)");
  cv->add_option("--k", s.pipe.cv_k);
  cv->add_option("--repeats", s.pipe.cv_repeats);
  cv->add_option("--out", s.out, "cv_results.csv");

  auto* snr = app.add_subcommand("snr", "Cell count and SNR per patch");
  add_paths(snr, true, true, true);
  snr->add_option("--out", s.out, "quality.csv");

  auto* strat = app.add_subcommand("stratify", "Metrics per cell-count or SNR bin");
  add_paths(strat, true, false, false);
  strat->add_option("--predictions", s.predictions_path);
  strat->add_option("--quality", s.quality_path, "quality.csv from the snr command");
  strat->add_option("--by", s.stratify_by, "cells | snr");
  strat->add_option("--bin-width", s.bin_width);
  strat->add_option("--snr-max", s.snr_max);
  strat->add_option("--split", s.split);
  strat->add_option("--out", s.out, "strata.csv");

  auto* syn = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
  syn->add_option("--out", s.out, "Dataset directory");
  syn->add_option("--n", s.synth.n_patches);
  syn->add_option("--mix", s.synth.class_mix, "Fraction of class 1 patches");
  syn->add_option("--snr", s.snr_fixed, "Fixed SNR target (overrides the range)");
  syn->add_option("--snr-min", s.synth.snr_min);
  syn->add_option("--snr-max", s.synth.snr_max);
  syn->add_option("--cells", s.cells_fixed, "Fixed cells per patch (overrides the range)");
  syn->add_option("--cells-min", s.synth.cells_min);
  syn->add_option("--cells-max", s.synth.cells_max);
  syn->add_option("--pad-prob", s.synth.pad_prob, "Probability of black-frame padding");
  syn->add_option("--patches-per-group", s.synth.patches_per_group);

  auto* pipe = app.add_subcommand("pipeline", "track -> features -> train -> predict -> evaluate");
  add_paths(pipe, true, true, true);
  add_detection(pipe);
  add_model(pipe);
  pipe->add_option("--variant", s.variant, "auto-all | auto-basic | manual-all | manual-basic");
  pipe->add_flag("--cv", s.pipe.run_cv, "Also run repeated grouped cross-validation");
  pipe->add_option("--k", s.pipe.cv_k);
  pipe->add_option("--repeats", s.pipe.cv_repeats);
  pipe->add_option("--out", s.pipe.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("config", e.what(), kExitConfig);
    return kExitConfig;
  }

  try {
    if (*track) return cmd_track(s);
    if (*feats) return cmd_features(s);
    if (*annot) return cmd_annotate(s);
    if (*train) return cmd_train(s);
    if (*predict) return cmd_predict(s);
    if (*evaluate) return cmd_evaluate(s);
    if (*cv) return cmd_cv(s);
    if (*snr) return cmd_snr(s);
    if (*strat) return cmd_stratify(s);
    if (*syn) return cmd_synth(s);
    if (*pipe) return cmd_pipeline(s);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("format", e.what(), kExitData);
    return kExitData;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), kExitData);
    return kExitData;
  }
  return 0;
}
