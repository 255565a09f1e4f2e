#pragma once

// End-to-end wiring: tracks -> focus selection -> features -> logistic model
// -> predictions -> challenge metrics. Shared by the CLI and the acceptance
// suite.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbvcc/cross_validation.hpp"
#include "cbvcc/features.hpp"
#include "cbvcc/io.hpp"
#include "cbvcc/logistic.hpp"
#include "cbvcc/metrics.hpp"
#include "cbvcc/parallel.hpp"
#include "cbvcc/seed.hpp"
#include "cbvcc/tracking/tracker.hpp"
#include "cbvcc/tracking/track_processing.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::pipeline {

using features::FeatureRow;
using features::FeatureSet;

struct Variant {
  bool automated = false;
  FeatureSet set = FeatureSet::all;

  std::string name() const {
    return std::string(automated ? "auto-" : "manual-") + std::string(features::to_string(set));
  }
};

inline Variant parse_variant(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw Error(ErrorKind::config, "variant must look like 'auto-all', got '" + s + "'");
  const auto tracks = s.substr(0, dash);
  Variant v;
  if (tracks == "auto" || tracks == "automated") v.automated = true;
  else if (tracks != "manual") throw Error(ErrorKind::config, "unknown track source in variant '" + s + "'");
  v.set = features::parse_feature_set(s.substr(dash + 1));
  return v;
}

inline std::string resolve_patch_path(const ManifestEntry& e, const std::string& patches_dir) {
  std::filesystem::path p(e.path);
  if (p.is_absolute() || patches_dir.empty()) return p.string();
  return (std::filesystem::path(patches_dir) / p).string();
}

inline VideoPatch load_entry(const ManifestEntry& e, const std::string& patches_dir) {
  auto patch = load_patch(resolve_patch_path(e, patches_dir));
  patch.id = e.patch_id;
  patch.label = e.label;
  patch.group_id = e.group_id;
  patch.split = e.split;
  return patch;
}

inline std::vector<tracking::TrackingOutput> track_manifest(const DatasetManifest& m,
                                                            const std::string& patches_dir,
                                                            const tracking::DetectionParams& det,
                                                            const tracking::LinkParams& link,
                                                            std::uint64_t seed, int jobs) {
  det.validate();
  link.validate();
  std::vector<tracking::TrackingOutput> out(m.entries.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto& e = m.entries[i];
    out[i] = tracking::track_patch(load_entry(e, patches_dir), det, link, derive_seed(seed, e.patch_id));
  });
  return out;
}

inline nlohmann::json tracking_report(const DatasetManifest& m,
                                      const std::vector<tracking::TrackingOutput>& outs) {
  nlohmann::json patches = nlohmann::json::array();
  long total_tracks = 0, total_gappy = 0, total_gap_frames = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& o = outs[i];
    patches.push_back({{"patch_id", m.entries[i].patch_id},
                       {"detections_per_frame", o.detections_per_frame},
                       {"n_tracks", o.tracks.size()},
                       {"tracks_with_gaps", o.tracks_with_gaps},
                       {"gap_frames", o.gap_frames}});
    total_tracks += static_cast<long>(o.tracks.size());
    total_gappy += o.tracks_with_gaps;
    total_gap_frames += o.gap_frames;
  }
  return {{"n_patches", outs.size()},
          {"n_tracks", total_tracks},
          {"tracks_with_gaps", total_gappy},
          {"gap_frames", total_gap_frames},
          {"patches", patches}};
}

// Gap-fills every track that can be interpolated, then picks the focus track.
inline std::optional<Track> focus_track(const std::vector<Track>& raw) {
  std::vector<Track> filled;
  for (const auto& tr : raw) {
    if (tr.size() >= 2) filled.push_back(tracking::interpolate_track(tr));
  }
  return tracking::select_focus_track(filled);
}

inline features::FeatureVector features_for_tracks(const std::vector<Track>& raw, FeatureSet set) {
  return features::assemble(focus_track(raw), set);
}

inline std::vector<FeatureRow> compute_features(const DatasetManifest& m,
                                                const std::vector<std::vector<Track>>& tracks,
                                                FeatureSet set, int jobs) {
  std::vector<FeatureRow> rows(m.entries.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    rows[i] = {m.entries[i].patch_id, features_for_tracks(tracks[i], set)};
  });
  return rows;
}

inline std::vector<std::vector<Track>> load_track_dir(const DatasetManifest& m, const std::string& dir) {
  std::vector<std::vector<Track>> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_tracks_for(dir, e.patch_id));
  return out;
}

struct LabeledData {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<std::string> groups;
};

// Rows of `features` whose manifest entry matches `split` (any split when
// nullopt). Labels are required when require_labels is set.
inline LabeledData gather(const std::vector<FeatureRow>& rows, const DatasetManifest& m,
                          const std::vector<std::string>& schema, std::optional<Split> split,
                          bool require_labels) {
  std::map<std::string, const FeatureRow*> by_id;
  for (const auto& r : rows) by_id[r.patch_id] = &r;
  LabeledData d;
  for (const auto& e : m.entries) {
    if (split && e.split != split) continue;
    auto it = by_id.find(e.patch_id);
    if (it == by_id.end()) throw Error(ErrorKind::format, "no features for patch '" + e.patch_id + "'");
    if (require_labels && !e.label) throw Error(ErrorKind::format, "patch '" + e.patch_id + "' has no label");
    d.ids.push_back(e.patch_id);
    d.X.push_back(features::values(it->second->features, schema));
    d.y.push_back(e.label.value_or(-1));
    d.groups.push_back(e.group_id);
  }
  return d;
}

inline std::vector<Prediction> predict_rows(const classifier::LogisticModel& model,
                                            const std::vector<FeatureRow>& rows) {
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const auto x = features::values(r.features, model.feature_schema);
    const double p = classifier::predict_proba(model, x);
    out.push_back({r.patch_id, p, p >= model.threshold ? 1 : 0});
  }
  return out;
}

// Metrics over the predictions whose manifest entry is labelled and, when
// given, in `split`. Throws degenerate when the subset lacks a class.
inline evaluation::EvalReport evaluate_predictions(const std::vector<Prediction>& preds,
                                                   const DatasetManifest& m, std::optional<Split> split) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id[p.patch_id] = &p;
  std::vector<int> yt, yp;
  std::vector<double> pr;
  for (const auto& e : m.entries) {
    if (split && e.split != split) continue;
    if (!e.label) continue;
    auto it = by_id.find(e.patch_id);
    if (it == by_id.end()) continue;
    yt.push_back(*e.label);
    pr.push_back(it->second->prob_class1);
    yp.push_back(it->second->pred_label);
  }
  if (yt.empty()) throw Error(ErrorKind::degenerate, "no labelled predictions to evaluate");
  return evaluation::challenge_score(yt, pr, yp);
}

inline std::string format_roc_csv(const std::vector<evaluation::RocPoint>& roc) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : roc) {
    out += csv::format_roundtrip(p.fpr) + ',' + csv::format_roundtrip(p.tpr) + ',' +
           (std::isinf(p.threshold) ? std::string("inf") : csv::format_roundtrip(p.threshold)) + '\n';
  }
  return out;
}

inline std::string format_cv_csv(const evaluation::CvResult& cv) {
  std::string out =
      "repeat,fold,n_train,n_val,train_balanced_accuracy,train_score,val_balanced_accuracy,val_score,converged\n";
  for (const auto& f : cv.folds) {
    out += std::to_string(f.repeat) + ',' + std::to_string(f.fold) + ',' + std::to_string(f.n_train) + ',' +
           std::to_string(f.n_val) + ',' + csv::format_roundtrip(f.train_balanced_accuracy) + ',' +
           csv::format_optional(f.train_score) + ',' + csv::format_roundtrip(f.val_balanced_accuracy) + ',' +
           csv::format_optional(f.val_score) + ',' + (f.converged ? "1" : "0") + '\n';
  }
  return out;
}

struct PipelineConfig {
  std::string manifest;
  std::string tracks_dir;
  std::string patches_dir;
  std::string out_dir;
  Variant variant;
  tracking::DetectionParams detection;
  tracking::LinkParams linking;
  double c_reg = 200.0;
  double threshold = 0.5;
  bool standardize = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  int cv_k = 5;
  int cv_repeats = 5;
  bool run_cv = false;
};

struct PipelineResult {
  classifier::LogisticModel model;
  std::vector<FeatureRow> features;
  std::vector<Prediction> predictions;
  std::map<std::string, evaluation::EvalReport> reports;  // by split name
  std::optional<evaluation::CvResult> cv;
  nlohmann::json report;
};

inline classifier::TrainOptions train_options(const PipelineConfig& c) {
  classifier::TrainOptions o;
  o.c_reg = c.c_reg;
  o.threshold = c.threshold;
  o.standardize = c.standardize;
  return o;
}

// Runs the configured variant and, when out_dir is set, writes tracks/
// (automated only), tracking_report.json, features.csv, model.json,
// predictions.csv, report.json, roc.csv and optionally cv_results.csv.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.manifest.empty()) throw Error(ErrorKind::config, "pipeline needs a manifest");
  if (cfg.variant.automated && cfg.patches_dir.empty()) {
    throw Error(ErrorKind::config, "automated variants need a patches directory");
  }
  if (!cfg.variant.automated && cfg.tracks_dir.empty()) {
    throw Error(ErrorKind::config, "manual variants need a tracks directory");
  }
  const auto manifest = load_manifest(cfg.manifest);
  const bool write = !cfg.out_dir.empty();
  if (write) fs::create_directories(cfg.out_dir);

  std::vector<std::vector<Track>> tracks;
  if (cfg.variant.automated) {
    auto outs = track_manifest(manifest, cfg.patches_dir, cfg.detection, cfg.linking, cfg.seed, cfg.jobs);
    for (auto& o : outs) tracks.push_back(o.tracks);
    if (write) {
      fs::create_directories(fs::path(cfg.out_dir) / "tracks");
      for (std::size_t i = 0; i < outs.size(); ++i) {
        save_tracks((fs::path(cfg.out_dir) / "tracks" / (manifest.entries[i].patch_id + ".csv")).string(),
                    outs[i].tracks);
      }
      csv::write_file((fs::path(cfg.out_dir) / "tracking_report.json").string(),
                      tracking_report(manifest, outs).dump(2) + "\n");
    }
  } else {
    tracks = load_track_dir(manifest, cfg.tracks_dir);
  }

  PipelineResult res;
  res.features = compute_features(manifest, tracks, cfg.variant.set, cfg.jobs);
  const auto schema = features::schema(cfg.variant.set);
  const auto train_data = gather(res.features, manifest, schema, Split::train, true);
  res.model = classifier::train(train_data.X, train_data.y, schema, train_options(cfg));
  res.predictions = predict_rows(res.model, res.features);

  nlohmann::json splits = nlohmann::json::object();
  for (Split s : {Split::train, Split::validation, Split::test}) {
    try {
      auto rep = evaluate_predictions(res.predictions, manifest, s);
      splits[std::string(to_string(s))] = evaluation::to_json(rep);
      res.reports.emplace(std::string(to_string(s)), std::move(rep));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate) throw;
    }
  }

  if (cfg.run_cv) {
    const auto plan = evaluation::grouped_kfold(train_data.groups, cfg.cv_k, cfg.cv_repeats, cfg.seed);
    res.cv = evaluation::run_cv(train_data.X, train_data.y, schema, plan, train_options(cfg), cfg.jobs);
  }

  res.report = {{"variant", cfg.variant.name()},
                {"seed", cfg.seed},
                {"model", {{"converged", res.model.converged}, {"iterations", res.model.iterations}}},
                {"splits", splits}};
  if (res.cv) {
    res.report["cv"] = {{"mean_val_balanced_accuracy", res.cv->mean_val_ba()},
                        {"val_balanced_accuracy_spread", res.cv->val_ba_spread()}};
  }

  if (write) {
    const fs::path out(cfg.out_dir);
    features::save_features_csv((out / "features.csv").string(), res.features);
    csv::write_file((out / "model.json").string(), classifier::to_json(res.model).dump(2) + "\n");
    save_predictions(res.predictions, (out / "predictions.csv").string());
    csv::write_file((out / "report.json").string(), res.report.dump(2) + "\n");
    const char* roc_split = res.reports.count("test") ? "test" : (res.reports.count("validation") ? "validation" : "train");
    if (res.reports.count(roc_split)) {
      csv::write_file((out / "roc.csv").string(), format_roc_csv(res.reports.at(roc_split).roc_points));
    }
    if (res.cv) csv::write_file((out / "cv_results.csv").string(), format_cv_csv(*res.cv));
  }
  return res;
}

}  // namespace cbvcc::pipeline
