#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbvcc/csv.hpp"
#include "cbvcc/metrics.hpp"

namespace cbvcc::evaluation {

struct StratifiedSample {
  int y_true = 0;
  double prob = 0.0;
  int y_pred = 0;
  std::optional<double> stratum_value;  // cell count or SNR
};

struct StratumReport {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
  int n_pos = 0;
  int n_neg = 0;
  double balanced_accuracy = 0.0;
  std::optional<double> auc;
  std::optional<double> score;
  // False when the bin lacks one class, so AUC and score are undefined.
  bool sufficient = false;
};

enum class StratumKind { cells, snr };

struct StratifyOptions {
  StratumKind kind = StratumKind::cells;
  double bin_width = 1.0;
  double snr_max = 12.0;
};

namespace detail {
inline StratumReport report_for(const std::vector<const StratifiedSample*>& members, std::string label,
                                double lo, double hi) {
  StratumReport r;
  r.label = std::move(label);
  r.lo = lo;
  r.hi = hi;
  std::vector<int> yt, yp;
  std::vector<double> pr;
  for (const auto* s : members) {
    yt.push_back(s->y_true);
    yp.push_back(s->y_pred);
    pr.push_back(s->prob);
    (s->y_true == 1 ? r.n_pos : r.n_neg)++;
  }
  r.n = static_cast<int>(members.size());
  r.balanced_accuracy = confusion_metrics(yt, yp).balanced_accuracy;
  if (r.n_pos > 0 && r.n_neg > 0) {
    const auto full = challenge_score(yt, pr, yp);
    r.auc = full.auc;
    r.score = full.score;
    r.sufficient = true;
  }
  return r;
}
}  // namespace detail

// Cell-count strata get one bin per distinct count. SNR strata use
// equal-width bins over [0, snr_max]; values above snr_max or undefined
// are left out, and snr_max itself falls in the last bin.
inline std::vector<StratumReport> stratified_scores(const std::vector<StratifiedSample>& samples,
                                                    const StratifyOptions& opt = {}) {
  std::vector<StratumReport> out;
  if (opt.kind == StratumKind::cells) {
    std::map<long, std::vector<const StratifiedSample*>> bins;
    for (const auto& s : samples) {
      if (s.stratum_value) bins[std::lround(*s.stratum_value)].push_back(&s);
    }
    for (const auto& [count, members] : bins) {
      out.push_back(detail::report_for(members, std::to_string(count), count, count));
    }
    return out;
  }

  if (!(opt.bin_width > 0.0) || !(opt.snr_max > 0.0)) {
    throw Error(ErrorKind::config, "SNR bins need positive width and maximum");
  }
  const int n_bins = static_cast<int>(std::ceil(opt.snr_max / opt.bin_width - 1e-12));
  std::vector<std::vector<const StratifiedSample*>> bins(static_cast<std::size_t>(n_bins));
  for (const auto& s : samples) {
    if (!s.stratum_value || *s.stratum_value < 0.0 || *s.stratum_value > opt.snr_max) continue;
    int b = static_cast<int>(std::floor(*s.stratum_value / opt.bin_width));
    b = std::min(b, n_bins - 1);
    bins[b].push_back(&s);
  }
  for (int b = 0; b < n_bins; ++b) {
    if (bins[b].empty()) continue;
    const double lo = b * opt.bin_width;
    const double hi = std::min(opt.snr_max, (b + 1) * opt.bin_width);
    out.push_back(detail::report_for(bins[b], csv::format_roundtrip(lo) + "-" + csv::format_roundtrip(hi), lo, hi));
  }
  return out;
}

}  // namespace cbvcc::evaluation
