#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "cbvcc/types.hpp"

namespace cbvcc::evaluation {

struct Confusion {
  int tp = 0;
  int tn = 0;
  int fp = 0;
  int fn = 0;
  int total() const { return tp + tn + fp + fn; }
  bool operator==(const Confusion&) const = default;
};

struct ConfusionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double balanced_accuracy = 0.0;
  Confusion confusion;
};

namespace detail {
inline double ratio_or_zero(int num, int den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / den;
}
}  // namespace detail

// Zero denominators contribute 0 (precision, recall, and each half of the
// balanced accuracy).
inline ConfusionMetrics confusion_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::shape, "label and prediction vectors differ in length");
  }
  ConfusionMetrics m;
  auto& c = m.confusion;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw Error(ErrorKind::range, "labels must be 0 or 1");
    if (t == 1 && p == 1) ++c.tp;
    else if (t == 0 && p == 0) ++c.tn;
    else if (t == 0) ++c.fp;
    else ++c.fn;
  }
  m.precision = detail::ratio_or_zero(c.tp, c.tp + c.fp);
  m.recall = detail::ratio_or_zero(c.tp, c.tp + c.fn);
  m.balanced_accuracy =
      0.5 * (detail::ratio_or_zero(c.tp, c.tp + c.fn) + detail::ratio_or_zero(c.tn, c.tn + c.fp));
  return m;
}

namespace detail {
inline void count_classes(std::span<const int> y, int& pos, int& neg) {
  pos = neg = 0;
  for (int v : y) {
    if (v == 1) ++pos;
    else if (v == 0) ++neg;
    else throw Error(ErrorKind::range, "labels must be 0 or 1");
  }
}
}  // namespace detail

// Mann-Whitney statistic with mid-ranks: the probability that a random
// positive outscores a random negative, ties counting one half.
inline double auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw Error(ErrorKind::shape, "labels and scores differ in length");
  int pos = 0, neg = 0;
  detail::count_classes(y_true, pos, neg);
  if (pos == 0 || neg == 0) throw Error(ErrorKind::degenerate, "AUC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (y_true[order[k]] == 1) rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = pos;
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// One point per distinct score, scanned from the highest threshold down,
// preceded by (0, 0) at +inf.
inline std::vector<RocPoint> roc_curve(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw Error(ErrorKind::shape, "labels and scores differ in length");
  int pos = 0, neg = 0;
  detail::count_classes(y_true, pos, neg);
  if (pos == 0 || neg == 0) throw Error(ErrorKind::degenerate, "ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (y_true[order[i]] == 1) ++tp;
      else ++fp;
      ++i;
    }
    pts.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, s});
  }
  return pts;
}

inline double trapezoid_area(const std::vector<RocPoint>& roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  }
  return area;
}

inline constexpr double kAucWeight = 0.4;
inline constexpr double kCountMetricWeight = 0.2;

inline double combine_score(double auc_value, double precision, double recall, double balanced_accuracy) {
  return kAucWeight * auc_value + kCountMetricWeight * (precision + recall + balanced_accuracy);
}

struct EvalReport {
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double balanced_accuracy = 0.0;
  double score = 0.0;
  std::vector<RocPoint> roc_points;
  Confusion confusion;
};

inline EvalReport challenge_score(std::span<const int> y_true, std::span<const double> prob_class1,
                                  std::span<const int> y_pred) {
  EvalReport r;
  const auto cm = confusion_metrics(y_true, y_pred);
  r.auc = auc(y_true, prob_class1);
  r.roc_points = roc_curve(y_true, prob_class1);
  r.precision = cm.precision;
  r.recall = cm.recall;
  r.balanced_accuracy = cm.balanced_accuracy;
  r.confusion = cm.confusion;
  r.score = combine_score(r.auc, r.precision, r.recall, r.balanced_accuracy);
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& p : r.roc_points) roc.push_back({p.fpr, p.tpr});
  return {{"auc", r.auc},
          {"precision", r.precision},
          {"recall", r.recall},
          {"balanced_accuracy", r.balanced_accuracy},
          {"score", r.score},
          {"confusion",
           {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}}},
          {"roc_points", roc}};
}

}  // namespace cbvcc::evaluation
