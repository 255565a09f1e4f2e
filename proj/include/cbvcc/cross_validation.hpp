#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cbvcc/logistic.hpp"
#include "cbvcc/metrics.hpp"
#include "cbvcc/parallel.hpp"
#include "cbvcc/seed.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::evaluation {

struct FoldPlan {
  int k = 5;
  int repeats = 5;
  std::uint64_t seed = 0;
  // fold_of[r][i]: fold of sample i in repeat r.
  std::vector<std::vector<int>> fold_of;
  // groups_in[r][f]: group ids dealt into fold f in repeat r.
  std::vector<std::vector<std::vector<std::string>>> groups_in;
};

// Group-pure k-fold plan. Each repeat shuffles the groups with its own
// derived seed, orders them by size (largest first, shuffle order on ties)
// and deals each one to the currently smallest fold (lowest index on ties).
inline FoldPlan grouped_kfold(const std::vector<std::string>& group_of_sample, int k, int repeats,
                              std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::config, "k must be at least 2");
  if (repeats < 1) throw Error(ErrorKind::config, "repeats must be at least 1");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < group_of_sample.size(); ++i) {
    if (group_of_sample[i].empty()) throw Error(ErrorKind::config, "sample without group_id");
    members[group_of_sample[i]].push_back(i);
  }
  if (static_cast<int>(members.size()) < k) {
    throw Error(ErrorKind::infeasible, "grouped k-fold needs at least " + std::to_string(k) +
                                           " groups, found " + std::to_string(members.size()));
  }

  FoldPlan plan;
  plan.k = k;
  plan.repeats = repeats;
  plan.seed = seed;
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::string> groups;
    for (const auto& [g, _] : members) groups.push_back(g);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    for (std::size_t i = groups.size(); i > 1; --i) {
      std::swap(groups[i - 1], groups[rng() % i]);
    }
    std::stable_sort(groups.begin(), groups.end(), [&](const std::string& a, const std::string& b) {
      return members[a].size() > members[b].size();
    });

    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
    std::vector<int> fold_of(group_of_sample.size(), -1);
    std::vector<std::vector<std::string>> dealt(static_cast<std::size_t>(k));
    for (const auto& g : groups) {
      const auto f = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
      load[f] += members[g].size();
      dealt[f].push_back(g);
      for (auto i : members[g]) fold_of[i] = static_cast<int>(f);
    }
    plan.fold_of.push_back(std::move(fold_of));
    plan.groups_in.push_back(std::move(dealt));
  }
  return plan;
}

struct FoldScores {
  int repeat = 0;
  int fold = 0;
  int n_train = 0;
  int n_val = 0;
  double train_balanced_accuracy = 0.0;
  std::optional<double> train_score;
  double val_balanced_accuracy = 0.0;
  std::optional<double> val_score;
  bool converged = true;
};

struct CvResult {
  FoldPlan plan;
  std::vector<FoldScores> folds;  // repeat-major

  double val_ba_spread() const {
    if (folds.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(folds.begin(), folds.end(), [](const auto& a, const auto& b) {
      return a.val_balanced_accuracy < b.val_balanced_accuracy;
    });
    return hi->val_balanced_accuracy - lo->val_balanced_accuracy;
  }
  double mean_val_ba() const {
    double s = 0.0;
    for (const auto& f : folds) s += f.val_balanced_accuracy;
    return folds.empty() ? 0.0 : s / folds.size();
  }
};

namespace detail {

struct SubsetScore {
  double ba = 0.0;
  std::optional<double> score;
};

inline SubsetScore score_subset(const classifier::LogisticModel& model,
                                const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                                const std::vector<std::size_t>& idx) {
  std::vector<int> yt, yp;
  std::vector<double> pr;
  bool has0 = false, has1 = false;
  for (auto i : idx) {
    const double p = classifier::predict_proba(model, X[i]);
    yt.push_back(y[i]);
    pr.push_back(p);
    yp.push_back(p >= model.threshold ? 1 : 0);
    (y[i] == 1 ? has1 : has0) = true;
  }
  SubsetScore s;
  s.ba = confusion_metrics(yt, yp).balanced_accuracy;
  if (has0 && has1) s.score = challenge_score(yt, pr, yp).score;
  return s;
}

}  // namespace detail

// Trains one model per (repeat, fold) on the other folds and scores both the
// training part and the held-out fold. Folds run on `jobs` threads.
inline CvResult run_cv(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                       const std::vector<std::string>& schema, const FoldPlan& plan,
                       const classifier::TrainOptions& opt, int jobs = 1) {
  CvResult res;
  res.plan = plan;
  const std::size_t n_tasks = static_cast<std::size_t>(plan.repeats) * plan.k;
  res.folds.resize(n_tasks);
  parallel_for(n_tasks, jobs, [&](std::size_t task) {
    const int r = static_cast<int>(task) / plan.k;
    const int f = static_cast<int>(task) % plan.k;
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < X.size(); ++i) (plan.fold_of[r][i] == f ? va : tr).push_back(i);
    std::vector<std::vector<double>> Xt;
    std::vector<int> yt;
    for (auto i : tr) {
      Xt.push_back(X[i]);
      yt.push_back(y[i]);
    }
    const auto model = classifier::train(Xt, yt, schema, opt);
    FoldScores fs;
    fs.repeat = r;
    fs.fold = f;
    fs.n_train = static_cast<int>(tr.size());
    fs.n_val = static_cast<int>(va.size());
    fs.converged = model.converged;
    const auto ts = detail::score_subset(model, X, y, tr);
    const auto vs = detail::score_subset(model, X, y, va);
    fs.train_balanced_accuracy = ts.ba;
    fs.train_score = ts.score;
    fs.val_balanced_accuracy = vs.ba;
    fs.val_score = vs.score;
    res.folds[task] = fs;
  });
  return res;
}

}  // namespace cbvcc::evaluation
