#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cbvcc/types.hpp"

namespace cbvcc::classifier {

// Present when the model was fitted on z-scored columns.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double c_reg = 200.0;
  std::vector<std::string> feature_schema;
  double threshold = 0.5;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::optional<Standardization> standardization;

  void validate() const {
    if (weights.size() != feature_schema.size()) {
      throw Error(ErrorKind::shape, "model weights do not match schema length");
    }
    if (!(c_reg > 0.0)) throw Error(ErrorKind::config, "c_reg must be > 0");
    for (double w : weights) {
      if (!std::isfinite(w)) throw Error(ErrorKind::numeric, "non-finite model weight");
    }
    if (!std::isfinite(intercept)) throw Error(ErrorKind::numeric, "non-finite intercept");
  }
};

struct TrainOptions {
  double c_reg = 200.0;
  double tol = 1e-8;
  int max_iter = 1000;
  double threshold = 0.5;
  bool standardize = false;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow.
inline double log1p_exp_neg(double m) {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// J(w, b) = 0.5 |w|^2 + C * sum_i log(1 + exp(-s_i (w.x_i + b))), s_i = +-1.
// theta packs (w, b); the intercept is not penalized.
inline double objective(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                        const std::vector<int>& y, double c_reg) {
  const Eigen::Index d = X.cols();
  const Eigen::VectorXd z = X * theta.head(d) + Eigen::VectorXd::Constant(X.rows(), theta[d]);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double s = y[i] == 1 ? 1.0 : -1.0;
    loss += log1p_exp_neg(s * z[i]);
  }
  return 0.5 * theta.head(d).squaredNorm() + c_reg * loss;
}

inline Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                                const std::vector<int>& y, double c_reg) {
  const Eigen::Index d = X.cols();
  const Eigen::VectorXd z = X * theta.head(d) + Eigen::VectorXd::Constant(X.rows(), theta[d]);
  // dLoss/dz_i = sigma(z_i) - y_i
  Eigen::VectorXd r(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) r[i] = sigmoid(z[i]) - (y[i] == 1 ? 1.0 : 0.0);
  Eigen::VectorXd g(d + 1);
  g.head(d) = theta.head(d) + c_reg * (X.transpose() * r);
  g[d] = c_reg * r.sum();
  return g;
}

inline Eigen::MatrixXd hessian(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                               double c_reg) {
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd Xa(X.rows(), d + 1);
  Xa.leftCols(d) = X;
  Xa.col(d).setOnes();
  const Eigen::VectorXd z = Xa * theta;
  Eigen::VectorXd wts(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double p = sigmoid(z[i]);
    wts[i] = c_reg * p * (1.0 - p);
  }
  Eigen::MatrixXd H = Xa.transpose() * wts.asDiagonal() * Xa;
  for (Eigen::Index j = 0; j < d; ++j) H(j, j) += 1.0;
  return H;
}

namespace detail {

inline Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, std::size_t d) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw Error(ErrorKind::shape, "feature row has wrong length");
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(rows[i][j])) throw Error(ErrorKind::numeric, "non-finite feature value");
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return X;
}

}  // namespace detail

// Damped Newton iterations from zero with Armijo backtracking. Stops when the
// gradient infinity-norm reaches tol; if max_iter or the floating-point floor
// is hit first, the parameters are returned with converged = false.
inline LogisticModel train(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                           const std::vector<std::string>& schema, const TrainOptions& opt = {}) {
  if (!(opt.c_reg > 0.0)) throw Error(ErrorKind::config, "c_reg must be > 0");
  if (rows.size() != y.size()) throw Error(ErrorKind::shape, "feature rows and labels differ in length");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 1) has1 = true;
    else if (v == 0) has0 = true;
    else throw Error(ErrorKind::range, "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error(ErrorKind::degenerate, "training labels contain a single class");

  const std::size_t d = schema.size();
  Eigen::MatrixXd X = detail::to_matrix(rows, d);

  LogisticModel model;
  model.c_reg = opt.c_reg;
  model.threshold = opt.threshold;
  model.feature_schema = schema;

  if (opt.standardize) {
    Standardization st;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double mean = X.col(j).mean();
      const double var = (X.col(j).array() - mean).square().mean();
      const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
      X.col(j) = (X.col(j).array() - mean) / scale;
      st.mean.push_back(mean);
      st.scale.push_back(scale);
    }
    model.standardization = std::move(st);
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) + 1);
  double f = objective(theta, X, y, opt.c_reg);
  Eigen::VectorXd g = gradient(theta, X, y, opt.c_reg);
  int iter = 0;
  while (iter < opt.max_iter && g.lpNorm<Eigen::Infinity>() > opt.tol) {
    const Eigen::MatrixXd H = hessian(theta, X, opt.c_reg);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd step = -ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || g.dot(step) >= 0.0) step = -g;

    const double slope = g.dot(step);
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double f_trial = f;
    Eigen::VectorXd g_trial;
    // Near the optimum the predicted decrease drops below the rounding of f,
    // so a full step that stays within that rounding and shrinks the
    // gradient is accepted as well.
    const double f_noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    for (int k = 0; k < 60; ++k) {
      trial = theta + t * step;
      f_trial = objective(trial, X, y, opt.c_reg);
      if (f_trial <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      if (k == 0 && f_trial <= f + f_noise) {
        g_trial = gradient(trial, X, y, opt.c_reg);
        if (g_trial.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    ++iter;
    if (!accepted) break;  // No representable decrease left.
    if (g_trial.size() == 0 || t != 1.0) g_trial = gradient(trial, X, y, opt.c_reg);
    theta = std::move(trial);
    f = f_trial;
    g = g_trial;
  }

  model.weights.assign(theta.data(), theta.data() + d);
  model.intercept = theta[static_cast<Eigen::Index>(d)];
  model.iterations = iter;
  model.gradient_norm = g.lpNorm<Eigen::Infinity>();
  model.converged = model.gradient_norm <= opt.tol;
  model.validate();
  return model;
}

inline double decision_value(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw Error(ErrorKind::shape, "feature vector has " + std::to_string(x.size()) +
                                      " values, model expects " + std::to_string(model.weights.size()));
  }
  double z = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double v = x[j];
    if (model.standardization) {
      v = (v - model.standardization->mean[j]) / model.standardization->scale[j];
    }
    z += model.weights[j] * v;
  }
  return z;
}

inline double predict_proba(const LogisticModel& model, std::span<const double> x) {
  return sigmoid(decision_value(model, x));
}

// Inclusive at the threshold.
inline int predict_label(const LogisticModel& model, std::span<const double> x) {
  return predict_proba(model, x) >= model.threshold ? 1 : 0;
}

inline nlohmann::json to_json(const LogisticModel& m) {
  nlohmann::json j;
  j["schema"] = m.feature_schema;
  j["weights"] = m.weights;
  j["intercept"] = m.intercept;
  j["c_reg"] = m.c_reg;
  j["threshold"] = m.threshold;
  j["converged"] = m.converged;
  if (m.standardization) {
    j["standardization"] = {{"mean", m.standardization->mean},
                            {"scale", m.standardization->scale}};
  }
  return j;
}

inline LogisticModel from_json(const nlohmann::json& j) {
  LogisticModel m;
  try {
    m.feature_schema = j.at("schema").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.c_reg = j.at("c_reg").get<double>();
    m.threshold = j.at("threshold").get<double>();
    m.converged = j.at("converged").get<bool>();
    if (j.contains("standardization")) {
      Standardization st;
      st.mean = j["standardization"].at("mean").get<std::vector<double>>();
      st.scale = j["standardization"].at("scale").get<std::vector<double>>();
      if (st.mean.size() != m.weights.size() || st.scale.size() != m.weights.size()) {
        throw Error(ErrorKind::shape, "standardization does not match schema length");
      }
      m.standardization = std::move(st);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("model json: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace cbvcc::classifier
