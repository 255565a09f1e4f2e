#include <gtest/gtest.h>

#include <random>

#include "cbvcc/logistic.hpp"

using namespace cbvcc;
using namespace cbvcc::classifier;

namespace {

struct Problem {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
};

Problem random_problem(std::uint64_t seed, int n, int d, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(d);
  for (auto& v : w) v = g(rng);
  Problem p;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(d);
    double z = 0.3;
    for (int j = 0; j < d; ++j) {
      x[j] = g(rng);
      z += w[j] * x[j];
    }
    p.rows.push_back(x);
    p.y.push_back(z + noise * g(rng) > 0.0 ? 1 : 0);
  }
  // Both classes are required for training.
  p.y[0] = 1;
  p.y[1] = 0;
  return p;
}

std::vector<std::string> names(int d) {
  std::vector<std::string> out;
  for (int j = 0; j < d; ++j) out.push_back("f" + std::to_string(j));
  return out;
}

LogisticModel fixed_model(std::vector<double> w, double b) {
  LogisticModel m;
  m.weights = std::move(w);
  m.intercept = b;
  m.feature_schema = names(static_cast<int>(m.weights.size()));
  return m;
}

}  // namespace

TEST(Logistic, SigmoidExamples) {
  const std::vector<double> x = {std::log(3.0)};
  EXPECT_NEAR(predict_proba(fixed_model({1.0}, 0.0), x), 0.75, 1e-15);
  const std::vector<double> any = {123.0, -4.0};
  EXPECT_EQ(predict_proba(fixed_model({0.0, 0.0}, 0.0), any), 0.5);
  const std::vector<double> big = {800.0};
  EXPECT_EQ(predict_proba(fixed_model({1.0}, 0.0), big), 1.0);
  const std::vector<double> neg = {-800.0};
  EXPECT_EQ(predict_proba(fixed_model({1.0}, 0.0), neg), 0.0);
  EXPECT_TRUE(std::isfinite(log1p_exp_neg(-800.0)));
  EXPECT_DOUBLE_EQ(log1p_exp_neg(-800.0), 800.0);
}

TEST(Logistic, ThresholdIsInclusive) {
  auto m = fixed_model({1.0}, 0.0);
  const std::vector<double> zero = {0.0};
  EXPECT_EQ(predict_label(m, zero), 1);
  // logit(0.49) and logit(0.51)
  const std::vector<double> lo = {std::log(0.49 / 0.51)};
  const std::vector<double> hi = {std::log(0.51 / 0.49)};
  EXPECT_EQ(predict_label(m, lo), 0);
  EXPECT_EQ(predict_label(m, hi), 1);
}

TEST(Logistic, SchemaMismatchIsShapeError) {
  const std::vector<double> x = {1.0, 2.0};
  try {
    predict_proba(fixed_model({1.0}, 0.0), x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Logistic, GradientMatchesCentralDifferences) {
  const auto p = random_problem(3, 20, 5);
  const Eigen::MatrixXd X = detail::to_matrix(p.rows, 5);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd theta(6);
    for (int j = 0; j < 6; ++j) theta[j] = g(rng);
    const Eigen::VectorXd an = gradient(theta, X, p.y, 2.0);
    Eigen::VectorXd fd(6);
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd a = theta, b = theta;
      a[j] += h;
      b[j] -= h;
      fd[j] = (objective(a, X, p.y, 2.0) - objective(b, X, p.y, 2.0)) / (2.0 * h);
    }
    EXPECT_LT((an - fd).norm() / std::max(1.0, fd.norm()), 1e-5) << "trial " << trial;
  }
}

TEST(Logistic, HessianMatchesGradientDifferences) {
  const auto p = random_problem(4, 30, 3);
  const Eigen::MatrixXd X = detail::to_matrix(p.rows, 3);
  Eigen::VectorXd theta(4);
  theta << 0.2, -0.4, 1.1, 0.3;
  const Eigen::MatrixXd H = hessian(theta, X, 5.0);
  const double h = 1e-5;
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd a = theta, b = theta;
    a[j] += h;
    b[j] -= h;
    const Eigen::VectorXd col = (gradient(a, X, p.y, 5.0) - gradient(b, X, p.y, 5.0)) / (2.0 * h);
    EXPECT_LT((H.col(j) - col).norm() / std::max(1.0, col.norm()), 1e-6);
  }
}

TEST(Logistic, ObjectiveIsConvexAlongRandomSegments) {
  const auto p = random_problem(5, 40, 4);
  const Eigen::MatrixXd X = detail::to_matrix(p.rows, 4);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd a(5), b(5);
    for (int j = 0; j < 5; ++j) {
      a[j] = g(rng);
      b[j] = g(rng);
    }
    const double lam = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double mid = objective(lam * a + (1.0 - lam) * b, X, p.y, 10.0);
    const double chord = lam * objective(a, X, p.y, 10.0) + (1.0 - lam) * objective(b, X, p.y, 10.0);
    ASSERT_LE(mid, chord + 1e-9 * std::abs(chord));
  }
}

TEST(Logistic, TrainConvergesToStationaryPoint) {
  const auto p = random_problem(6, 200, 6);
  const auto m = train(p.rows, p.y, names(6), {.c_reg = 3.0});
  EXPECT_TRUE(m.converged);
  EXPECT_LE(m.gradient_norm, 1e-8);
  Eigen::VectorXd theta(7);
  for (int j = 0; j < 6; ++j) theta[j] = m.weights[j];
  theta[6] = m.intercept;
  EXPECT_LE(gradient(theta, detail::to_matrix(p.rows, 6), p.y, 3.0).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Logistic, SymmetricDataHasZeroIntercept) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (double x : {0.3, 0.8, 1.5, 2.0, -0.4}) {
    rows.push_back({x});
    y.push_back(1);
    rows.push_back({-x});
    y.push_back(0);
  }
  const auto m = train(rows, y, names(1), {.c_reg = 1.0});
  EXPECT_NEAR(m.intercept, 0.0, 1e-6);
}

TEST(Logistic, SeparableWeightsGrowWithC) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int i = 1; i <= 10; ++i) {
    rows.push_back({static_cast<double>(i)});
    y.push_back(1);
    rows.push_back({-static_cast<double>(i)});
    y.push_back(0);
  }
  double prev = 0.0;
  for (double c : {0.01, 1.0, 100.0, 1e4}) {
    const auto m = train(rows, y, names(1), {.c_reg = c});
    EXPECT_TRUE(m.converged) << c;
    EXPECT_GT(std::abs(m.weights[0]), prev);
    prev = std::abs(m.weights[0]);
    int correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) correct += predict_label(m, rows[i]) == y[i];
    if (c >= 1.0) {
      EXPECT_EQ(correct, 20);
    }
  }
}

TEST(Logistic, SingleClassIsDegenerate) {
  try {
    train({{1.0}, {2.0}}, {1, 1}, names(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
}

TEST(Logistic, MaxIterReportsNonConvergence) {
  const auto p = random_problem(7, 100, 3);
  const auto m = train(p.rows, p.y, names(3), {.c_reg = 1.0, .max_iter = 1});
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 1);
}

TEST(Logistic, DeterministicAndJsonRoundTrip) {
  const auto p = random_problem(9, 80, 4);
  TrainOptions opt{.c_reg = 50.0, .standardize = true};
  const auto a = train(p.rows, p.y, names(4), opt);
  const auto b = train(p.rows, p.y, names(4), opt);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.intercept, b.intercept);
  const auto back = from_json(nlohmann::json::parse(to_json(a).dump()));
  EXPECT_EQ(back.weights, a.weights);
  EXPECT_EQ(back.intercept, a.intercept);
  ASSERT_TRUE(back.standardization);
  EXPECT_EQ(back.standardization->scale, a.standardization->scale);
  for (const auto& r : p.rows) EXPECT_EQ(predict_proba(back, r), predict_proba(a, r));
}

TEST(Logistic, StandardizedFitMatchesRawFitUpToReparametrization) {
  // An affine change of the columns leaves the unpenalized logit family
  // unchanged only with C -> infinity; with moderate C both must agree in sign.
  const auto p = random_problem(10, 300, 2, 0.2);
  const auto raw = train(p.rows, p.y, names(2), {.c_reg = 1e3});
  const auto std_ = train(p.rows, p.y, names(2), {.c_reg = 1e3, .standardize = true});
  int agree = 0;
  for (const auto& r : p.rows) agree += predict_label(raw, r) == predict_label(std_, r);
  EXPECT_GE(agree, 295);
}
