#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "checks.hpp"
#include "oracles.hpp"
#include "tvar/error.hpp"
#include "tvar/model.hpp"

using namespace tvar;

namespace {

MatrixSeries as_series(const AdjustedTensor& a) { return a.values; }

SyntheticSpec spec(Eigen::Index K, Eigen::Index Q, Eigen::Index ra, Eigen::Index rb, Eigen::Index T,
                   std::uint64_t seed, double target = 0.5) {
  SyntheticSpec s;
  s.dims = {K, Q, ra, rb};
  s.T = T;
  s.seed = seed;
  s.spectral_target = target;
  return s;
}

}  // namespace

TEST(BilinearStep, IdentityAndZero) {
  std::mt19937_64 rng(1);
  const Matrix y = checks::random_matrix(3, 2, rng);
  EXPECT_EQ(bilinear_step(Matrix::Identity(3, 3), Matrix::Identity(2, 2), y), y);
  EXPECT_EQ(bilinear_step(Matrix::Zero(3, 3), Matrix::Identity(2, 2), y), Matrix::Zero(3, 2));
}

TEST(BilinearStep, MatchesKroneckerForm) {
  std::mt19937_64 rng(2);
  const Matrix a = checks::random_matrix(3, 3, rng), b = checks::random_matrix(2, 2, rng),
               y = checks::random_matrix(3, 2, rng);
  const Vector lhs = oracle::vec(bilinear_step(a, b, y));
  const Vector rhs = oracle::kron(b, a) * oracle::vec(y);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BilinearStep, ShapeMismatchNamesDimension) {
  try {
    bilinear_step(Matrix::Identity(3, 3), Matrix::Identity(2, 2), Matrix::Zero(4, 2));
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(bilinear_step(Matrix::Identity(3, 3), Matrix::Identity(2, 2), Matrix::Zero(3, 3)), InputError);
}

TEST(LogLikelihood, ZeroResidualOneStep) {
  const MatrixSeries y{Matrix::Zero(3, 2), Matrix::Zero(3, 2)};
  const double ll = log_likelihood(Matrix::Identity(3, 3), Matrix::Identity(2, 2), Matrix::Identity(3, 3),
                                   Matrix::Identity(2, 2), y);
  EXPECT_NEAR(ll, -3.0 * std::log(2 * std::numbers::pi), 1e-12);
}

TEST(LogLikelihood, MatchesExplicitKroneckerDensity) {
  std::mt19937_64 rng(3);
  const auto s = checks::random_state(3, 2, 2, 1, rng);
  const auto y = checks::simulate_from(s, 8, 4);
  const double brute = oracle::brute_log_likelihood(s.A(), s.B(), s.Sigma_A, s.Sigma_B, y);
  EXPECT_NEAR(log_likelihood(s, y), brute, 1e-8);
}

TEST(LogLikelihood, ScaleInvariance) {
  std::mt19937_64 rng(5);
  const auto s = checks::random_state(3, 2, 2, 2, rng);
  const auto y = checks::simulate_from(s, 10, 6);
  const double c = 2.7, d = 0.3;
  const double base = log_likelihood(s.A(), s.B(), s.Sigma_A, s.Sigma_B, y);
  const double scaled = log_likelihood(c * s.A(), s.B() / c, d * s.Sigma_A, s.Sigma_B / d, y);
  EXPECT_NEAR(base, scaled, 1e-8);
}

TEST(LogLikelihood, DecreasesAsResidualGrows) {
  const Matrix sa = Matrix::Identity(2, 2), sb = Matrix::Identity(2, 2);
  double prev = 1e300;
  for (double r : {0.0, 0.5, 1.0, 2.0}) {
    const MatrixSeries y{Matrix::Zero(2, 2), Matrix::Constant(2, 2, r)};
    const double ll = log_likelihood(Matrix::Zero(2, 2), Matrix::Zero(2, 2), sa, sb, y);
    EXPECT_LT(ll, prev);
    prev = ll;
  }
}

TEST(LogLikelihood, NonPdCovarianceRejected) {
  const MatrixSeries y{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1;
  EXPECT_THROW(log_likelihood(Matrix::Zero(2, 2), Matrix::Zero(2, 2), bad, Matrix::Identity(2, 2), y),
               NumericalError);
}

TEST(ParamCounts, ChicagoDims) {
  const auto p = param_counts(28, 22);
  EXPECT_EQ(p.full_vector_ar, 569492);
  EXPECT_EQ(p.separable, 1927);
  const auto one = param_counts(1, 1);
  EXPECT_EQ(one.full_vector_ar, 2);
  EXPECT_EQ(one.separable, 4);
  EXPECT_EQ(param_counts(5, 9).separable, param_counts(9, 5).separable);
}

TEST(Simulate, SpectralTargetAndDeterminism) {
  for (double target : {0.2, 0.5, 0.9}) {
    const auto d = simulate(spec(4, 3, 2, 2, 30, 7, target));
    EXPECT_NEAR(spectral_radius(kron(d.truth.B(), d.truth.A())), target, 1e-6);
    d.truth.validate(1e-8);
  }
  const auto a = simulate(spec(3, 2, 2, 1, 20, 99));
  const auto b = simulate(spec(3, 2, 2, 1, 20, 99));
  EXPECT_EQ(state_to_json(a.truth), state_to_json(b.truth));
  for (std::size_t t = 0; t < a.data.values.size(); ++t) EXPECT_EQ(a.data.values[t], b.data.values[t]);
}

TEST(Simulate, RejectsNonStationaryTarget) {
  EXPECT_THROW(simulate(spec(2, 2, 1, 1, 10, 1, 1.0)), InputError);
  EXPECT_THROW(simulate(spec(2, 2, 1, 1, 10, 1, 1.5)), InputError);
  EXPECT_THROW(simulate(spec(2, 2, 3, 1, 10, 1)), InputError);
}

TEST(Simulate, LagOneAutocovarianceMatchesLyapunov) {
  const auto d = simulate(spec(2, 2, 2, 2, 5000, 12, 0.7));
  const Matrix f = kron(d.truth.B(), d.truth.A());
  const Matrix g0 = oracle::lyapunov(f, kron(d.truth.Sigma_B, d.truth.Sigma_A));
  const Matrix g1 = f * g0;
  const auto y = as_series(d.data);
  Matrix s1 = Matrix::Zero(4, 4);
  for (std::size_t t = 1; t < y.size(); ++t) s1 += oracle::vec(y[t]) * oracle::vec(y[t - 1]).transpose();
  s1 /= static_cast<double>(y.size() - 1);
  EXPECT_LT((s1 - g1).norm() / g1.norm(), 0.10);
}

TEST(Simulate, OlsRecoversKroneckerProduct) {
  const auto d = simulate(spec(2, 2, 2, 2, 5000, 13, 0.7));
  const auto y = as_series(d.data);
  Matrix xx = Matrix::Zero(4, 4), yx = Matrix::Zero(4, 4);
  for (std::size_t t = 1; t < y.size(); ++t) {
    const Vector cur = oracle::vec(y[t]), prev = oracle::vec(y[t - 1]);
    xx += prev * prev.transpose();
    yx += cur * prev.transpose();
  }
  const Matrix f_hat = yx * xx.inverse();
  const Matrix f = kron(d.truth.B(), d.truth.A());
  EXPECT_LT((f_hat - f).norm() / f.norm(), 0.05);
}

TEST(StateJson, RoundTrip) {
  std::mt19937_64 rng(9);
  const auto s = checks::random_state(3, 2, 2, 1, rng);
  const auto r = state_from_json(state_to_json(s));
  EXPECT_EQ(r.dims(), s.dims());
  EXPECT_LT((r.A() - s.A()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((r.Sigma_B - s.Sigma_B).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(state_from_json("{}"), InputError);
}

TEST(ModelDimsTest, Validation) {
  EXPECT_NO_THROW((ModelDims{3, 2, 3, 1}).validate());
  EXPECT_THROW((ModelDims{3, 2, 0, 1}).validate(), InputError);
  EXPECT_THROW((ModelDims{3, 2, 1, 3}).validate(), InputError);
}
