#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "checks.hpp"
#include "oracles.hpp"
#include "tvar/error.hpp"
#include "tvar/sampler.hpp"

using namespace tvar;

namespace {

MatrixSeries transpose_series(const MatrixSeries& y) {
  MatrixSeries out;
  for (const auto& m : y) out.push_back(m.transpose());
  return out;
}

/// Y_t = A Y_{t-1} B^T with no noise.
MatrixSeries noise_free(const Matrix& a, const Matrix& b, Eigen::Index T, std::mt19937_64& rng) {
  MatrixSeries y{checks::random_matrix(a.rows(), b.rows(), rng)};
  for (Eigen::Index t = 1; t < T; ++t) y.push_back(a * y.back() * b.transpose());
  return y;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix sample_covariance(const std::vector<Vector>& xs) {
  Vector mean = Vector::Zero(xs.front().size());
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Matrix c = Matrix::Zero(mean.size(), mean.size());
  for (const auto& x : xs) c += (x - mean) * (x - mean).transpose();
  return c / static_cast<double>(xs.size() - 1);
}

/// |a - b| relative to the geometric mean of the corresponding variances.
double correlation_scale_error(const Matrix& a, const Matrix& b) {
  double e = 0;
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      e = std::max(e, std::abs(a(i, j) - b(i, j)) / std::sqrt(b(i, i) * b(j, j)));
  return e;
}

}  // namespace

// ----------------------------------------------------------------------------
// matricization

TEST(Matricize, IdentityWhitening) {
  std::mt19937_64 rng(1);
  MatrixSeries y;
  for (int t = 0; t < 4; ++t) y.push_back(checks::random_matrix(3, 2, rng));
  const auto m = matricize_A(y, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  ASSERT_EQ(m.y_tilde.rows(), 3);
  ASSERT_EQ(m.y_tilde.cols(), 6);
  for (int t = 1; t < 4; ++t) {
    EXPECT_EQ(m.y_tilde.middleCols(2 * (t - 1), 2), y[t]);
    EXPECT_EQ(m.x_tilde.middleCols(2 * (t - 1), 2), y[t - 1]);
  }
  const auto mb = matricize_B(y, Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  ASSERT_EQ(mb.y_tilde.rows(), 2);
  ASSERT_EQ(mb.y_tilde.cols(), 9);
  for (int t = 1; t < 4; ++t) EXPECT_EQ(mb.y_tilde.middleCols(3 * (t - 1), 3), y[t].transpose());
}

TEST(Matricize, OlsRecoversCoefficientsOnNoiseFreeData) {
  std::mt19937_64 rng(2);
  const Matrix a = checks::random_matrix(3, 3, rng, 0.7), b = checks::random_matrix(2, 2, rng, 0.7);
  const auto y = noise_free(a, b, 6, rng);
  const Matrix sb = checks::random_spd(2, rng), sa = checks::random_spd(3, rng);
  const auto ma = matricize_A(y, b, sb);
  const Matrix a_hat = ma.y_tilde * ma.x_tilde.transpose() * (ma.x_tilde * ma.x_tilde.transpose()).inverse();
  EXPECT_LT(max_abs(a_hat - a), 1e-8);
  const auto mb = matricize_B(y, a, sa);
  const Matrix b_hat = mb.y_tilde * mb.x_tilde.transpose() * (mb.x_tilde * mb.x_tilde.transpose()).inverse();
  EXPECT_LT(max_abs(b_hat - b), 1e-8);
}

TEST(Matricize, SideBOnTransposedProblemEqualsSideA) {
  std::mt19937_64 rng(3);
  const auto s = checks::random_state(3, 2, 2, 1, rng);
  const auto y = checks::simulate_from(s, 7, 5);
  const auto ma = matricize_A(y, s.B(), s.Sigma_B);
  const auto mb = matricize_B(transpose_series(y), s.B(), s.Sigma_B);
  EXPECT_LT(max_abs(ma.y_tilde - mb.y_tilde), 1e-12);
  EXPECT_LT(max_abs(ma.x_tilde - mb.x_tilde), 1e-12);
}

TEST(Matricize, WhitenedResidualCovariance) {
  std::mt19937_64 rng(4);
  const auto s = checks::random_state(3, 2, 2, 2, rng);
  const auto y = checks::simulate_from(s, 2000, 6);
  const auto ma = matricize_A(y, s.B(), s.Sigma_B);
  const Matrix e = ma.y_tilde - s.A() * ma.x_tilde;
  const Matrix cov_a = e * e.transpose() / static_cast<double>(e.cols());
  EXPECT_LT((cov_a - s.Sigma_A).norm() / s.Sigma_A.norm(), 0.10);
  const auto mb = matricize_B(y, s.A(), s.Sigma_A);
  const Matrix eb = mb.y_tilde - s.B() * mb.x_tilde;
  const Matrix cov_b = eb * eb.transpose() / static_cast<double>(eb.cols());
  EXPECT_LT((cov_b - s.Sigma_B).norm() / s.Sigma_B.norm(), 0.10);
}

TEST(Matricize, NonPdCovarianceNamed) {
  const MatrixSeries y{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  try {
    matricize_A(y, Matrix::Identity(2, 2), -Matrix::Identity(2, 2));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("Sigma_B"), std::string::npos) << e.what();
  }
}

// ----------------------------------------------------------------------------
// Z draws

TEST(DrawZ, NoDataGivesPrior) {
  Matricization m;
  m.y_tilde = Matrix(3, 0);
  m.x_tilde = Matrix(3, 0);
  GibbsConfig cfg;
  std::mt19937_64 g(5);
  const Matrix L = checks::orthonormal(3, 2, g);
  const auto c = z_conditional(m, L, Matrix::Identity(3, 3), cfg.prior_z_variance);
  EXPECT_LT(c.mean.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(max_abs(c.precision - 0.1 * Matrix::Identity(6, 6)), 1e-15);
  Rng rng(6);
  std::vector<Vector> draws;
  for (int i = 0; i < 20000; ++i) draws.push_back(vec(draw_Z_A(m, L, Matrix::Identity(3, 3), cfg, rng)));
  const Matrix cov = sample_covariance(draws);
  EXPECT_LT(correlation_scale_error(cov, 10.0 * Matrix::Identity(6, 6)), 0.05);
}

TEST(DrawZ, FlatPriorLimitIsGls) {
  std::mt19937_64 rng(7);
  const auto s = checks::random_state(4, 3, 2, 2, rng);
  const auto y = noise_free(s.A(), s.B(), 8, rng);
  const auto ma = matricize_A(y, s.B(), s.Sigma_B);
  const auto c = z_conditional(ma, s.L_A, s.Sigma_A, 1e12);
  EXPECT_LT(max_abs(s.L_A * unvec(c.mean, 2, 4) - s.A()), 1e-6);
  const auto mb = matricize_B(y, s.A(), s.Sigma_A);
  const auto cb = z_conditional(mb, s.L_B, s.Sigma_B, 1e12);
  EXPECT_LT(max_abs(s.L_B * unvec(cb.mean, 2, 3) - s.B()), 1e-6);
}

TEST(DrawZ, PrecisionMatchesExplicitKronecker) {
  std::mt19937_64 rng(8);
  const auto s = checks::random_state(3, 2, 2, 1, rng);
  const auto y = checks::simulate_from(s, 6, 9);
  const auto m = matricize_A(y, s.B(), s.Sigma_B);
  const auto c = z_conditional(m, s.L_A, s.Sigma_A, 10.0);
  const Matrix si = s.Sigma_A.inverse();
  const Matrix prec = 0.1 * Matrix::Identity(6, 6) +
                      oracle::kron(m.x_tilde * m.x_tilde.transpose(), s.L_A.transpose() * si * s.L_A);
  const Vector mean = prec.inverse() * oracle::vec(s.L_A.transpose() * si * m.y_tilde * m.x_tilde.transpose());
  EXPECT_LT(max_abs(c.precision - prec), 1e-10);
  EXPECT_LT((c.mean - mean).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FullConditionals, MatchGridQuadrature) {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto g = checks::conditional_grid_check(seed);
    EXPECT_EQ(g.entries, 8);
    EXPECT_LT(g.max_mean_error, 1e-4) << seed;
    EXPECT_LT(g.max_sd_error, 1e-4) << seed;
  }
}

TEST(DrawZ, SideBOnTransposedProblemMatchesSideA) {
  std::mt19937_64 rng(14);
  const auto s = checks::random_state(3, 2, 2, 1, rng);
  const auto y = checks::simulate_from(s, 9, 15);
  const GibbsConfig cfg;
  const auto ma = matricize_A(y, s.B(), s.Sigma_B);
  const auto mb = matricize_B(transpose_series(y), s.B(), s.Sigma_B);
  Rng r1(3), r2(3);
  EXPECT_LT(max_abs(draw_Z_A(ma, s.L_A, s.Sigma_A, cfg, r1) - draw_Z_B(mb, s.L_A, s.Sigma_A, cfg, r2)), 1e-10);
  EXPECT_LT(max_abs(draw_L_A(ma, s.Z_A, s.Sigma_A, r1) - draw_L_B(mb, s.Z_A, s.Sigma_A, r2)), 1e-10);
  EXPECT_LT(max_abs(draw_Sigma_A(ma, s.A(), cfg, r1) - draw_Sigma_B(mb, s.A(), cfg, r2)), 1e-10);
}

// ----------------------------------------------------------------------------
// L draws

TEST(DrawL, SmallNoiseConcentratesOnGls) {
  std::mt19937_64 rng(16);
  const auto s = checks::random_state(4, 3, 2, 2, rng);
  const auto y = noise_free(s.A(), s.B(), 8, rng);
  const Matrix sigma = 1e-14 * Matrix::Identity(4, 4);
  const auto m = matricize_A(y, s.B(), s.Sigma_B);
  const auto c = l_conditional(m, s.Z_A, sigma);
  EXPECT_LT(max_abs(c.mean - s.L_A), 1e-6);
  Rng r(17);
  EXPECT_LT(max_abs(draw_L_A(m, s.Z_A, sigma, r) - s.L_A), 1e-5);
}

TEST(DrawL, MonteCarloCovarianceMatchesKronecker) {
  std::mt19937_64 rng(18);
  const auto s = checks::random_state(3, 2, 2, 2, rng);
  const auto y = checks::simulate_from(s, 10, 19);
  const auto m = matricize_A(y, s.B(), s.Sigma_B);
  const auto c = l_conditional(m, s.Z_A, s.Sigma_A);
  Rng r(20);
  std::vector<Vector> draws;
  for (int i = 0; i < 20000; ++i) draws.push_back(vec(draw_L_A(m, s.Z_A, s.Sigma_A, r)));
  const Matrix expected = oracle::kron(c.col_cov, s.Sigma_A);
  EXPECT_LT(correlation_scale_error(sample_covariance(draws), expected), 0.05);
  for (Eigen::Index i = 0; i < expected.rows(); ++i)
    EXPECT_NEAR(sample_covariance(draws)(i, i) / expected(i, i), 1.0, 0.05);
}

TEST(DrawL, RankOneIsScalarRegression) {
  std::mt19937_64 rng(21);
  const auto s = checks::random_state(3, 2, 1, 1, rng);
  const auto y = checks::simulate_from(s, 12, 22);
  const auto m = matricize_A(y, s.B(), s.Sigma_B);
  const Vector zx = m.x_tilde.transpose() * s.Z_A.transpose();  // regressor, one column per observation
  const double g = zx.squaredNorm();
  const Vector mean = m.y_tilde * zx / g;
  Rng r1(23), r2(23);
  const Vector n = r2.normal_vector(3);
  const Eigen::LLT<Matrix> llt(s.Sigma_A);
  const Vector expected = mean + Matrix(llt.matrixL()) * n / std::sqrt(g);
  EXPECT_LT((draw_L_A(m, s.Z_A, s.Sigma_A, r1).col(0) - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DrawL, SingularGramSuggestsSmallerRank) {
  std::mt19937_64 rng(24);
  const auto s = checks::random_state(3, 2, 2, 1, rng);
  const auto y = checks::simulate_from(s, 6, 25);
  const auto m = matricize_A(y, s.B(), s.Sigma_B);
  Rng r(1);
  try {
    draw_L_A(m, Matrix::Zero(2, 3), s.Sigma_A, r);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("smaller rank"), std::string::npos) << e.what();
  }
}

// ----------------------------------------------------------------------------
// Sigma draws

TEST(DrawSigma, InverseWishartMean) {
  Matrix S(3, 3);
  S << 4.0, 1.5, 1.0, 1.5, 3.0, 0.8, 1.0, 0.8, 2.0;
  Rng r(26);
  Matrix mean = Matrix::Zero(3, 3);
  const int n = 50000;
  for (int i = 0; i < n; ++i) mean += draw_inverse_wishart(30.0, S, r);
  mean /= n;
  const Matrix expected = S / (30.0 - 3 - 1);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(mean(i, j) / expected(i, j), 1.0, 0.02) << i << "," << j;
}

TEST(DrawSigma, ZeroResidualLargeDof) {
  Matricization m;
  m.y_tilde = Matrix::Zero(3, 5000);
  m.x_tilde = Matrix::Zero(3, 5000);
  const GibbsConfig cfg;
  const auto c = sigma_conditional(m, Matrix::Identity(3, 3), cfg);
  EXPECT_EQ(c.dof, 5002.0);
  EXPECT_LT(max_abs(c.scale - 2.0 * Matrix::Identity(3, 3)), 1e-15);
  Rng r(27);
  Matrix mean = Matrix::Zero(3, 3);
  for (int i = 0; i < 2000; ++i) mean += draw_Sigma_A(m, Matrix::Identity(3, 3), cfg, r);
  mean /= 2000.0;
  const double expected = 2.0 / (5002.0 - 3 - 1);
  EXPECT_LT(max_abs(mean / expected - Matrix::Identity(3, 3)), 0.01);
}

TEST(DrawSigma, ScalarCaseIsInverseGamma) {
  for (Side side : {Side::A, Side::B}) {
    const auto q = checks::inverse_gamma_check(side, 28);
    EXPECT_LT(q.max_z, 4.0);
    for (std::size_t i = 0; i < q.probs.size(); ++i) EXPECT_NEAR(q.sampler[i] / q.exact[i], 1.0, 0.03);
  }
}

TEST(DrawSigma, ImproperConditionalRejected) {
  Rng r(1);
  EXPECT_THROW(draw_inverse_wishart(1.0, Matrix::Identity(3, 3), r), InputError);
}

// ----------------------------------------------------------------------------
// identifiability steps

TEST(EnforceQr, IdempotentOnOrthonormal) {
  std::mt19937_64 rng(29);
  const Matrix L = checks::random_matrix(5, 2, rng), Z = checks::random_matrix(2, 5, rng);
  const auto once = enforce_qr(L, Z);
  const auto twice = enforce_qr(once.L, once.Z);
  EXPECT_LT(max_abs(twice.L - once.L), 1e-12);
  EXPECT_LT(max_abs(twice.Z - once.Z), 1e-12);
}

TEST(EnforceQr, PreservesProductAndOrthonormalizes) {
  std::mt19937_64 rng(30);
  const Matrix L = checks::random_matrix(5, 2, rng), Z = checks::random_matrix(2, 5, rng);
  const auto f = enforce_qr(L, Z);
  EXPECT_LT(max_abs(f.L * f.Z - L * Z), 1e-12);
  EXPECT_LT(max_abs(f.L.transpose() * f.L - Matrix::Identity(2, 2)), 1e-12);
}

TEST(EnforceQr, NegatedColumnCanonicalized) {
  // With diag(R) >= 0 the orthonormal factor is unique, so flipping a column
  // of L (and the matching row of Z) only flips that column of L'.
  std::mt19937_64 rng(31);
  const Matrix L = checks::random_matrix(5, 2, rng), Z = checks::random_matrix(2, 5, rng);
  Matrix Ln = L, Zn = Z;
  Ln.col(1) *= -1;
  Zn.row(1) *= -1;
  const auto a = enforce_qr(L, Z), b = enforce_qr(Ln, Zn);
  EXPECT_LT(max_abs(a.L * a.Z - b.L * b.Z), 1e-12);
  EXPECT_LT(max_abs(a.L.col(0) - b.L.col(0)), 1e-12);
  EXPECT_LT(max_abs(a.L.col(1) + b.L.col(1)), 1e-12);
  const Matrix ra = a.L.transpose() * L, rb = b.L.transpose() * Ln;
  EXPECT_GT(ra(1, 1), 0.0);
  EXPECT_GT(rb(1, 1), 0.0);
  EXPECT_LT(std::abs(rb(1, 0)), 1e-12);
}

TEST(EnforceQr, RankDeficientRejected) {
  Matrix L = Matrix::Zero(4, 2);
  L(0, 0) = 1;
  EXPECT_THROW(enforce_qr(L, Matrix::Ones(2, 4)), NumericalError);
}

TEST(Rescale, BalancedStateIsFixedPoint) {
  std::mt19937_64 rng(32);
  const auto s = rescale(checks::random_state(3, 2, 2, 2, rng));
  EXPECT_NEAR(s.A().norm(), s.B().norm(), 1e-12);
  EXPECT_NEAR(s.Sigma_A.norm(), s.Sigma_B.norm(), 1e-12);
  const auto t = rescale(s);
  EXPECT_LT(max_abs(t.Z_A - s.Z_A), 1e-12);
  EXPECT_LT(max_abs(t.Z_B - s.Z_B), 1e-12);
  EXPECT_LT(max_abs(t.Sigma_A - s.Sigma_A), 1e-12);
  EXPECT_LT(max_abs(t.Sigma_B - s.Sigma_B), 1e-12);
}

TEST(Rescale, OrbitInvariance) {
  std::mt19937_64 rng(33);
  const auto s = checks::random_state(3, 2, 2, 2, rng);
  auto u = s;
  u.Z_A *= 2.0;
  u.Z_B /= 2.0;
  u.Sigma_A *= 5.0;
  u.Sigma_B /= 5.0;
  const auto a = rescale(s), b = rescale(u);
  EXPECT_LT(max_abs(a.A() - b.A()), 1e-12);
  EXPECT_LT(max_abs(a.B() - b.B()), 1e-12);
  EXPECT_LT(max_abs(a.Sigma_A - b.Sigma_A), 1e-12);
}

TEST(Rescale, KroneckerProductsPreserved) {
  const auto c = checks::invariance_check(34);
  EXPECT_LT(c.max_kron_coef_error, 1e-10);
  EXPECT_LT(c.max_kron_cov_error, 1e-10);
  ModelState zero;
  std::mt19937_64 rng(35);
  zero = checks::random_state(2, 2, 1, 1, rng);
  zero.Z_A.setZero();
  EXPECT_THROW(rescale(zero), NumericalError);
}

// ----------------------------------------------------------------------------
// chains

TEST(RunChain, ZeroDrawsIsEmpty) {
  const auto d = simulate({{3, 2, 1, 1}, 20, 1});
  GibbsConfig cfg;
  cfg.n_draws = 0;
  cfg.n_burnin = 5;
  const auto draws = run_chain(d.data, {3, 2, 1, 1}, cfg);
  EXPECT_TRUE(draws.empty());
  EXPECT_TRUE(draws.spectral_radius.empty());
}

TEST(RunChain, Deterministic) {
  const auto d = simulate({{3, 2, 2, 1}, 30, 2});
  GibbsConfig cfg;
  cfg.n_draws = 20;
  cfg.n_burnin = 10;
  cfg.thin = 2;
  cfg.seed = 77;
  const auto a = run_chain(d.data, {3, 2, 2, 1}, cfg), b = run_chain(d.data, {3, 2, 2, 1}, cfg);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.states[i].L_A, b.states[i].L_A);
    EXPECT_EQ(a.states[i].Z_B, b.states[i].Z_B);
    EXPECT_EQ(a.states[i].Sigma_A, b.states[i].Sigma_A);
  }
  cfg.seed = 78;
  EXPECT_NE(run_chain(d.data, {3, 2, 2, 1}, cfg).states[0].Z_A, a.states[0].Z_A);
}

TEST(RunChain, RetainedStatesSatisfyInvariants) {
  const auto d = simulate({{4, 3, 2, 2}, 40, 3});
  GibbsConfig cfg;
  cfg.n_draws = 50;
  cfg.n_burnin = 20;
  const auto draws = run_chain(d.data, {4, 3, 2, 2}, cfg);
  ASSERT_EQ(draws.size(), 50u);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& s = draws.states[i];
    EXPECT_NO_THROW(s.validate(1e-8));
    EXPECT_TRUE(std::isfinite(log_likelihood(s, d.data)));
    EXPECT_NEAR(draws.spectral_radius[i], spectral_radius(s.A()) * spectral_radius(s.B()), 1e-10);
  }
}

TEST(RunChain, InputChecks) {
  const auto d = simulate({{3, 2, 1, 1}, 20, 1});
  GibbsConfig cfg;
  EXPECT_THROW(run_chain(d.data.values.size() > 2 ? MatrixSeries(d.data.values.begin(), d.data.values.begin() + 2)
                                                   : d.data.values,
                         ModelDims{3, 2, 1, 1}, cfg),
               InputError);
  EXPECT_THROW(run_chain(d.data, {2, 2, 1, 1}, cfg), InputError);
  cfg.thin = 0;
  EXPECT_THROW(run_chain(d.data, {3, 2, 1, 1}, cfg), InputError);
}

TEST(RunChain, SweepOrderConsumesDocumentedStream) {
  // One sweep with every step enabled equals the hand-composed sequence.
  const auto d = simulate({{3, 2, 2, 1}, 15, 4});
  const GibbsConfig cfg;
  ModelState s = initial_state(d.data.values, {3, 2, 2, 1});
  ModelState manual = s;
  Rng r1(5), r2(5);
  gibbs_sweep(s, d.data.values, cfg, r1);

  auto ma = matricize_A(d.data.values, manual.B(), manual.Sigma_B);
  manual.Z_A = draw_Z_A(ma, manual.L_A, manual.Sigma_A, cfg, r2);
  manual.L_A = draw_L_A(ma, manual.Z_A, manual.Sigma_A, r2);
  auto fa = enforce_qr(manual.L_A, manual.Z_A);
  manual.L_A = fa.L;
  manual.Z_A = fa.Z;
  manual.Sigma_A = draw_Sigma_A(ma, manual.A(), cfg, r2);
  auto mb = matricize_B(d.data.values, manual.A(), manual.Sigma_A);
  manual.Z_B = draw_Z_B(mb, manual.L_B, manual.Sigma_B, cfg, r2);
  manual.L_B = draw_L_B(mb, manual.Z_B, manual.Sigma_B, r2);
  auto fb = enforce_qr(manual.L_B, manual.Z_B);
  manual.L_B = fb.L;
  manual.Z_B = fb.Z;
  manual.Sigma_B = draw_Sigma_B(mb, manual.B(), cfg, r2);
  manual = rescale(manual);

  EXPECT_LT(max_abs(s.A() - manual.A()), 1e-12);
  EXPECT_LT(max_abs(s.B() - manual.B()), 1e-12);
  EXPECT_LT(max_abs(s.Sigma_A - manual.Sigma_A), 1e-12);
  EXPECT_LT(max_abs(s.Sigma_B - manual.Sigma_B), 1e-12);
}

TEST(RunChain, InitialStateIsOrthonormal) {
  const auto d = simulate({{4, 3, 2, 2}, 40, 3});
  const auto s = initial_state(d.data.values, {4, 3, 2, 2});
  EXPECT_NO_THROW(s.validate(1e-8));
  EXPECT_EQ(s.Z_A.rows(), 2);
}

TEST(Geweke, MarginalConditionalAgreement) {
  for (const auto& g : checks::geweke(36, 20000, 20000)) EXPECT_LT(std::abs(g.z()), 3.0) << g.name;
}
