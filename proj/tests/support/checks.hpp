#pragma once

// Experiments shared by the unit tests and the acceptance binary. Each
// returns the measured quantities; callers decide on tolerances.

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/inverse_gamma.hpp>

#include "oracles.hpp"
#include "tvar/analysis.hpp"
#include "tvar/model.hpp"
#include "tvar/sampler.hpp"

namespace checks {

using tvar::Matrix;
using tvar::MatrixSeries;
using tvar::ModelState;
using tvar::Vector;

inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> n01;
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n01(rng);
  return g * g.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n01(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

inline Matrix orthonormal(Eigen::Index n, Eigen::Index r, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, r, rng));
  return qr.householderQ() * Matrix::Identity(n, r);
}

/// Random state with orthonormal factors and PD covariances, scaled so the
/// dynamics are comfortably stable.
inline ModelState random_state(Eigen::Index K, Eigen::Index Q, Eigen::Index ra, Eigen::Index rb,
                               std::mt19937_64& rng, double coef_sd = 0.4) {
  ModelState s;
  s.L_A = orthonormal(K, ra, rng);
  s.Z_A = random_matrix(ra, K, rng, coef_sd);
  s.L_B = orthonormal(Q, rb, rng);
  s.Z_B = random_matrix(rb, Q, rng, coef_sd);
  s.Sigma_A = random_spd(K, rng);
  s.Sigma_B = random_spd(Q, rng);
  return s;
}

inline MatrixSeries simulate_from(const ModelState& s, Eigen::Index T, std::uint64_t seed) {
  tvar::Rng rng(seed);
  return tvar::simulate_series(s.A(), s.B(), s.Sigma_A, s.Sigma_B,
                               Matrix::Zero(s.Sigma_A.rows(), s.Sigma_B.rows()), T, rng);
}

// ---------------------------------------------------------------------------
// Gaussian full conditionals against 1-D quadrature of likelihood x prior

struct GridCheck {
  double max_mean_error = 0.0;
  double max_sd_error = 0.0;
  int entries = 0;
};

inline void accumulate(GridCheck& g, const oracle::Moments& analytic, const oracle::Moments& grid) {
  g.max_mean_error = std::max(g.max_mean_error, std::abs(analytic.mean - grid.mean));
  g.max_sd_error = std::max(g.max_sd_error, std::abs(analytic.sd - grid.sd));
  ++g.entries;
}

inline oracle::Moments quadrature(const std::function<double(double)>& logf, const oracle::Moments& guess) {
  return oracle::grid_moments(logf, guess.mean - 14.0 * guess.sd, guess.mean + 14.0 * guess.sd, 40000);
}

/// Every entry of Z_A, L_A, Z_B, L_B at one random state, K = Q = 2, R = 1, T = 6.
inline GridCheck conditional_grid_check(std::uint64_t seed, Eigen::Index K = 2, Eigen::Index Q = 2,
                                        Eigen::Index R = 1, Eigen::Index T = 6) {
  std::mt19937_64 rng(seed);
  const ModelState s = random_state(K, Q, R, R, rng);
  const MatrixSeries y = simulate_from(s, T, seed + 1);
  const tvar::GibbsConfig cfg;
  const double v = cfg.prior_z_variance;
  GridCheck out;

  auto loglik = [&](const ModelState& st) { return tvar::log_likelihood(st, y); };

  // Z_A
  {
    const auto m = tvar::matricize_A(y, s.B(), s.Sigma_B);
    const auto c = tvar::z_conditional(m, s.L_A, s.Sigma_A, v);
    const Vector cur = oracle::vec(s.Z_A);
    for (Eigen::Index j = 0; j < cur.size(); ++j) {
      const auto analytic = oracle::gaussian_coordinate(c.mean, c.precision, cur, j);
      auto logf = [&](double x) {
        ModelState st = s;
        st.Z_A(j % R, j / R) = x;
        return loglik(st) - x * x / (2.0 * v);
      };
      accumulate(out, analytic, quadrature(logf, analytic));
    }
  }
  // L_A
  {
    const auto m = tvar::matricize_A(y, s.B(), s.Sigma_B);
    const auto c = tvar::l_conditional(m, s.Z_A, s.Sigma_A);
    const Matrix prec = oracle::kron(c.col_cov, c.row_cov).inverse();
    const Vector cur = oracle::vec(s.L_A);
    for (Eigen::Index j = 0; j < cur.size(); ++j) {
      const auto analytic = oracle::gaussian_coordinate(oracle::vec(c.mean), prec, cur, j);
      auto logf = [&](double x) {
        ModelState st = s;
        st.L_A(j % K, j / K) = x;
        return loglik(st);
      };
      accumulate(out, analytic, quadrature(logf, analytic));
    }
  }
  // Z_B
  {
    const auto m = tvar::matricize_B(y, s.A(), s.Sigma_A);
    const auto c = tvar::z_conditional(m, s.L_B, s.Sigma_B, v);
    const Vector cur = oracle::vec(s.Z_B);
    for (Eigen::Index j = 0; j < cur.size(); ++j) {
      const auto analytic = oracle::gaussian_coordinate(c.mean, c.precision, cur, j);
      auto logf = [&](double x) {
        ModelState st = s;
        st.Z_B(j % R, j / R) = x;
        return loglik(st) - x * x / (2.0 * v);
      };
      accumulate(out, analytic, quadrature(logf, analytic));
    }
  }
  // L_B
  {
    const auto m = tvar::matricize_B(y, s.A(), s.Sigma_A);
    const auto c = tvar::l_conditional(m, s.Z_B, s.Sigma_B);
    const Matrix prec = oracle::kron(c.col_cov, c.row_cov).inverse();
    const Vector cur = oracle::vec(s.L_B);
    for (Eigen::Index j = 0; j < cur.size(); ++j) {
      const auto analytic = oracle::gaussian_coordinate(oracle::vec(c.mean), prec, cur, j);
      auto logf = [&](double x) {
        ModelState st = s;
        st.L_B(j % Q, j / Q) = x;
        return loglik(st);
      };
      accumulate(out, analytic, quadrature(logf, analytic));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// scalar inverse-Wishart conditionals against an inverse-gamma sampler

struct QuantileCheck {
  std::vector<double> probs{0.01, 0.05, 0.50, 0.95, 0.99};
  std::vector<double> sampler, independent, exact;
  double max_z = 0.0;  ///< largest |difference| in units of its Monte Carlo standard error
};

/// side A: K = 1, Q = 2; side B: K = 2, Q = 1. Draws the 1 x 1 covariance from
/// its full conditional n times and compares quantiles with draws of
/// (S / 2) / Gamma(nu / 2), nu and S computed here from the raw residuals.
inline QuantileCheck inverse_gamma_check(tvar::Side side, std::uint64_t seed, int n = 50000, Eigen::Index T = 6) {
  std::mt19937_64 rng(seed);
  const Eigen::Index K = side == tvar::Side::A ? 1 : 2, Q = side == tvar::Side::A ? 2 : 1;
  const ModelState s = random_state(K, Q, 1, 1, rng);
  const MatrixSeries y = simulate_from(s, T, seed + 7);
  const tvar::GibbsConfig cfg;

  // Oracle parameters: whitened residual sum of squares, dof = df + (T - 1) * other dimension.
  double ss = 0.0;
  const Matrix other_inv = (side == tvar::Side::A ? s.Sigma_B : s.Sigma_A).inverse();
  for (std::size_t t = 1; t < y.size(); ++t) {
    const Matrix e = y[t] - s.A() * y[t - 1] * s.B().transpose();
    ss += side == tvar::Side::A ? (e * other_inv * e.transpose())(0, 0) : (e.transpose() * other_inv * e)(0, 0);
  }
  const double nu = cfg.prior_iw_df + static_cast<double>((T - 1) * (side == tvar::Side::A ? Q : K));
  const double scale = cfg.prior_iw_scale + ss;

  tvar::Rng trng(seed + 11);
  std::mt19937 irng(static_cast<unsigned>(seed + 13));
  std::gamma_distribution<double> gamma(nu / 2.0, 1.0);
  std::vector<double> a(n), b(n);
  if (side == tvar::Side::A) {
    const auto m = tvar::matricize_A(y, s.B(), s.Sigma_B);
    for (int i = 0; i < n; ++i) a[i] = tvar::draw_Sigma_A(m, s.A(), cfg, trng)(0, 0);
  } else {
    const auto m = tvar::matricize_B(y, s.A(), s.Sigma_A);
    for (int i = 0; i < n; ++i) a[i] = tvar::draw_Sigma_B(m, s.B(), cfg, trng)(0, 0);
  }
  for (int i = 0; i < n; ++i) b[i] = (scale / 2.0) / gamma(irng);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const boost::math::inverse_gamma_distribution<double> dist(nu / 2.0, scale / 2.0);
  QuantileCheck q;
  for (double p : q.probs) {
    const double qa = tvar::quantile_sorted(a, p), qb = tvar::quantile_sorted(b, p);
    const double exact = boost::math::quantile(dist, p);
    const double se = std::sqrt(p * (1 - p) / n) / boost::math::pdf(dist, exact);
    q.sampler.push_back(qa);
    q.independent.push_back(qb);
    q.exact.push_back(exact);
    q.max_z = std::max(q.max_z, std::abs(qa - qb) / (std::sqrt(2.0) * se));
  }
  return q;
}

// ---------------------------------------------------------------------------
// marginal-conditional versus successive-conditional simulation

struct GewekeFunctional {
  std::string name;
  double forward_mean = 0.0, forward_se = 0.0;
  double chain_mean = 0.0, chain_se = 0.0;
  double z() const { return (chain_mean - forward_mean) / std::sqrt(forward_se * forward_se + chain_se * chain_se); }
};

/// Proper-prior configuration: Z entries N(0, 0.25), Sigma ~ IW(8, 5 I) (mean I).
/// L_A and L_B are held at fixed unit vectors; QR and rescaling are off so the
/// sampler targets the plain posterior of (Z_A, Z_B, Sigma_A, Sigma_B).
inline tvar::GibbsConfig geweke_config() {
  tvar::GibbsConfig c;
  c.prior_z_variance = 0.25;
  c.prior_iw_df = 8.0;
  c.prior_iw_scale = 5.0;
  return c;
}

inline std::vector<GewekeFunctional> geweke(std::uint64_t seed, int n_forward, int n_chain) {
  constexpr Eigen::Index K = 2, Q = 2, T = 8;
  const tvar::GibbsConfig cfg = geweke_config();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  const double zsd = std::sqrt(cfg.prior_z_variance);
  const Matrix l_a = (Matrix(2, 1) << 0.6, 0.8).finished();
  const Matrix l_b = (Matrix(2, 1) << 1.0, 0.0).finished();
  const Matrix y1 = (Matrix(2, 2) << 0.5, -0.3, 0.2, 1.0).finished();

  auto prior_draw = [&] {
    ModelState s;
    s.L_A = l_a;
    s.L_B = l_b;
    s.Z_A = Matrix(1, K);
    s.Z_B = Matrix(1, Q);
    for (Eigen::Index j = 0; j < K; ++j) s.Z_A(0, j) = zsd * n01(rng);
    for (Eigen::Index j = 0; j < Q; ++j) s.Z_B(0, j) = zsd * n01(rng);
    const int dof = static_cast<int>(cfg.prior_iw_df);
    s.Sigma_A = oracle::inverse_wishart_by_outer_products(dof, cfg.prior_iw_scale * Matrix::Identity(K, K), rng);
    s.Sigma_B = oracle::inverse_wishart_by_outer_products(dof, cfg.prior_iw_scale * Matrix::Identity(Q, Q), rng);
    return s;
  };
  auto data_draw = [&](const ModelState& s) {
    const Matrix chol = Eigen::LLT<Matrix>(oracle::kron(s.Sigma_B, s.Sigma_A)).matrixL();
    const Matrix coef = oracle::kron(s.B(), s.A());
    MatrixSeries y{y1};
    Vector prev = oracle::vec(y1);
    for (Eigen::Index t = 1; t < T; ++t) {
      Vector e(K * Q);
      for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = n01(rng);
      prev = coef * prev + chol * e;
      y.push_back(Eigen::Map<const Matrix>(prev.data(), K, Q));
    }
    return y;
  };
  auto functionals = [](const ModelState& s) {
    return std::array<double, 3>{std::log(s.Sigma_A.determinant()), s.Sigma_B.trace(), s.A().squaredNorm()};
  };

  std::array<std::vector<double>, 3> fwd, chn;
  for (int i = 0; i < n_forward; ++i) {
    const auto f = functionals(prior_draw());
    for (int k = 0; k < 3; ++k) fwd[k].push_back(f[k]);
  }

  tvar::Rng chain_rng(seed + 101);
  tvar::SweepOptions opts;
  opts.update_L = false;
  opts.enforce_qr = false;
  opts.rescale = false;
  ModelState s = prior_draw();
  MatrixSeries y = data_draw(s);
  for (int i = 0; i < n_chain; ++i) {
    tvar::gibbs_sweep(s, y, cfg, chain_rng, opts);
    y = data_draw(s);
    const auto f = functionals(s);
    for (int k = 0; k < 3; ++k) chn[k].push_back(f[k]);
  }

  const char* names[3] = {"log|Sigma_A|", "trace(Sigma_B)", "||A||_F^2"};
  std::vector<GewekeFunctional> out;
  for (int k = 0; k < 3; ++k) {
    GewekeFunctional g;
    g.name = names[k];
    g.forward_mean = oracle::mean_of(fwd[k]);
    g.forward_se = oracle::iid_se(fwd[k]);
    g.chain_mean = oracle::mean_of(chn[k]);
    g.chain_se = oracle::batch_means_se(chn[k]);
    out.push_back(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// invariances of the identifiability steps

struct InvarianceCheck {
  double max_kron_coef_error = 0.0;
  double max_kron_cov_error = 0.0;
  double max_partial_correlation_error = 0.0;
};

inline InvarianceCheck invariance_check(std::uint64_t seed, int n_states = 100) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 5);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  InvarianceCheck c;
  for (int i = 0; i < n_states; ++i) {
    const Eigen::Index K = dim(rng), Q = dim(rng);
    const Eigen::Index ra = std::uniform_int_distribution<Eigen::Index>(1, K)(rng);
    const Eigen::Index rb = std::uniform_int_distribution<Eigen::Index>(1, Q)(rng);
    ModelState s;
    s.L_A = random_matrix(K, ra, rng);
    s.Z_A = random_matrix(ra, K, rng) * scale(rng);
    s.L_B = random_matrix(Q, rb, rng);
    s.Z_B = random_matrix(rb, Q, rng) * scale(rng);
    s.Sigma_A = random_spd(K, rng) * scale(rng);
    s.Sigma_B = random_spd(Q, rng) * scale(rng);
    const Matrix kc = oracle::kron(s.B(), s.A()), ks = oracle::kron(s.Sigma_B, s.Sigma_A);

    ModelState t = s;
    auto fa = tvar::enforce_qr(t.L_A, t.Z_A);
    auto fb = tvar::enforce_qr(t.L_B, t.Z_B);
    t.L_A = fa.L;
    t.Z_A = fa.Z;
    t.L_B = fb.L;
    t.Z_B = fb.Z;
    t = tvar::rescale(t);
    c.max_kron_coef_error = std::max(c.max_kron_coef_error, (oracle::kron(t.B(), t.A()) - kc).cwiseAbs().maxCoeff());
    c.max_kron_cov_error =
        std::max(c.max_kron_cov_error, (oracle::kron(t.Sigma_B, t.Sigma_A) - ks).cwiseAbs().maxCoeff());
  }

  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = dim(rng);
    std::vector<Matrix> draws, scaled;
    for (int d = 0; d < 30; ++d) {
      draws.push_back(random_spd(n, rng));
      scaled.push_back(draws.back() * scale(rng));
    }
    const auto a = tvar::partial_correlations(draws), b = tvar::partial_correlations(scaled);
    c.max_partial_correlation_error = std::max(
        {c.max_partial_correlation_error, (a.weights - b.weights).cwiseAbs().maxCoeff(),
         (a.lower - b.lower).cwiseAbs().maxCoeff(), (a.upper - b.upper).cwiseAbs().maxCoeff()});
  }
  return c;
}

}  // namespace checks
