#include "tvar/sampler.hpp"

#include <cmath>
#include <string>

#include "tvar/error.hpp"

namespace tvar {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

// Stacks slices t = 2..T (or their transposes) whitened on the right by the
// lower Cholesky factor of sigma^{-1}; lagged slices additionally carry coef^T.
Matricization stack(const MatrixSeries& y, const Matrix& coef, const Matrix& sigma, bool transpose,
                    Side side, const char* sigma_name) {
  if (y.size() < 2) throw InputError("matricization needs at least two time points");
  const Eigen::Index rows = transpose ? y.front().cols() : y.front().rows();
  const Eigen::Index width = transpose ? y.front().rows() : y.front().cols();
  if (coef.rows() != width || coef.cols() != width)
    throw InputError(std::string("matricization: coefficient is ") + shape(coef) + ", expected " +
                     std::to_string(width) + "x" + std::to_string(width));
  if (sigma.rows() != width || sigma.cols() != width)
    throw InputError(std::string("matricization: ") + sigma_name + " is " + shape(sigma));

  const Matrix whiten = cholesky_lower(spd_inverse(sigma, sigma_name), sigma_name);
  const Matrix lag_map = coef.transpose() * whiten;
  const auto n = static_cast<Eigen::Index>(y.size()) - 1;

  Matricization m;
  m.side = side;
  m.y_tilde.resize(rows, n * width);
  m.x_tilde.resize(rows, n * width);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& cur = y[static_cast<std::size_t>(t + 1)];
    const auto& prev = y[static_cast<std::size_t>(t)];
    if (cur.rows() != y.front().rows() || cur.cols() != y.front().cols())
      throw InputError("matricization: slices differ in shape");
    if (transpose) {
      m.y_tilde.middleCols(t * width, width).noalias() = cur.transpose() * whiten;
      m.x_tilde.middleCols(t * width, width).noalias() = prev.transpose() * lag_map;
    } else {
      m.y_tilde.middleCols(t * width, width).noalias() = cur * whiten;
      m.x_tilde.middleCols(t * width, width).noalias() = prev * lag_map;
    }
  }
  return m;
}

void require_side(const Matricization& m, Side side, const char* what) {
  if (m.side != side)
    throw InputError(std::string(what) + ": matricization is for side " + (m.side == Side::A ? "A" : "B"));
}

Matrix draw_z(const Matricization& m, const Matrix& L, const Matrix& sigma, const GibbsConfig& config, Rng& rng) {
  const GaussianConditional c = z_conditional(m, L, sigma, config.prior_z_variance);
  const Matrix chol = cholesky_lower(c.precision, "Z full-conditional precision");
  const Vector eps = rng.normal_vector(c.mean.size());
  const Vector z = c.mean + chol.transpose().triangularView<Eigen::Upper>().solve(eps);
  return unvec(z, L.cols(), m.x_tilde.rows());
}

Matrix draw_l(const Matricization& m, const Matrix& Z, const Matrix& sigma, Rng& rng) {
  const Matrix gram = m.x_tilde * m.x_tilde.transpose();
  const Matrix g = symmetrize(Z * gram * Z.transpose());
  Matrix chol_g;
  try {
    chol_g = cholesky_lower(g, "Z X~ X~^T Z^T");
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) +
                         "; the factor Gram matrix is singular, try a smaller rank");
  }
  const Matrix cross = m.y_tilde * m.x_tilde.transpose();
  Eigen::LLT<Matrix> llt(g);
  const Matrix mean = llt.solve(Z * cross.transpose()).transpose();
  const Matrix chol_s = cholesky_lower(sigma, "Sigma");
  const Matrix n = rng.normal_matrix(mean.rows(), mean.cols());
  // N U^{-1} with G = U U^T, so the column covariance is G^{-1}.
  const Matrix right = chol_g.transpose().triangularView<Eigen::Upper>().solve(n.transpose()).transpose();
  return mean + chol_s.triangularView<Eigen::Lower>() * right;
}

Matrix draw_sigma(const Matricization& m, const Matrix& coef, const GibbsConfig& config, Rng& rng) {
  const InverseWishartConditional c = sigma_conditional(m, coef, config);
  return draw_inverse_wishart(c.dof, c.scale, rng);
}

template <typename Fn>
auto with_context(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError(context + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(context + ": " + e.what());
  }
}

}  // namespace

void GibbsConfig::validate() const {
  if (n_draws < 0) throw InputError("gibbs: n_draws must be non-negative");
  if (n_burnin < 0) throw InputError("gibbs: n_burnin must be non-negative");
  if (thin < 1) throw InputError("gibbs: thin must be positive");
  if (!(prior_z_variance > 0.0)) throw InputError("gibbs: prior_z_variance must be positive");
  if (!(prior_iw_scale > 0.0)) throw InputError("gibbs: prior_iw_scale must be positive");
  if (!std::isfinite(prior_iw_df)) throw InputError("gibbs: prior_iw_df must be finite");
}

GibbsConfig GibbsConfig::backtest_budget() {
  GibbsConfig c;
  c.n_draws = 600;
  c.n_burnin = 200;
  return c;
}

Matricization matricize_A(const MatrixSeries& y, const Matrix& B, const Matrix& sigma_b) {
  return stack(y, B, sigma_b, false, Side::A, "Sigma_B");
}

Matricization matricize_B(const MatrixSeries& y, const Matrix& A, const Matrix& sigma_a) {
  return stack(y, A, sigma_a, true, Side::B, "Sigma_A");
}

GaussianConditional z_conditional(const Matricization& m, const Matrix& L, const Matrix& sigma,
                                  double prior_variance) {
  const Eigen::Index n = m.x_tilde.rows();
  const Eigen::Index r = L.cols();
  if (L.rows() != m.y_tilde.rows()) throw InputError("Z conditional: L is " + shape(L));
  if (!(prior_variance > 0.0)) throw InputError("Z conditional: prior variance must be positive");

  const Matrix chol = cholesky_lower(sigma, "Sigma");
  // Sigma^{-1} L
  const Matrix sinv_l = chol.transpose().triangularView<Eigen::Upper>().solve(
      chol.triangularView<Eigen::Lower>().solve(L));
  const Matrix inner = symmetrize(L.transpose() * sinv_l);
  const Matrix gram = symmetrize(m.x_tilde * m.x_tilde.transpose());
  const Matrix cross = m.y_tilde * m.x_tilde.transpose();

  GaussianConditional c;
  c.precision = kron(gram, inner);
  c.precision.diagonal().array() += 1.0 / prior_variance;
  const Vector rhs = vec(sinv_l.transpose() * cross);
  Eigen::LLT<Matrix> llt(c.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("Z full-conditional precision is not positive definite");
  c.mean = llt.solve(rhs);
  (void)n;
  (void)r;
  return c;
}

MatrixNormalConditional l_conditional(const Matricization& m, const Matrix& Z, const Matrix& sigma) {
  const Matrix gram = m.x_tilde * m.x_tilde.transpose();
  const Matrix g = symmetrize(Z * gram * Z.transpose());
  MatrixNormalConditional c;
  c.col_cov = spd_inverse(g, "Z X~ X~^T Z^T");
  c.mean = m.y_tilde * m.x_tilde.transpose() * Z.transpose() * c.col_cov;
  c.row_cov = sigma;
  return c;
}

InverseWishartConditional sigma_conditional(const Matricization& m, const Matrix& coef,
                                            const GibbsConfig& config) {
  const Eigen::Index p = m.y_tilde.rows();
  if (coef.rows() != p || coef.cols() != m.x_tilde.rows())
    throw InputError("Sigma conditional: coefficient is " + shape(coef));
  const Matrix resid = m.y_tilde - coef * m.x_tilde;
  InverseWishartConditional c;
  c.dof = config.prior_iw_df + static_cast<double>(m.y_tilde.cols());
  c.scale = Matrix::Identity(p, p) * config.prior_iw_scale;
  c.scale.noalias() += resid * resid.transpose();
  c.scale = symmetrize(c.scale);
  return c;
}

Matrix draw_inverse_wishart(double dof, const Matrix& scale, Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (scale.cols() != p) throw InputError("inverse-Wishart scale is not square");
  if (!(dof > static_cast<double>(p) - 1.0))
    throw InputError("inverse-Wishart: degrees of freedom " + std::to_string(dof) + " must exceed p - 1 = " +
                     std::to_string(p - 1));
  const Matrix d = cholesky_lower(scale, "inverse-Wishart scale");
  // Bartlett factor, filled row by row: chi on the diagonal, normals below.
  Matrix bt = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bt(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bt(i, j) = rng.normal();
  }
  // Wishart(dof, scale^{-1}) = D^{-T} Bt Bt^T D^{-1}; its inverse is F F^T, F = D Bt^{-T}.
  const Matrix ft = bt.triangularView<Eigen::Lower>().solve(d.transpose());
  return symmetrize(ft.transpose() * ft);
}

Matrix draw_Z_A(const Matricization& m, const Matrix& L_A, const Matrix& sigma_a, const GibbsConfig& config, Rng& rng) {
  require_side(m, Side::A, "draw_Z_A");
  return draw_z(m, L_A, sigma_a, config, rng);
}

Matrix draw_L_A(const Matricization& m, const Matrix& Z_A, const Matrix& sigma_a, Rng& rng) {
  require_side(m, Side::A, "draw_L_A");
  return draw_l(m, Z_A, sigma_a, rng);
}

Matrix draw_Sigma_A(const Matricization& m, const Matrix& A, const GibbsConfig& config, Rng& rng) {
  require_side(m, Side::A, "draw_Sigma_A");
  return draw_sigma(m, A, config, rng);
}

Matrix draw_Z_B(const Matricization& m, const Matrix& L_B, const Matrix& sigma_b, const GibbsConfig& config, Rng& rng) {
  require_side(m, Side::B, "draw_Z_B");
  return draw_z(m, L_B, sigma_b, config, rng);
}

Matrix draw_L_B(const Matricization& m, const Matrix& Z_B, const Matrix& sigma_b, Rng& rng) {
  require_side(m, Side::B, "draw_L_B");
  return draw_l(m, Z_B, sigma_b, rng);
}

Matrix draw_Sigma_B(const Matricization& m, const Matrix& B, const GibbsConfig& config, Rng& rng) {
  require_side(m, Side::B, "draw_Sigma_B");
  return draw_sigma(m, B, config, rng);
}

FactorPair enforce_qr(const Matrix& L, const Matrix& Z) {
  if (L.cols() != Z.rows()) throw InputError("enforce_qr: L is " + shape(L) + " but Z is " + shape(Z));
  ThinQr qr = thin_qr(L);
  return {std::move(qr.q), qr.r * Z};
}

ModelState rescale(const ModelState& state) {
  const double na = state.A().norm(), nb = state.B().norm();
  const double sa = state.Sigma_A.norm(), sb = state.Sigma_B.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericalError("rescale: A or B is the zero matrix");
  if (!(sa > 0.0) || !(sb > 0.0)) throw NumericalError("rescale: Sigma_A or Sigma_B is the zero matrix");
  ModelState out = state;
  const double c = std::sqrt(nb / na);
  out.Z_A *= c;
  out.Z_B /= c;
  const double d = std::sqrt(sb / sa);
  out.Sigma_A *= d;
  out.Sigma_B /= d;
  return out;
}

void gibbs_sweep(ModelState& state, const MatrixSeries& y, const GibbsConfig& config, Rng& rng,
                 const SweepOptions& options) {
  const Matricization ma = matricize_A(y, state.B(), state.Sigma_B);
  state.Z_A = draw_Z_A(ma, state.L_A, state.Sigma_A, config, rng);
  if (options.update_L) state.L_A = draw_L_A(ma, state.Z_A, state.Sigma_A, rng);
  if (options.enforce_qr) {
    FactorPair f = enforce_qr(state.L_A, state.Z_A);
    state.L_A = std::move(f.L);
    state.Z_A = std::move(f.Z);
  }
  state.Sigma_A = draw_Sigma_A(ma, state.A(), config, rng);

  const Matricization mb = matricize_B(y, state.A(), state.Sigma_A);
  state.Z_B = draw_Z_B(mb, state.L_B, state.Sigma_B, config, rng);
  if (options.update_L) state.L_B = draw_L_B(mb, state.Z_B, state.Sigma_B, rng);
  if (options.enforce_qr) {
    FactorPair f = enforce_qr(state.L_B, state.Z_B);
    state.L_B = std::move(f.L);
    state.Z_B = std::move(f.Z);
  }
  state.Sigma_B = draw_Sigma_B(mb, state.B(), config, rng);

  if (options.rescale) state = rescale(state);
}

namespace {

// Least squares of [Y_2..Y_T] on [Y_1..Y_{T-1}] (optionally transposed slices),
// truncated to the requested rank.
FactorPair truncated_ols(const MatrixSeries& y, bool transpose, Eigen::Index rank) {
  const Eigen::Index n = transpose ? y.front().cols() : y.front().rows();
  Matrix xx = Matrix::Zero(n, n), yx = Matrix::Zero(n, n);
  for (std::size_t t = 1; t < y.size(); ++t) {
    const Matrix cur = transpose ? Matrix(y[t].transpose()) : y[t];
    const Matrix prev = transpose ? Matrix(y[t - 1].transpose()) : y[t - 1];
    xx.noalias() += prev * prev.transpose();
    yx.noalias() += cur * prev.transpose();
  }
  const Matrix coef = xx.completeOrthogonalDecomposition().solve(yx.transpose()).transpose();
  Eigen::JacobiSVD<Matrix> svd(coef, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double floor = 1e-8 * ((s.size() > 0 ? s(0) : 0.0) + 1.0);
  FactorPair f;
  f.L = svd.matrixU().leftCols(rank);
  Vector kept = s.head(rank).cwiseMax(floor);
  f.Z = kept.asDiagonal() * svd.matrixV().leftCols(rank).transpose();
  return f;
}

}  // namespace

ModelState initial_state(const MatrixSeries& y, const ModelDims& dims) {
  dims.validate();
  if (y.size() < 2) throw InputError("initial_state: need at least two time points");
  ModelState s;
  FactorPair a = truncated_ols(y, false, dims.R_A);
  FactorPair b = truncated_ols(y, true, dims.R_B);
  a = enforce_qr(a.L, a.Z);
  b = enforce_qr(b.L, b.Z);
  s.L_A = std::move(a.L);
  s.Z_A = std::move(a.Z);
  s.L_B = std::move(b.L);
  s.Z_B = std::move(b.Z);
  s.Sigma_A = Matrix::Identity(dims.K, dims.K);
  s.Sigma_B = Matrix::Identity(dims.Q, dims.Q);
  return rescale(s);
}

PosteriorDraws run_chain(const MatrixSeries& y, const ModelDims& dims, const GibbsConfig& config) {
  config.validate();
  dims.validate();
  if (y.size() < 3) throw InputError("run_chain: need T >= 3, got " + std::to_string(y.size()));
  if (y.front().rows() != dims.K || y.front().cols() != dims.Q)
    throw InputError("run_chain: data slices are " + shape(y.front()) + " but dims are " +
                     std::to_string(dims.K) + "x" + std::to_string(dims.Q));
  const auto n = static_cast<double>(y.size() - 1);
  if (!(config.prior_iw_df + n * static_cast<double>(dims.Q) > static_cast<double>(dims.K) - 1.0) ||
      !(config.prior_iw_df + n * static_cast<double>(dims.K) > static_cast<double>(dims.Q) - 1.0))
    throw InputError("run_chain: inverse-Wishart full conditionals are improper for this T and prior_iw_df");

  PosteriorDraws draws;
  draws.dims = dims;
  if (config.n_draws == 0) return draws;

  ModelState state = with_context("initialization", [&] { return initial_state(y, dims); });
  Rng rng(config.seed);
  const long total = static_cast<long>(config.n_burnin) + static_cast<long>(config.n_draws) * config.thin;
  draws.states.reserve(static_cast<std::size_t>(config.n_draws));
  draws.spectral_radius.reserve(static_cast<std::size_t>(config.n_draws));
  for (long it = 0; it < total; ++it) {
    with_context("Gibbs iteration " + std::to_string(it), [&] {
      gibbs_sweep(state, y, config, rng);
      return 0;
    });
    if (it >= config.n_burnin && (it - config.n_burnin + 1) % config.thin == 0) {
      draws.states.push_back(state);
      draws.spectral_radius.push_back(spectral_radius(state.A()) * spectral_radius(state.B()));
    }
  }
  return draws;
}

PosteriorDraws run_chain(const AdjustedTensor& y, const ModelDims& dims, const GibbsConfig& config) {
  return run_chain(y.values, dims, config);
}

}  // namespace tvar
