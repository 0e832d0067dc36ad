#include "tvar/model.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "tvar/error.hpp"

namespace tvar {

using nlohmann::json;

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw InputError(std::string("state JSON: ") + name + " has the wrong number of rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(std::string("state JSON: ") + name + " has the wrong number of columns");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Matrix random_covariance(Eigen::Index n, Rng& rng) {
  const Matrix g = rng.normal_matrix(n, n + 2);
  Matrix s = Matrix::Identity(n, n) + g * g.transpose() / static_cast<double>(n + 2);
  s *= static_cast<double>(n) / s.trace();
  return symmetrize(s);
}

}  // namespace

void ModelDims::validate() const {
  if (K < 1 || Q < 1) throw InputError("model dims: K and Q must be positive");
  if (R_A < 1 || R_A > K)
    throw InputError("model dims: R_A = " + std::to_string(R_A) + " must lie in [1, " + std::to_string(K) + "]");
  if (R_B < 1 || R_B > Q)
    throw InputError("model dims: R_B = " + std::to_string(R_B) + " must lie in [1, " + std::to_string(Q) + "]");
}

ModelDims ModelState::dims() const { return {L_A.rows(), L_B.rows(), L_A.cols(), L_B.cols()}; }

void ModelState::validate(double orthonormal_tol) const {
  const ModelDims d = dims();
  d.validate();
  if (Z_A.rows() != d.R_A || Z_A.cols() != d.K) throw InputError("state: Z_A is " + shape(Z_A));
  if (Z_B.rows() != d.R_B || Z_B.cols() != d.Q) throw InputError("state: Z_B is " + shape(Z_B));
  if (Sigma_A.rows() != d.K || Sigma_A.cols() != d.K) throw InputError("state: Sigma_A is " + shape(Sigma_A));
  if (Sigma_B.rows() != d.Q || Sigma_B.cols() != d.Q) throw InputError("state: Sigma_B is " + shape(Sigma_B));
  cholesky_lower(Sigma_A, "Sigma_A");
  cholesky_lower(Sigma_B, "Sigma_B");
  if (orthonormal_tol > 0.0) {
    if ((L_A.transpose() * L_A - Matrix::Identity(d.R_A, d.R_A)).cwiseAbs().maxCoeff() > orthonormal_tol)
      throw NumericalError("state: L_A columns are not orthonormal");
    if ((L_B.transpose() * L_B - Matrix::Identity(d.R_B, d.R_B)).cwiseAbs().maxCoeff() > orthonormal_tol)
      throw NumericalError("state: L_B columns are not orthonormal");
  }
}

Matrix bilinear_step(const Matrix& A, const Matrix& B, const Matrix& y_prev) {
  if (A.rows() != A.cols()) throw InputError("bilinear_step: A is " + shape(A) + ", expected square (K)");
  if (B.rows() != B.cols()) throw InputError("bilinear_step: B is " + shape(B) + ", expected square (Q)");
  if (y_prev.rows() != A.cols())
    throw InputError("bilinear_step: K mismatch, A is " + shape(A) + " but Y has " +
                     std::to_string(y_prev.rows()) + " rows");
  if (y_prev.cols() != B.cols())
    throw InputError("bilinear_step: Q mismatch, B is " + shape(B) + " but Y has " +
                     std::to_string(y_prev.cols()) + " columns");
  return A * y_prev * B.transpose();
}

double matrix_normal_log_density(const Matrix& residual, const Matrix& chol_a, const Matrix& chol_b) {
  const auto K = static_cast<double>(residual.rows());
  const auto Q = static_cast<double>(residual.cols());
  // ||L_A^{-1} E L_B^{-T}||_F^2 = tr(Sigma_A^{-1} E Sigma_B^{-1} E^T)
  const Matrix left = chol_a.triangularView<Eigen::Lower>().solve(residual);
  const Matrix white = chol_b.triangularView<Eigen::Lower>().solve(left.transpose());
  const double logdet_a = 2.0 * chol_a.diagonal().array().log().sum();
  const double logdet_b = 2.0 * chol_b.diagonal().array().log().sum();
  return -0.5 * K * Q * std::log(2.0 * std::numbers::pi) - 0.5 * Q * logdet_a - 0.5 * K * logdet_b -
         0.5 * white.squaredNorm();
}

double log_likelihood(const Matrix& A, const Matrix& B, const Matrix& sigma_a, const Matrix& sigma_b,
                      const MatrixSeries& y) {
  if (y.size() < 2) throw InputError("log_likelihood: need at least two time points");
  const Matrix chol_a = cholesky_lower(sigma_a, "Sigma_A");
  const Matrix chol_b = cholesky_lower(sigma_b, "Sigma_B");
  double ll = 0.0;
  for (std::size_t t = 1; t < y.size(); ++t)
    ll += matrix_normal_log_density(y[t] - bilinear_step(A, B, y[t - 1]), chol_a, chol_b);
  return ll;
}

double log_likelihood(const ModelState& state, const MatrixSeries& y) {
  return log_likelihood(state.A(), state.B(), state.Sigma_A, state.Sigma_B, y);
}

double log_likelihood(const ModelState& state, const AdjustedTensor& y) { return log_likelihood(state, y.values); }

Matrix draw_matrix_normal(const Matrix& mean, const Matrix& chol_row, const Matrix& chol_col, Rng& rng) {
  const Matrix n = rng.normal_matrix(mean.rows(), mean.cols());
  return mean + chol_row.triangularView<Eigen::Lower>() * n * chol_col.triangularView<Eigen::Lower>().transpose();
}

MatrixSeries simulate_series(const Matrix& A, const Matrix& B, const Matrix& sigma_a,
                             const Matrix& sigma_b, const Matrix& y1, Eigen::Index T, Rng& rng) {
  const Matrix chol_a = cholesky_lower(sigma_a, "Sigma_A");
  const Matrix chol_b = cholesky_lower(sigma_b, "Sigma_B");
  const Matrix zero = Matrix::Zero(A.rows(), B.rows());
  MatrixSeries out;
  out.reserve(static_cast<std::size_t>(T));
  out.push_back(y1);
  for (Eigen::Index t = 1; t < T; ++t)
    out.push_back(bilinear_step(A, B, out.back()) + draw_matrix_normal(zero, chol_a, chol_b, rng));
  return out;
}

SyntheticData simulate(const SyntheticSpec& spec) {
  spec.dims.validate();
  if (!(spec.spectral_target > 0.0) || !(spec.spectral_target < 1.0))
    throw InputError("simulate: spectral_target must lie in (0, 1); nonstationary requests are refused");
  if (spec.T < 2) throw InputError("simulate: T must be at least 2");
  const auto [K, Q, R_A, R_B] = spec.dims;

  Rng rng(spec.seed);
  ModelState s;
  double rho_a = 0.0, rho_b = 0.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    s.L_A = rng.normal_matrix(K, R_A);
    s.Z_A = rng.normal_matrix(R_A, K);
    s.L_B = rng.normal_matrix(Q, R_B);
    s.Z_B = rng.normal_matrix(R_B, Q);
    const ThinQr qa = thin_qr(s.L_A);
    const ThinQr qb = thin_qr(s.L_B);
    s.L_A = qa.q;
    s.Z_A = qa.r * s.Z_A;
    s.L_B = qb.q;
    s.Z_B = qb.r * s.Z_B;
    rho_a = spectral_radius(s.A());
    rho_b = spectral_radius(s.B());
    if (rho_a > 1e-6 && rho_b > 1e-6) break;
  }
  if (!(rho_a > 1e-6 && rho_b > 1e-6)) throw NumericalError("simulate: could not draw non-nilpotent factors");
  const double f = std::sqrt(spec.spectral_target / (rho_a * rho_b));
  s.Z_A *= f;
  s.Z_B *= f;
  s.Sigma_A = random_covariance(K, rng);
  s.Sigma_B = random_covariance(Q, rng);

  const Matrix A = s.A(), B = s.B();
  const Matrix chol_a = cholesky_lower(s.Sigma_A, "Sigma_A");
  const Matrix chol_b = cholesky_lower(s.Sigma_B, "Sigma_B");
  const Matrix zero = Matrix::Zero(K, Q);
  Matrix y = zero;
  for (int i = 0; i < spec.burn_in; ++i) y = bilinear_step(A, B, y) + draw_matrix_normal(zero, chol_a, chol_b, rng);

  SyntheticData out;
  out.data = AdjustedTensor::from_series(simulate_series(A, B, s.Sigma_A, s.Sigma_B, y, spec.T, rng));
  out.truth = std::move(s);
  return out;
}

ParamCounts param_counts(long long K, long long Q) {
  if (K < 1 || Q < 1) throw InputError("param_counts: K and Q must be positive");
  const long long n = K * Q;
  return {n * n + n * (n + 1) / 2, K * K + Q * Q + K * (K + 1) / 2 + Q * (Q + 1) / 2};
}

std::string state_to_json(const ModelState& state) {
  const ModelDims d = state.dims();
  json j;
  j["dims"] = {{"K", d.K}, {"Q", d.Q}, {"R_A", d.R_A}, {"R_B", d.R_B}};
  j["L_A"] = matrix_to_json(state.L_A);
  j["Z_A"] = matrix_to_json(state.Z_A);
  j["L_B"] = matrix_to_json(state.L_B);
  j["Z_B"] = matrix_to_json(state.Z_B);
  j["Sigma_A"] = matrix_to_json(state.Sigma_A);
  j["Sigma_B"] = matrix_to_json(state.Sigma_B);
  return j.dump();
}

ModelState state_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("state JSON: ") + e.what());
  }
  ModelState s;
  try {
    const json& d = j.at("dims");
    const auto K = d.at("K").get<Eigen::Index>(), Q = d.at("Q").get<Eigen::Index>();
    const auto R_A = d.at("R_A").get<Eigen::Index>(), R_B = d.at("R_B").get<Eigen::Index>();
    ModelDims{K, Q, R_A, R_B}.validate();
    s.L_A = matrix_from_json(j.at("L_A"), K, R_A, "L_A");
    s.Z_A = matrix_from_json(j.at("Z_A"), R_A, K, "Z_A");
    s.L_B = matrix_from_json(j.at("L_B"), Q, R_B, "L_B");
    s.Z_B = matrix_from_json(j.at("Z_B"), R_B, Q, "Z_B");
    s.Sigma_A = matrix_from_json(j.at("Sigma_A"), K, K, "Sigma_A");
    s.Sigma_B = matrix_from_json(j.at("Sigma_B"), Q, Q, "Sigma_B");
  } catch (const json::exception& e) {
    throw InputError(std::string("state JSON: ") + e.what());
  }
  return s;
}

}  // namespace tvar
