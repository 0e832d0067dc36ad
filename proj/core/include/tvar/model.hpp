#pragma once

#include <cstdint>
#include <string>

#include "tvar/linalg.hpp"
#include "tvar/preprocess.hpp"
#include "tvar/random.hpp"

namespace tvar {

/// Sizes of the bilinear model: K categories, Q districts and the ranks of
/// the factorizations A = L_A Z_A (K x K) and B = L_B Z_B (Q x Q).
struct ModelDims {
  Eigen::Index K = 0;
  Eigen::Index Q = 0;
  Eigen::Index R_A = 0;
  Eigen::Index R_B = 0;

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// One state of the chain. The coefficient matrices are derived:
/// A = L_A Z_A, B = L_B Z_B; vec(Y_t) has noise covariance Sigma_B (x) Sigma_A.
struct ModelState {
  Matrix L_A, Z_A;
  Matrix L_B, Z_B;
  Matrix Sigma_A, Sigma_B;

  Matrix A() const { return L_A * Z_A; }
  Matrix B() const { return L_B * Z_B; }
  ModelDims dims() const;

  /// Checks shapes, symmetric positive definite covariances and, when
  /// `orthonormal_tol` > 0, that L_A and L_B have orthonormal columns.
  void validate(double orthonormal_tol = 0.0) const;
};

/// A Y_prev B^T, the conditional mean of the next slice.
Matrix bilinear_step(const Matrix& A, const Matrix& B, const Matrix& y_prev);

/// Log density of one K x Q matrix-normal residual MN(0, Sigma_A, Sigma_B),
/// given lower Cholesky factors of both covariances.
double matrix_normal_log_density(const Matrix& residual, const Matrix& chol_a, const Matrix& chol_b);

/// Sum over t = 2..T of the matrix-normal log density of Y_t - A Y_{t-1} B^T.
/// Works with the Cholesky factors only; the KQ x KQ covariance is never formed.
double log_likelihood(const Matrix& A, const Matrix& B, const Matrix& sigma_a, const Matrix& sigma_b,
                      const MatrixSeries& y);
double log_likelihood(const ModelState& state, const MatrixSeries& y);
double log_likelihood(const ModelState& state, const AdjustedTensor& y);

/// Draws M + C_row N C_col^T with N standard normal, i.e. MN(M, C_row C_row^T, C_col C_col^T).
Matrix draw_matrix_normal(const Matrix& mean, const Matrix& chol_row, const Matrix& chol_col, Rng& rng);

/// Forward simulation Y_t = A Y_{t-1} B^T + E_t starting from Y_1 = y1.
MatrixSeries simulate_series(const Matrix& A, const Matrix& B, const Matrix& sigma_a,
                             const Matrix& sigma_b, const Matrix& y1, Eigen::Index T, Rng& rng);

struct SyntheticSpec {
  ModelDims dims;
  Eigen::Index T = 100;
  std::uint64_t seed = 1;
  double spectral_target = 0.5;  ///< spectral radius of B (x) A, in (0, 1)
  int burn_in = 200;
};

struct SyntheticData {
  ModelState truth;
  AdjustedTensor data;
};

/// Random low-rank stationary model plus a series drawn from it. Deterministic
/// for a given seed. Throws InputError for spectral targets outside (0, 1).
SyntheticData simulate(const SyntheticSpec& spec);

struct ParamCounts {
  long long full_vector_ar = 0;  ///< (KQ)^2 + KQ(KQ+1)/2
  long long separable = 0;       ///< K^2 + Q^2 + K(K+1)/2 + Q(Q+1)/2
};

ParamCounts param_counts(long long K, long long Q);

/// ModelState as JSON: dims header plus row-major nested arrays.
std::string state_to_json(const ModelState& state);
ModelState state_from_json(const std::string& text);

}  // namespace tvar
