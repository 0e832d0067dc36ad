#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace tvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Kronecker product in the standard block layout: block (i, j) is M(i, j) * N.
Matrix kron(const Matrix& m, const Matrix& n);

/// Column-major vectorization (stacks columns). All matricizations in the
/// library are written against this convention: vec(A Y B^T) = (B (x) A) vec(Y).
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Lower Cholesky factor of a symmetric positive definite matrix.
/// Throws NumericalError naming `what` when the factorization fails.
Matrix cholesky_lower(const Matrix& spd, std::string_view what);

/// Inverse of a symmetric positive definite matrix via Cholesky.
Matrix spd_inverse(const Matrix& spd, std::string_view what);

/// log|S| for symmetric positive definite S.
double log_det_spd(const Matrix& spd, std::string_view what);

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Thin QR factorization L = Q R with the sign convention diag(R) >= 0.
struct ThinQr {
  Matrix q;  ///< n x r, orthonormal columns
  Matrix r;  ///< r x r, upper triangular, non-negative diagonal
};

/// Throws NumericalError when L does not have full column rank.
ThinQr thin_qr(const Matrix& l);

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Matrix& m);

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace tvar
