#include "tvar/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tvar/error.hpp"

namespace tvar {

Matrix kron(const Matrix& m, const Matrix& n) {
  Matrix out(m.rows() * n.rows(), m.cols() * n.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      out.block(i * n.rows(), j * n.cols(), n.rows(), n.cols()) = m(i, j) * n;
  return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw InputError("unvec: vector of length " + std::to_string(v.size()) + " cannot fill " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix cholesky_lower(const Matrix& spd, std::string_view what) {
  if (spd.rows() != spd.cols())
    throw InputError(std::string(what) + " is not square");
  if (!spd.allFinite())
    throw NumericalError(std::string(what) + " has non-finite entries");
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Cholesky factorization of " + std::string(what) +
                         " failed (not positive definite)");
  Matrix l = llt.matrixL();
  // LLT only checks pivots for positivity; reject numerically singular factors too.
  const double dmax = l.diagonal().cwiseAbs().maxCoeff();
  const double dmin = l.diagonal().cwiseAbs().minCoeff();
  if (!(dmin > 0.0) || dmin < 1e-12 * dmax)
    throw NumericalError("Cholesky factorization of " + std::string(what) +
                         " failed (numerically singular)");
  return l;
}

Matrix spd_inverse(const Matrix& spd, std::string_view what) {
  const Matrix l = cholesky_lower(spd, what);
  Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(l.rows(), l.cols()));
  return symmetrize(linv.transpose() * linv);
}

double log_det_spd(const Matrix& spd, std::string_view what) {
  const Matrix l = cholesky_lower(spd, what);
  return 2.0 * l.diagonal().array().log().sum();
}

ThinQr thin_qr(const Matrix& l) {
  const Eigen::Index n = l.rows();
  const Eigen::Index r = l.cols();
  if (r > n) throw InputError("thin_qr: more columns than rows");
  Eigen::HouseholderQR<Matrix> qr(l);
  ThinQr out;
  out.q = qr.householderQ() * Matrix::Identity(n, r);
  out.r = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();

  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < r; ++j) {
    if (std::abs(out.r(j, j)) <= 1e-12 * scale * static_cast<double>(n))
      throw NumericalError("thin_qr: factor matrix is rank deficient (column " +
                           std::to_string(j) + ")");
    if (out.r(j, j) < 0.0) {
      out.r.row(j) *= -1.0;
      out.q.col(j) *= -1.0;
    }
  }
  return out;
}

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("spectral_radius: matrix is not square");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  if (sorted.size() == 1) return sorted.front();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace tvar
