#pragma once

#include <cstdint>

#include "tvar/model.hpp"
#include "tvar/posterior.hpp"
#include "tvar/random.hpp"

namespace tvar {

/// Prior hyperparameters and run length. Defaults are the reference
/// elicitation: Z entries N(0, 10), Sigma ~ inv-Wishart(2, 2 I), 3000 draws
/// after 1000 burn-in.
struct GibbsConfig {
  int n_draws = 3000;
  int n_burnin = 1000;
  std::uint64_t seed = 1;
  double prior_z_variance = 10.0;
  double prior_iw_df = 2.0;
  double prior_iw_scale = 2.0;  ///< times the identity
  int thin = 1;

  void validate() const;

  /// Reduced budget used inside rolling backtests (600 draws, 200 burn-in).
  static GibbsConfig backtest_budget();
};

enum class Side { A, B };

/// Whitened stacking of the model as one wide regression Y~ = C X~ + E~ with
/// coefficient C = A (side A) or C = B (side B); E~ has identity column covariance.
///   side A: Y~ = [Y_2 W, ..., Y_T W],       X~ = [Y_1 B^T W, ..., Y_{T-1} B^T W]
///   side B: Y~ = [Y_2^T V, ..., Y_T^T V],   X~ = [Y_1^T A^T V, ..., Y_{T-1}^T A^T V]
/// where W W^T = Sigma_B^{-1} and V V^T = Sigma_A^{-1} (lower Cholesky factors).
struct Matricization {
  Matrix y_tilde;
  Matrix x_tilde;
  Side side = Side::A;
};

Matricization matricize_A(const MatrixSeries& y, const Matrix& B, const Matrix& sigma_b);
Matricization matricize_B(const MatrixSeries& y, const Matrix& A, const Matrix& sigma_a);

/// Full conditional of vec(Z): N(mean, precision^{-1}) with
///   precision = I / prior_variance + (X~ X~^T) (x) (L^T Sigma^{-1} L)
///   mean      = precision^{-1} vec(L^T Sigma^{-1} Y~ X~^T)
struct GaussianConditional {
  Vector mean;
  Matrix precision;
};

GaussianConditional z_conditional(const Matricization& m, const Matrix& L, const Matrix& sigma,
                                  double prior_variance);

/// Full conditional of L under a flat prior, as a matrix normal:
///   L ~ MN(Y~ X~^T Z^T G^{-1}, Sigma, G^{-1}),  G = Z X~ X~^T Z^T.
struct MatrixNormalConditional {
  Matrix mean;
  Matrix row_cov;
  Matrix col_cov;
};

MatrixNormalConditional l_conditional(const Matricization& m, const Matrix& Z, const Matrix& sigma);

/// inv-Wishart(prior_df + n, prior_scale I + (Y~ - C X~)(Y~ - C X~)^T), n = columns of Y~.
struct InverseWishartConditional {
  double dof = 0.0;
  Matrix scale;
};

InverseWishartConditional sigma_conditional(const Matricization& m, const Matrix& coef,
                                            const GibbsConfig& config);

/// Draws from IW(dof, scale): density proportional to
/// |S|^{-(dof+p+1)/2} exp(-tr(scale S^{-1}) / 2), mean scale / (dof - p - 1).
/// Bartlett decomposition of Wishart(dof, scale^{-1}) followed by inversion.
Matrix draw_inverse_wishart(double dof, const Matrix& scale, Rng& rng);

Matrix draw_Z_A(const Matricization& m, const Matrix& L_A, const Matrix& sigma_a, const GibbsConfig& config, Rng& rng);
Matrix draw_L_A(const Matricization& m, const Matrix& Z_A, const Matrix& sigma_a, Rng& rng);
Matrix draw_Sigma_A(const Matricization& m, const Matrix& A, const GibbsConfig& config, Rng& rng);
Matrix draw_Z_B(const Matricization& m, const Matrix& L_B, const Matrix& sigma_b, const GibbsConfig& config, Rng& rng);
Matrix draw_L_B(const Matricization& m, const Matrix& Z_B, const Matrix& sigma_b, Rng& rng);
Matrix draw_Sigma_B(const Matricization& m, const Matrix& B, const GibbsConfig& config, Rng& rng);

struct FactorPair {
  Matrix L;
  Matrix Z;
};

/// Re-expresses (L, Z) as (Q, R Z) with L = Q R, diag(R) >= 0. L Z is unchanged.
FactorPair enforce_qr(const Matrix& L, const Matrix& Z);

/// Balances the Kronecker scale: ||A||_F = ||B||_F and ||Sigma_A||_F = ||Sigma_B||_F,
/// leaving B (x) A and Sigma_B (x) Sigma_A unchanged.
ModelState rescale(const ModelState& state);

struct SweepOptions {
  bool update_L = true;
  bool enforce_qr = true;
  bool rescale = true;
};

/// One Gibbs iteration, in order: Z_A, L_A, QR(A), Sigma_A, Z_B, L_B, QR(B),
/// Sigma_B, rescale. Random numbers are consumed in exactly that order.
void gibbs_sweep(ModelState& state, const MatrixSeries& y, const GibbsConfig& config, Rng& rng,
                 const SweepOptions& options = {});

/// Starting point: identity covariances and rank-truncated SVDs of the
/// identity-whitened least-squares estimates of A and B.
ModelState initial_state(const MatrixSeries& y, const ModelDims& dims);

PosteriorDraws run_chain(const MatrixSeries& y, const ModelDims& dims, const GibbsConfig& config);
PosteriorDraws run_chain(const AdjustedTensor& y, const ModelDims& dims, const GibbsConfig& config);

}  // namespace tvar
