#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tvar/ingest.hpp"
#include "tvar/linalg.hpp"

namespace tvar {

/// One K x Q matrix per month.
using MatrixSeries = std::vector<Matrix>;

/// log(1 + count) slices with the labels of the source tensor.
struct LogCounts {
  MatrixSeries slices;
  std::vector<std::string> category_labels;
  std::vector<std::string> district_labels;
  YearMonth start;

  Eigen::Index K() const { return slices.empty() ? 0 : slices.front().rows(); }
  Eigen::Index Q() const { return slices.empty() ? 0 : slices.front().cols(); }
  Eigen::Index T() const { return static_cast<Eigen::Index>(slices.size()); }

  /// Months [first, first + length).
  LogCounts slice_months(std::size_t first, std::size_t length) const;
};

LogCounts log1p_transform(const CountTensor& tensor);

inline constexpr int kMonthsPerYear = 12;

/// Which design survived the rank checks for one series.
enum class TrendFit {
  full,          ///< intercept, t, t^2 and seasonal dummies
  no_quadratic,  ///< quadratic term dropped
  no_seasonal,   ///< quadratic and seasonal block dropped
  intercept,     ///< intercept only
  null_series,   ///< all-zero series, nothing fitted
};

std::string to_string(TrendFit fit);

/// Systematic component of one series:
///   mu(t) = beta0 + beta1 t + beta2 t^2 + gamma[m(t)]
/// with t = 1 for the first fitted month and m(t) the season of month t.
/// gamma has period - 1 entries; the last season (December) is the reference.
struct TrendModel {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::vector<double> gamma;
  int first_season = 1;  ///< season (calendar month) of t = 1
  int period = kMonthsPerYear;
  TrendFit fit = TrendFit::null_series;

  int season(long t) const;
  double evaluate(long t) const;
};

/// Fits the trend model to one series by QR least squares. Time is mapped
/// to [0, 1] for the fit and the coefficients are reported in raw months.
/// Returns the model; `residuals` receives y - mu.
TrendModel fit_trend(std::span<const double> y, int first_season, int period,
                     std::vector<double>& residuals);

/// Detrended, seasonally adjusted log counts plus the fitted systematic parts.
struct AdjustedTensor {
  MatrixSeries values;
  std::vector<TrendModel> trends;  ///< index k * Q + q
  std::vector<std::string> category_labels;
  std::vector<std::string> district_labels;
  YearMonth start;

  Eigen::Index K() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index Q() const { return values.empty() ? 0 : values.front().cols(); }
  Eigen::Index T() const { return static_cast<Eigen::Index>(values.size()); }

  const TrendModel& trend(Eigen::Index k, Eigen::Index q) const { return trends[k * Q() + q]; }
  /// K x Q matrix of mu evaluated at month t (1-based; t > T extrapolates).
  Matrix systematic(long t) const;

  /// Wraps raw series as already adjusted (null trend models). Used for
  /// simulated data that carries no systematic component.
  static AdjustedTensor from_series(MatrixSeries values, YearMonth start = {2001, 1});
};

/// Per-series detrending and seasonal adjustment. Requires T >= period + 2.
AdjustedTensor fit_adjust(const LogCounts& log_counts, int period = kMonthsPerYear);

struct SeriesDiagnostics {
  double mean_z = 0.0;         ///< mean / (sd / sqrt(T))
  double seasonality_f = 0.0;  ///< F statistic of period - 1 seasonal dummies
  double trend_z = 0.0;        ///< t statistic of the slope on t
  bool degenerate = false;     ///< zero-variance series, statistics reported as 0
};

struct ResidualDiagnostics {
  Eigen::Index K = 0, Q = 0, T = 0;
  std::vector<SeriesDiagnostics> series;  ///< index k * Q + q
  double mean_threshold = 1.96;
  double f_critical = 0.0;  ///< 5% critical value of F(period - 1, T - period)
  double trend_threshold = 1.96;

  const SeriesDiagnostics& at(Eigen::Index k, Eigen::Index q) const { return series[k * Q + q]; }
};

SeriesDiagnostics diagnose_series(std::span<const double> y, int first_season, int period);

/// Mean, seasonality and trend checks for every series of a matrix sequence.
ResidualDiagnostics diagnostics(const MatrixSeries& residuals, int first_season,
                                int period = kMonthsPerYear);
ResidualDiagnostics diagnostics(const AdjustedTensor& adjusted, int period = kMonthsPerYear);

/// One row per (k, q): labels, fallback, beta0..beta2, gamma_1..gamma_{p-1}.
void write_trend_csv(const AdjustedTensor& adjusted, std::ostream& out);
/// One row per (k, q): labels, mean_z, seasonality_F, trend_z, degenerate, plus thresholds.
void write_diagnostics_csv(const ResidualDiagnostics& diag, const std::vector<std::string>& categories,
                           const std::vector<std::string>& districts, std::ostream& out);

}  // namespace tvar
