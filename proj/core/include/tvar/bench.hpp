#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvar/ingest.hpp"
#include "tvar/posterior.hpp"
#include "tvar/preprocess.hpp"
#include "tvar/sampler.hpp"

namespace tvar {

enum class ModelKind { low_rank, full_rank, persistence, diagonal_ar };

/// One forecasting model of a backtest. Names: "low_rank_<RA>x<RB>",
/// "full_rank", "persistence", "diagonal_ar".
struct ModelSpec {
  ModelKind kind = ModelKind::full_rank;
  Eigen::Index R_A = 0;
  Eigen::Index R_B = 0;

  static ModelSpec low_rank(Eigen::Index r_a, Eigen::Index r_b) { return {ModelKind::low_rank, r_a, r_b}; }
  static ModelSpec full_rank() { return {ModelKind::full_rank, 0, 0}; }
  static ModelSpec persistence() { return {ModelKind::persistence, 0, 0}; }
  static ModelSpec diagonal_ar() { return {ModelKind::diagonal_ar, 0, 0}; }

  std::string name() const;
  /// Throws InputError listing the valid names.
  static ModelSpec parse(const std::string& name);
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct BacktestConfig {
  int train_len = 204;
  int n_windows = 24;
  std::vector<ModelSpec> models{ModelSpec::low_rank(11, 5)};
  int threads = 1;  ///< 0 = hardware concurrency; results do not depend on it

  void validate(Eigen::Index T) const;
};

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> corr;  ///< empty when either input is constant
};

/// rmse, mae and Pearson correlation. Requires equal lengths >= 2.
Metrics metrics(std::span<const double> pred, std::span<const double> truth);
Metrics metrics(const Matrix& pred, const Matrix& truth);

/// Posterior-mean one-step forecast on the log(1 + c) scale:
///   mean_s(A_s Y_T B_s^T) + mu(T + 1).
/// `train` is the adjusted training window; t_next must equal T + 1.
Matrix forecast_one_step(const PosteriorDraws& draws, const AdjustedTensor& train, long t_next);

/// Baselines on the same scale.
Matrix forecast_persistence(const AdjustedTensor& train, long t_next);
Matrix forecast_diagonal_ar(const AdjustedTensor& train, long t_next);

struct WindowResult {
  std::string model;
  int window = 0;
  YearMonth forecast_month;
  Metrics metrics;
  Matrix prediction;
  Matrix truth;
};

struct ModelAggregate {
  std::string model;
  Metrics window_mean;  ///< unweighted mean over windows of pooled per-window metrics
  Metrics pooled;       ///< all forecasts of all windows pooled
  int windows = 0;
};

struct ForecastReport {
  BacktestConfig config;
  std::vector<WindowResult> windows;  ///< model-major, then window
  std::vector<ModelAggregate> aggregates;

  const ModelAggregate& aggregate(const std::string& model) const;
};

/// Rolling one-step-ahead evaluation. Window w trains on months
/// [w, w + train_len) (preprocessing refitted on that slice only) and
/// forecasts month w + train_len. Per-window chains use seeds derived from
/// gibbs.seed, the model and the window.
ForecastReport backtest(const LogCounts& data, const BacktestConfig& config, const GibbsConfig& gibbs);
ForecastReport backtest(const CountTensor& tensor, const BacktestConfig& config, const GibbsConfig& gibbs);

struct RankPair {
  Eigen::Index R_A = 0;
  Eigen::Index R_B = 0;
  friend bool operator==(const RankPair&, const RankPair&) = default;
};

struct RankSearchRow {
  RankPair ranks;
  long long factor_size = 0;  ///< R_A K + R_B Q
  Metrics metrics;            ///< window means
  bool within_tolerance = false;
};

struct RankSearchResult {
  std::vector<RankSearchRow> rows;
  Metrics full_rank;
  double tolerance = 0.01;
  RankPair selected;
  bool any_within = false;  ///< false: fell back to the lowest rmse
  ForecastReport report;
};

/// Backtests every pair plus the full-rank reference and picks the pair with
/// the smallest R_A K + R_B Q whose rmse is within (1 + tolerance) of the
/// full-rank rmse; ties go to the smaller R_A, then the smaller R_B.
RankSearchResult rank_search(const LogCounts& data, const BacktestConfig& config, const GibbsConfig& gibbs,
                             const std::vector<RankPair>& grid, double tolerance = 0.01);

/// model,window,forecast_month,rmse,mae,corr (corr empty when undefined).
void write_backtest_csv(const ForecastReport& report, std::ostream& out);
void write_backtest_json(const ForecastReport& report, std::ostream& out);
void write_rank_search_csv(const RankSearchResult& result, std::ostream& out);

}  // namespace tvar
