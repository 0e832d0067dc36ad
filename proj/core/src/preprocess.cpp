#include "tvar/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/fisher_f.hpp>

#include "tvar/csv.hpp"
#include "tvar/error.hpp"
#include "tvar/format.hpp"

namespace tvar {

namespace {

int season_of(int first_season, long t, int period) {
  const long idx = (static_cast<long>(first_season) - 1 + (t - 1)) % period;
  return static_cast<int>((idx + period) % period) + 1;
}

struct Design {
  bool quadratic;
  bool linear;
  bool seasonal;
  TrendFit fit;
};

constexpr Design kLadder[] = {
    {true, true, true, TrendFit::full},
    {false, true, true, TrendFit::no_quadratic},
    {false, true, false, TrendFit::no_seasonal},
    {false, false, false, TrendFit::intercept},
};

}  // namespace

LogCounts LogCounts::slice_months(std::size_t first, std::size_t length) const {
  if (first + length > slices.size()) throw InputError("slice_months: range exceeds series length");
  LogCounts out;
  out.slices.assign(slices.begin() + static_cast<std::ptrdiff_t>(first),
                    slices.begin() + static_cast<std::ptrdiff_t>(first + length));
  out.category_labels = category_labels;
  out.district_labels = district_labels;
  out.start = start.plus(static_cast<int>(first));
  return out;
}

LogCounts log1p_transform(const CountTensor& tensor) {
  tensor.validate();
  LogCounts out;
  out.category_labels = tensor.category_labels;
  out.district_labels = tensor.district_labels;
  out.start = tensor.start;
  out.slices.reserve(tensor.T);
  for (std::size_t t = 0; t < tensor.T; ++t) {
    Matrix slice(tensor.K, tensor.Q);
    for (std::size_t k = 0; k < tensor.K; ++k)
      for (std::size_t q = 0; q < tensor.Q; ++q)
        slice(k, q) = std::log1p(static_cast<double>(tensor.at(k, q, t)));
    out.slices.push_back(std::move(slice));
  }
  return out;
}

std::string to_string(TrendFit fit) {
  switch (fit) {
    case TrendFit::full: return "full";
    case TrendFit::no_quadratic: return "no_quadratic";
    case TrendFit::no_seasonal: return "no_seasonal";
    case TrendFit::intercept: return "intercept";
    case TrendFit::null_series: return "null";
  }
  return "unknown";
}

int TrendModel::season(long t) const { return season_of(first_season, t, period); }

double TrendModel::evaluate(long t) const {
  if (fit == TrendFit::null_series) return 0.0;
  const double td = static_cast<double>(t);
  double mu = beta0 + beta1 * td + beta2 * td * td;
  const int s = season(t);
  if (s < period && !gamma.empty()) mu += gamma[static_cast<std::size_t>(s - 1)];
  return mu;
}

TrendModel fit_trend(std::span<const double> y, int first_season, int period,
                     std::vector<double>& residuals) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (period < 2) throw InputError("fit_trend: period must be at least 2");
  if (n < period + 2)
    throw InputError("fit_trend: series of length " + std::to_string(n) + " is shorter than the " +
                     std::to_string(period + 2) + " months needed for trend plus seasonal effects");

  TrendModel model;
  model.first_season = first_season;
  model.period = period;
  model.gamma.assign(static_cast<std::size_t>(period - 1), 0.0);
  residuals.assign(y.begin(), y.end());

  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
    model.fit = TrendFit::null_series;
    return model;
  }

  const Eigen::Map<const Vector> yv(y.data(), n);
  const double h = static_cast<double>(n - 1);
  for (const Design& d : kLadder) {
    const Eigen::Index cols = 1 + (d.linear ? 1 : 0) + (d.quadratic ? 1 : 0) + (d.seasonal ? period - 1 : 0);
    Matrix x = Matrix::Zero(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / h;
      Eigen::Index c = 0;
      x(i, c++) = 1.0;
      if (d.linear) x(i, c++) = s;
      if (d.quadratic) x(i, c++) = s * s;
      if (d.seasonal) {
        const int m = season_of(first_season, i + 1, period);
        if (m < period) x(i, c + m - 1) = 1.0;
      }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) continue;

    const Vector coef = qr.solve(yv);
    const Vector resid = yv - x * coef;
    for (Eigen::Index i = 0; i < n; ++i) residuals[static_cast<std::size_t>(i)] = resid(i);

    Eigen::Index c = 0;
    const double c0 = coef(c++);
    const double c1 = d.linear ? coef(c++) : 0.0;
    const double c2 = d.quadratic ? coef(c++) : 0.0;
    // mu = c0 + c1 s + c2 s^2 with s = (t - 1) / h, expanded in powers of t.
    model.beta0 = c0 - c1 / h + c2 / (h * h);
    model.beta1 = c1 / h - 2.0 * c2 / (h * h);
    model.beta2 = c2 / (h * h);
    if (d.seasonal)
      for (int m = 0; m < period - 1; ++m) model.gamma[static_cast<std::size_t>(m)] = coef(c + m);
    model.fit = d.fit;
    return model;
  }
  throw NumericalError("fit_trend: intercept-only design is rank deficient");
}

Matrix AdjustedTensor::systematic(long t) const {
  Matrix mu(K(), Q());
  for (Eigen::Index k = 0; k < K(); ++k)
    for (Eigen::Index q = 0; q < Q(); ++q) mu(k, q) = trend(k, q).evaluate(t);
  return mu;
}

AdjustedTensor AdjustedTensor::from_series(MatrixSeries values, YearMonth start) {
  AdjustedTensor out;
  if (values.empty()) throw InputError("from_series: empty series");
  const Eigen::Index K = values.front().rows(), Q = values.front().cols();
  for (const auto& m : values)
    if (m.rows() != K || m.cols() != Q) throw InputError("from_series: slices differ in shape");
  out.values = std::move(values);
  out.start = start;
  TrendModel null_model;
  null_model.first_season = start.month;
  null_model.gamma.assign(kMonthsPerYear - 1, 0.0);
  out.trends.assign(static_cast<std::size_t>(K * Q), null_model);
  for (Eigen::Index k = 0; k < K; ++k) out.category_labels.push_back("k" + std::to_string(k + 1));
  for (Eigen::Index q = 0; q < Q; ++q) out.district_labels.push_back("q" + std::to_string(q + 1));
  return out;
}

AdjustedTensor fit_adjust(const LogCounts& log_counts, int period) {
  const Eigen::Index K = log_counts.K(), Q = log_counts.Q(), T = log_counts.T();
  if (T < period + 2)
    throw InputError("fit_adjust: need at least " + std::to_string(period + 2) + " months, got " +
                     std::to_string(T));
  AdjustedTensor out;
  out.category_labels = log_counts.category_labels;
  out.district_labels = log_counts.district_labels;
  out.start = log_counts.start;
  out.values.assign(static_cast<std::size_t>(T), Matrix(K, Q));
  out.trends.resize(static_cast<std::size_t>(K * Q));

  const int first_season = period == kMonthsPerYear ? log_counts.start.month : 1;
  std::vector<double> series(static_cast<std::size_t>(T));
  std::vector<double> resid;
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index q = 0; q < Q; ++q) {
      for (Eigen::Index t = 0; t < T; ++t) series[static_cast<std::size_t>(t)] = log_counts.slices[t](k, q);
      out.trends[static_cast<std::size_t>(k * Q + q)] = fit_trend(series, first_season, period, resid);
      for (Eigen::Index t = 0; t < T; ++t) out.values[t](k, q) = resid[static_cast<std::size_t>(t)];
    }
  }
  return out;
}

SeriesDiagnostics diagnose_series(std::span<const double> y, int first_season, int period) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (n < period + 2)
    throw InputError("diagnostics: series of length " + std::to_string(n) + " is too short");
  const Eigen::Map<const Vector> yv(y.data(), n);
  SeriesDiagnostics d;

  const double mean = yv.mean();
  const double sst = (yv.array() - mean).square().sum();
  const double sd = std::sqrt(sst / static_cast<double>(n - 1));
  if (!(sd > 1e-12 * (1.0 + yv.cwiseAbs().maxCoeff()))) {
    d.degenerate = true;
    return d;
  }
  d.mean_z = mean / (sd / std::sqrt(static_cast<double>(n)));

  // Seasonality: intercept plus period - 1 dummies.
  Matrix x = Matrix::Zero(n, period);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    const int m = season_of(first_season, i + 1, period);
    if (m < period) x(i, m) = 1.0;
  }
  const Vector coef = x.colPivHouseholderQr().solve(yv);
  const double sse_season = std::max((yv - x * coef).squaredNorm(), 1e-16 * sst);
  const double df1 = period - 1, df2 = static_cast<double>(n - period);
  d.seasonality_f = std::max(sst - sse_season, 0.0) / df1 / (sse_season / df2);

  // Linear trend: slope t statistic.
  const double tbar = 0.5 * static_cast<double>(n + 1);
  double sxx = 0.0, sxy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i + 1) - tbar;
    sxx += dt * dt;
    sxy += dt * (yv(i) - mean);
  }
  const double slope = sxy / sxx;
  double sse_trend = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = yv(i) - mean - slope * (static_cast<double>(i + 1) - tbar);
    sse_trend += r * r;
  }
  sse_trend = std::max(sse_trend, 1e-16 * sst);
  const double se = std::sqrt(sse_trend / static_cast<double>(n - 2) / sxx);
  d.trend_z = slope / se;
  return d;
}

ResidualDiagnostics diagnostics(const MatrixSeries& residuals, int first_season, int period) {
  ResidualDiagnostics out;
  if (residuals.empty()) throw InputError("diagnostics: empty series");
  out.K = residuals.front().rows();
  out.Q = residuals.front().cols();
  out.T = static_cast<Eigen::Index>(residuals.size());
  if (out.T < period + 2) throw InputError("diagnostics: series too short");
  boost::math::fisher_f_distribution<double> f(period - 1, static_cast<double>(out.T - period));
  out.f_critical = boost::math::quantile(f, 0.95);

  std::vector<double> series(static_cast<std::size_t>(out.T));
  out.series.reserve(static_cast<std::size_t>(out.K * out.Q));
  for (Eigen::Index k = 0; k < out.K; ++k) {
    for (Eigen::Index q = 0; q < out.Q; ++q) {
      for (Eigen::Index t = 0; t < out.T; ++t) series[static_cast<std::size_t>(t)] = residuals[t](k, q);
      out.series.push_back(diagnose_series(series, first_season, period));
    }
  }
  return out;
}

ResidualDiagnostics diagnostics(const AdjustedTensor& adjusted, int period) {
  const int first_season = period == kMonthsPerYear ? adjusted.start.month : 1;
  return diagnostics(adjusted.values, first_season, period);
}

void write_trend_csv(const AdjustedTensor& adjusted, std::ostream& out) {
  const int period = adjusted.trends.empty() ? kMonthsPerYear : adjusted.trends.front().period;
  out << "category,district,fit,beta0,beta1,beta2";
  for (int m = 1; m < period; ++m) out << ",gamma_" << m;
  out << '\n';
  for (Eigen::Index k = 0; k < adjusted.K(); ++k) {
    for (Eigen::Index q = 0; q < adjusted.Q(); ++q) {
      const TrendModel& tm = adjusted.trend(k, q);
      out << csv_escape(adjusted.category_labels[k]) << ',' << csv_escape(adjusted.district_labels[q])
          << ',' << to_string(tm.fit) << ',' << format_double(tm.beta0) << ','
          << format_double(tm.beta1) << ',' << format_double(tm.beta2);
      for (int m = 0; m < period - 1; ++m)
        out << ',' << format_double(m < static_cast<int>(tm.gamma.size()) ? tm.gamma[m] : 0.0);
      out << '\n';
    }
  }
}

void write_diagnostics_csv(const ResidualDiagnostics& diag, const std::vector<std::string>& categories,
                           const std::vector<std::string>& districts, std::ostream& out) {
  out << "category,district,mean_z,seasonality_F,trend_z,degenerate,mean_threshold,F_critical,"
         "trend_threshold\n";
  for (Eigen::Index k = 0; k < diag.K; ++k) {
    for (Eigen::Index q = 0; q < diag.Q; ++q) {
      const SeriesDiagnostics& s = diag.at(k, q);
      out << csv_escape(categories.at(k)) << ',' << csv_escape(districts.at(q)) << ','
          << format_double(s.mean_z) << ',' << format_double(s.seasonality_f) << ','
          << format_double(s.trend_z) << ',' << (s.degenerate ? "true" : "false") << ','
          << format_double(diag.mean_threshold) << ',' << format_double(diag.f_critical) << ','
          << format_double(diag.trend_threshold) << '\n';
    }
  }
}

}  // namespace tvar
