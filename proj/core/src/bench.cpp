#include "tvar/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "tvar/error.hpp"
#include "tvar/format.hpp"
#include "tvar/random.hpp"

namespace tvar {

namespace {

constexpr const char* kValidModels = "low_rank_<RA>x<RB>, full_rank, persistence, diagonal_ar";

// Runs fn(0..n-1) on up to `threads` workers. The exception of the lowest
// failing index is rethrown, so failures do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> flat(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

Metrics mean_metrics(const std::vector<const Metrics*>& ms) {
  Metrics out;
  double corr = 0.0;
  int n_corr = 0;
  for (const Metrics* m : ms) {
    out.rmse += m->rmse;
    out.mae += m->mae;
    if (m->corr) {
      corr += *m->corr;
      ++n_corr;
    }
  }
  out.rmse /= static_cast<double>(ms.size());
  out.mae /= static_cast<double>(ms.size());
  if (n_corr > 0) out.corr = corr / n_corr;
  return out;
}

void check_next(const AdjustedTensor& train, long t_next) {
  if (train.values.empty()) throw InputError("forecast: empty training window");
  if (t_next != static_cast<long>(train.T()) + 1)
    throw InputError("forecast: t_next must be " + std::to_string(train.T() + 1) + " (one step past the window), got " +
                     std::to_string(t_next));
}

std::uint64_t model_stream(const ModelSpec& m) {
  return (static_cast<std::uint64_t>(m.kind) << 48) ^ (static_cast<std::uint64_t>(m.R_A) << 24) ^
         static_cast<std::uint64_t>(m.R_B);
}

std::string corr_field(const Metrics& m) { return m.corr ? format_double(*m.corr) : ""; }

nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json j{{"rmse", m.rmse}, {"mae", m.mae}};
  j["corr"] = m.corr ? nlohmann::json(*m.corr) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

std::string ModelSpec::name() const {
  switch (kind) {
    case ModelKind::low_rank: return "low_rank_" + std::to_string(R_A) + "x" + std::to_string(R_B);
    case ModelKind::full_rank: return "full_rank";
    case ModelKind::persistence: return "persistence";
    case ModelKind::diagonal_ar: return "diagonal_ar";
  }
  return "?";
}

ModelSpec ModelSpec::parse(const std::string& name) {
  if (name == "full_rank") return full_rank();
  if (name == "persistence") return persistence();
  if (name == "diagonal_ar") return diagonal_ar();
  static const std::regex low(R"(low_rank_(\d+)x(\d+))");
  std::smatch m;
  if (std::regex_match(name, m, low)) {
    const long a = std::stol(m[1]), b = std::stol(m[2]);
    if (a < 1 || b < 1) throw InputError("model '" + name + "': ranks must be positive");
    return low_rank(a, b);
  }
  throw InputError("unknown model '" + name + "'; valid models: " + kValidModels);
}

void BacktestConfig::validate(Eigen::Index T) const {
  if (train_len < kMonthsPerYear + 2) throw InputError("backtest: train_len must be at least 14 months");
  if (n_windows < 1) throw InputError("backtest: n_windows must be positive");
  if (models.empty()) throw InputError("backtest: no models requested");
  if (static_cast<Eigen::Index>(train_len) + n_windows > T)
    throw InputError("backtest: train_len + n_windows = " + std::to_string(train_len + n_windows) +
                     " exceeds the " + std::to_string(T) + " available months");
  if (threads < 0) throw InputError("backtest: threads must be non-negative");
}

Metrics metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw InputError("metrics: prediction and truth lengths differ");
  if (pred.size() < 2) throw InputError("metrics: need at least two values");
  const double n = static_cast<double>(pred.size());
  Metrics m;
  double mp = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    m.rmse += e * e;
    m.mae += std::abs(e);
    mp += pred[i];
    mt += truth[i];
  }
  m.rmse = std::sqrt(m.rmse / n);
  m.mae /= n;
  mp /= n;
  mt /= n;
  double spp = 0.0, stt = 0.0, spt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    stt += (truth[i] - mt) * (truth[i] - mt);
    spt += (pred[i] - mp) * (truth[i] - mt);
  }
  if (spp > 0.0 && stt > 0.0) m.corr = spt / std::sqrt(spp * stt);
  return m;
}

Metrics metrics(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw InputError("metrics: shape mismatch");
  return metrics(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                 std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())));
}

Matrix forecast_one_step(const PosteriorDraws& draws, const AdjustedTensor& train, long t_next) {
  check_next(train, t_next);
  if (draws.empty()) throw InputError("forecast: no posterior draws");
  const Matrix& y_last = train.values.back();
  Matrix acc = Matrix::Zero(y_last.rows(), y_last.cols());
  for (const auto& s : draws.states) acc += bilinear_step(s.A(), s.B(), y_last);
  return acc / static_cast<double>(draws.size()) + train.systematic(t_next);
}

Matrix forecast_persistence(const AdjustedTensor& train, long t_next) {
  check_next(train, t_next);
  return train.values.back() + train.systematic(t_next);
}

Matrix forecast_diagonal_ar(const AdjustedTensor& train, long t_next) {
  check_next(train, t_next);
  Matrix num = Matrix::Zero(train.K(), train.Q()), den = Matrix::Zero(train.K(), train.Q());
  for (std::size_t t = 1; t < train.values.size(); ++t) {
    num += train.values[t].cwiseProduct(train.values[t - 1]);
    den += train.values[t - 1].cwiseProduct(train.values[t - 1]);
  }
  const Matrix phi = (den.array() > 0.0).select(num.array() / den.array(), 0.0).matrix();
  return phi.cwiseProduct(train.values.back()) + train.systematic(t_next);
}

const ModelAggregate& ForecastReport::aggregate(const std::string& model) const {
  for (const auto& a : aggregates)
    if (a.model == model) return a;
  throw InputError("report has no model '" + model + "'");
}

ForecastReport backtest(const LogCounts& data, const BacktestConfig& config, const GibbsConfig& gibbs) {
  config.validate(data.T());
  gibbs.validate();
  const auto n_win = static_cast<std::size_t>(config.n_windows);
  const auto train_len = static_cast<std::size_t>(config.train_len);

  std::vector<AdjustedTensor> trains(n_win);
  parallel_for(n_win, config.threads, [&](std::size_t w) {
    LogCounts slice = data.slice_months(w, train_len);
    trains[w] = fit_adjust(slice);
  });

  ForecastReport report;
  report.config = config;
  const std::size_t n_models = config.models.size();
  report.windows.resize(n_models * n_win);
  parallel_for(n_models * n_win, config.threads, [&](std::size_t task) {
    const ModelSpec& model = config.models[task / n_win];
    const std::size_t w = task % n_win;
    const AdjustedTensor& train = trains[w];
    const long t_next = static_cast<long>(train_len) + 1;
    Matrix pred;
    try {
      switch (model.kind) {
        case ModelKind::persistence: pred = forecast_persistence(train, t_next); break;
        case ModelKind::diagonal_ar: pred = forecast_diagonal_ar(train, t_next); break;
        case ModelKind::low_rank:
        case ModelKind::full_rank: {
          ModelDims dims{train.K(), train.Q(), model.R_A, model.R_B};
          if (model.kind == ModelKind::full_rank) dims.R_A = train.K(), dims.R_B = train.Q();
          if (dims.R_A > train.K() || dims.R_B > train.Q())
            throw InputError("ranks exceed the tensor dimensions");
          GibbsConfig g = gibbs;
          g.seed = derive_seed(gibbs.seed, {model_stream(model), static_cast<std::uint64_t>(w)});
          pred = forecast_one_step(run_chain(train, dims, g), train, t_next);
          break;
        }
      }
    } catch (const NumericalError& e) {
      throw NumericalError(model.name() + ", window " + std::to_string(w) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(model.name() + ", window " + std::to_string(w) + ": " + e.what());
    }
    WindowResult& r = report.windows[task];
    r.model = model.name();
    r.window = static_cast<int>(w);
    r.forecast_month = data.start.plus(static_cast<int>(w + train_len));
    r.truth = data.slices[w + train_len];
    r.prediction = std::move(pred);
    r.metrics = metrics(r.prediction, r.truth);
  });

  for (std::size_t m = 0; m < n_models; ++m) {
    ModelAggregate agg;
    agg.model = config.models[m].name();
    agg.windows = config.n_windows;
    std::vector<const Metrics*> per;
    std::vector<double> all_pred, all_truth;
    for (std::size_t w = 0; w < n_win; ++w) {
      const WindowResult& r = report.windows[m * n_win + w];
      per.push_back(&r.metrics);
      const auto p = flat(r.prediction), t = flat(r.truth);
      all_pred.insert(all_pred.end(), p.begin(), p.end());
      all_truth.insert(all_truth.end(), t.begin(), t.end());
    }
    agg.window_mean = mean_metrics(per);
    agg.pooled = metrics(all_pred, all_truth);
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

ForecastReport backtest(const CountTensor& tensor, const BacktestConfig& config, const GibbsConfig& gibbs) {
  return backtest(log1p_transform(tensor), config, gibbs);
}

RankSearchResult rank_search(const LogCounts& data, const BacktestConfig& config, const GibbsConfig& gibbs,
                             const std::vector<RankPair>& grid, double tolerance) {
  if (grid.empty()) throw InputError("rank search: empty grid");
  for (const auto& p : grid)
    if (p.R_A < 1 || p.R_B < 1 || p.R_A > data.K() || p.R_B > data.Q())
      throw InputError("rank search: pair (" + std::to_string(p.R_A) + ", " + std::to_string(p.R_B) +
                       ") outside 1..K x 1..Q");
  BacktestConfig bc = config;
  bc.models = {ModelSpec::full_rank()};
  for (const auto& p : grid) bc.models.push_back(ModelSpec::low_rank(p.R_A, p.R_B));

  RankSearchResult res;
  res.tolerance = tolerance;
  res.report = backtest(data, bc, gibbs);
  res.full_rank = res.report.aggregate("full_rank").window_mean;
  const double limit = (1.0 + tolerance) * res.full_rank.rmse;

  for (const auto& p : grid) {
    RankSearchRow row;
    row.ranks = p;
    row.factor_size = p.R_A * data.K() + p.R_B * data.Q();
    row.metrics = res.report.aggregate(ModelSpec::low_rank(p.R_A, p.R_B).name()).window_mean;
    row.within_tolerance = row.metrics.rmse <= limit;
    res.rows.push_back(row);
  }

  auto better = [](const RankSearchRow& a, const RankSearchRow& b) {
    if (a.factor_size != b.factor_size) return a.factor_size < b.factor_size;
    if (a.ranks.R_A != b.ranks.R_A) return a.ranks.R_A < b.ranks.R_A;
    return a.ranks.R_B < b.ranks.R_B;
  };
  const RankSearchRow* best = nullptr;
  for (const auto& r : res.rows)
    if (r.within_tolerance && (!best || better(r, *best))) best = &r;
  res.any_within = best != nullptr;
  if (!best) {
    for (const auto& r : res.rows)
      if (!best || r.metrics.rmse < best->metrics.rmse || (r.metrics.rmse == best->metrics.rmse && better(r, *best)))
        best = &r;
  }
  res.selected = best->ranks;
  return res;
}

void write_backtest_csv(const ForecastReport& report, std::ostream& out) {
  out << "model,window,forecast_month,rmse,mae,corr\n";
  for (const auto& r : report.windows)
    out << r.model << ',' << r.window << ',' << r.forecast_month.str() << ',' << format_double(r.metrics.rmse) << ','
        << format_double(r.metrics.mae) << ',' << corr_field(r.metrics) << '\n';
}

void write_backtest_json(const ForecastReport& report, std::ostream& out) {
  nlohmann::json j;
  j["train_len"] = report.config.train_len;
  j["n_windows"] = report.config.n_windows;
  j["forecasts_per_model"] = report.windows.empty() ? 0
                                                     : report.windows.front().prediction.size() * report.config.n_windows;
  nlohmann::json models = nlohmann::json::array();
  for (const auto& a : report.aggregates)
    models.push_back({{"model", a.model},
                      {"windows", a.windows},
                      {"window_mean", metrics_json(a.window_mean)},
                      {"pooled", metrics_json(a.pooled)}});
  j["models"] = std::move(models);
  out << j.dump(2) << '\n';
}

void write_rank_search_csv(const RankSearchResult& result, std::ostream& out) {
  out << "R_A,R_B,factor_size,rmse,mae,corr,within_tolerance,selected\n";
  for (const auto& r : result.rows)
    out << r.ranks.R_A << ',' << r.ranks.R_B << ',' << r.factor_size << ',' << format_double(r.metrics.rmse) << ','
        << format_double(r.metrics.mae) << ',' << corr_field(r.metrics) << ','
        << (r.within_tolerance ? "true" : "false") << ',' << (r.ranks == result.selected ? "true" : "false") << '\n';
  out << "full_rank,full_rank,," << format_double(result.full_rank.rmse) << ',' << format_double(result.full_rank.mae)
      << ',' << corr_field(result.full_rank) << ",,\n";
}

}  // namespace tvar
