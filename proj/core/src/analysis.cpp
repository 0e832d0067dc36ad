#include "tvar/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <ostream>

#include "tvar/csv.hpp"
#include "tvar/error.hpp"
#include "tvar/format.hpp"

namespace tvar {

namespace {

std::vector<std::string> default_nodes(std::vector<std::string> nodes, Eigen::Index n, const char* prefix) {
  if (nodes.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) nodes.push_back(prefix + std::to_string(i + 1));
  }
  if (static_cast<Eigen::Index>(nodes.size()) != n)
    throw InputError("node labels: " + std::to_string(nodes.size()) + " labels for " + std::to_string(n) + " nodes");
  return nodes;
}

// Entrywise mean and 5%/95% quantiles of equally shaped matrices.
void entrywise(const std::vector<Matrix>& ms, Matrix& mean, Matrix& lo, Matrix& hi) {
  const Eigen::Index r = ms.front().rows(), c = ms.front().cols();
  mean = Matrix::Zero(r, c);
  lo.resize(r, c);
  hi.resize(r, c);
  std::vector<double> v(ms.size());
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) {
      double sum = 0.0;
      for (std::size_t s = 0; s < ms.size(); ++s) {
        v[s] = ms[s](i, j);
        sum += v[s];
      }
      mean(i, j) = sum / static_cast<double>(ms.size());
      std::sort(v.begin(), v.end());
      lo(i, j) = quantile_sorted(v, 0.05);
      hi(i, j) = quantile_sorted(v, 0.95);
    }
  }
}

BoolMatrix excludes_zero(const Matrix& lo, const Matrix& hi) {
  return (lo.array() > 0.0) || (hi.array() < 0.0);
}

std::string district_key(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) return s;
  const auto nz = s.find_first_not_of('0');
  return nz == std::string::npos ? "0" : s.substr(nz);
}

}  // namespace

Matrix partial_correlation(const Matrix& sigma) {
  const Matrix p = spd_inverse(sigma, "Sigma");
  const Vector d = p.diagonal().cwiseSqrt().cwiseInverse();
  Matrix out = -(d.asDiagonal() * p * d.asDiagonal());
  out = symmetrize(out);
  out.diagonal().setOnes();
  return out;
}

PartialCorrelationNetwork partial_correlations(const std::vector<Matrix>& sigmas, std::vector<std::string> nodes) {
  if (sigmas.empty()) throw InputError("partial_correlations: no draws");
  PartialCorrelationNetwork net;
  std::vector<Matrix> pcs;
  pcs.reserve(sigmas.size());
  for (const auto& s : sigmas) {
    try {
      pcs.push_back(partial_correlation(s));
    } catch (const NumericalError&) {
      ++net.skipped_draws;
    }
  }
  if (pcs.empty()) throw NumericalError("partial_correlations: every covariance draw was singular");
  net.nodes = default_nodes(std::move(nodes), pcs.front().rows(), "node");
  entrywise(pcs, net.weights, net.lower, net.upper);
  net.weights.diagonal().setOnes();
  net.significant = excludes_zero(net.lower, net.upper);
  return net;
}

PartialCorrelationNetwork partial_correlations(const PosteriorDraws& draws, Side side,
                                               std::vector<std::string> nodes) {
  std::vector<Matrix> sigmas;
  sigmas.reserve(draws.size());
  for (const auto& s : draws.states) sigmas.push_back(side == Side::A ? s.Sigma_A : s.Sigma_B);
  return partial_correlations(sigmas, std::move(nodes));
}

PosteriorSummary summarize_matrices(const std::vector<Matrix>& draws) {
  if (draws.empty()) throw InputError("summarize: no draws");
  PosteriorSummary s;
  entrywise(draws, s.mean, s.lower90, s.upper90);
  s.significant = excludes_zero(s.lower90, s.upper90);
  return s;
}

PosteriorSummary summarize_dynamics(const PosteriorDraws& draws, Side side) {
  std::vector<Matrix> ms;
  ms.reserve(draws.size());
  for (const auto& s : draws.states) ms.push_back(side == Side::A ? s.A() : s.B());
  return summarize_matrices(ms);
}

void write_summary_csv(const PosteriorSummary& s, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels, std::ostream& out) {
  const auto rows = default_nodes(row_labels, s.mean.rows(), "r");
  const auto cols = default_nodes(col_labels, s.mean.cols(), "c");
  out << "row,col,mean,lower90,upper90,significant\n";
  for (Eigen::Index i = 0; i < s.mean.rows(); ++i)
    for (Eigen::Index j = 0; j < s.mean.cols(); ++j)
      out << csv_escape(rows[i]) << ',' << csv_escape(cols[j]) << ',' << format_double(s.mean(i, j)) << ','
          << format_double(s.lower90(i, j)) << ',' << format_double(s.upper90(i, j)) << ','
          << (s.significant(i, j) ? "true" : "false") << '\n';
}

void write_network_csv(const PartialCorrelationNetwork& net, std::ostream& out) {
  out << "node_i,node_j,partial_correlation,lower90,upper90,significant\n";
  for (Eigen::Index i = 0; i < net.size(); ++i)
    for (Eigen::Index j = i + 1; j < net.size(); ++j)
      out << csv_escape(net.nodes[i]) << ',' << csv_escape(net.nodes[j]) << ',' << format_double(net.weights(i, j))
          << ',' << format_double(net.lower(i, j)) << ',' << format_double(net.upper(i, j)) << ','
          << (net.significant(i, j) ? "true" : "false") << '\n';
}

double haversine_meters(const GeoPoint& a, const GeoPoint& b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

std::map<std::string, GeoPoint> read_centroids_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> f;
  if (!reader.next(f)) throw InputError("centroids: empty file");
  auto col = [&](const char* name) {
    const auto it = std::find(f.begin(), f.end(), name);
    if (it == f.end()) throw InputError(std::string("centroids: missing column '") + name + "'");
    return static_cast<std::size_t>(it - f.begin());
  };
  const std::size_t cd = col("district"), clat = col("lat"), clon = col("lon");
  std::map<std::string, GeoPoint> out;
  while (reader.next(f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() <= std::max({cd, clat, clon}))
      throw InputError("centroids line " + std::to_string(reader.line()) + ": too few fields");
    try {
      out[district_key(f[cd])] = {std::stod(f[clat]), std::stod(f[clon])};
    } catch (const std::logic_error&) {
      throw InputError("centroids line " + std::to_string(reader.line()) + ": bad coordinate");
    }
  }
  return out;
}

DistanceTable distance_correlation_table(const PartialCorrelationNetwork& net,
                                         const std::map<std::string, GeoPoint>& centroids) {
  DistanceTable t;
  for (Eigen::Index i = 0; i < net.size(); ++i) {
    for (Eigen::Index j = i + 1; j < net.size(); ++j) {
      const auto a = centroids.find(district_key(net.nodes[i]));
      const auto b = centroids.find(district_key(net.nodes[j]));
      if (a == centroids.end() || b == centroids.end()) {
        ++t.skipped;
        continue;
      }
      DistanceRow row;
      row.node_a = net.nodes[i];
      row.node_b = net.nodes[j];
      row.distance_m = haversine_meters(a->second, b->second);
      row.log_distance = std::log(row.distance_m + 1.0);
      row.partial_correlation = net.weights(i, j);
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

void write_distance_csv(const DistanceTable& table, std::ostream& out) {
  out << "district_a,district_b,distance_m,log_distance,partial_correlation\n";
  for (const auto& r : table.rows)
    out << csv_escape(r.node_a) << ',' << csv_escape(r.node_b) << ',' << format_double(r.distance_m) << ','
        << format_double(r.log_distance) << ',' << format_double(r.partial_correlation) << '\n';
}

}  // namespace tvar
