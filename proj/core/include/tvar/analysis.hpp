#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tvar/posterior.hpp"
#include "tvar/sampler.hpp"

namespace tvar {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Posterior-mean partial correlations of one side's noise covariance.
/// The diagonal is reported as +1.
struct PartialCorrelationNetwork {
  std::vector<std::string> nodes;
  Matrix weights;
  Matrix lower;  ///< 5% quantile per entry, on the partial-correlation scale
  Matrix upper;  ///< 95% quantile
  BoolMatrix significant;
  std::size_t skipped_draws = 0;

  Eigen::Index size() const { return weights.rows(); }
};

/// -P_ij / sqrt(P_ii P_jj) with P = sigma^{-1}; diagonal set to +1.
Matrix partial_correlation(const Matrix& sigma);

PartialCorrelationNetwork partial_correlations(const std::vector<Matrix>& sigmas,
                                               std::vector<std::string> nodes = {});
PartialCorrelationNetwork partial_correlations(const PosteriorDraws& draws, Side side,
                                               std::vector<std::string> nodes = {});

/// Entrywise mean and 90% equal-tailed interval across draws.
struct PosteriorSummary {
  Matrix mean;
  Matrix lower90;
  Matrix upper90;
  BoolMatrix significant;  ///< 0 outside [lower90, upper90]
};

PosteriorSummary summarize_matrices(const std::vector<Matrix>& draws);
PosteriorSummary summarize_dynamics(const PosteriorDraws& draws, Side side);

/// Long format: row,col,mean,lower90,upper90,significant.
void write_summary_csv(const PosteriorSummary& s, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels, std::ostream& out);
/// Long format over i < j: node_i,node_j,partial_correlation,lower90,upper90,significant.
void write_network_csv(const PartialCorrelationNetwork& net, std::ostream& out);

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

inline constexpr double kEarthRadiusMeters = 6371000.0;

/// Great-circle distance in meters (haversine).
double haversine_meters(const GeoPoint& a, const GeoPoint& b);

/// Reads district,lat,lon. Numeric district ids are matched without leading zeros.
std::map<std::string, GeoPoint> read_centroids_csv(std::istream& in);

struct DistanceRow {
  std::string node_a, node_b;
  double distance_m = 0.0;
  double log_distance = 0.0;  ///< log(distance_m + 1)
  double partial_correlation = 0.0;
};

struct DistanceTable {
  std::vector<DistanceRow> rows;
  std::size_t skipped = 0;  ///< pairs with a missing centroid
};

DistanceTable distance_correlation_table(const PartialCorrelationNetwork& net,
                                         const std::map<std::string, GeoPoint>& centroids);
void write_distance_csv(const DistanceTable& table, std::ostream& out);

}  // namespace tvar
