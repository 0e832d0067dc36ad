#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvar/analysis.hpp"

namespace tvar {

struct CommunityAssignment {
  std::vector<int> community;  ///< per node, ids contiguous from 0
  double modularity = 0.0;

  int count() const;
};

/// Newman modularity of a partition of the graph with weights |w| (diagonal ignored).
double modularity(const Matrix& weights, const std::vector<int>& community);

/// Louvain greedy modularity maximization on |weights| with the diagonal
/// excluded. Node visiting order is shuffled by `seed`; ids are numbered in
/// order of first appearance.
CommunityAssignment detect_communities(const Matrix& weights, std::uint64_t seed = 2019);
CommunityAssignment detect_communities(const PartialCorrelationNetwork& net, std::uint64_t seed = 2019);

void write_communities_csv(const CommunityAssignment& c, const std::vector<std::string>& nodes, std::ostream& out);

}  // namespace tvar
