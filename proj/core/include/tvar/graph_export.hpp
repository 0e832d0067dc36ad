#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvar/analysis.hpp"
#include "tvar/community.hpp"

namespace tvar {

/// GraphML 1.0, undirected. Node data: label, community. Edge data: weight,
/// significant. Every pair i < j with nonzero weight becomes an edge.
void write_graphml(const PartialCorrelationNetwork& net, const CommunityAssignment& communities, std::ostream& out);

/// source,target,weight,significant over the same edges as the GraphML.
void write_edge_csv(const PartialCorrelationNetwork& net, std::ostream& out);

struct EdgeList {
  Matrix weights;  ///< unit diagonal, zeros for absent pairs
  BoolMatrix significant;
};

/// Parses an edge CSV back onto the given node order.
EdgeList read_edge_csv(std::istream& in, const std::vector<std::string>& nodes);

/// Writes <stem>.graphml and <stem>_edges.csv. Throws InputError when a file
/// cannot be opened.
void export_graph(const PartialCorrelationNetwork& net, const CommunityAssignment& communities,
                  const std::filesystem::path& stem);

}  // namespace tvar
