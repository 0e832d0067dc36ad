#include "tvar/community.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "tvar/csv.hpp"
#include "tvar/error.hpp"
#include "tvar/format.hpp"

namespace tvar {

namespace {

Matrix graph_of(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw InputError("community detection: weight matrix is not square");
  Matrix g = symmetrize(weights.cwiseAbs());
  g.diagonal().setZero();
  return g;
}

std::vector<int> relabel(const std::vector<int>& c) {
  std::map<int, int> ids;
  std::vector<int> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto [it, fresh] = ids.try_emplace(c[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  return out;
}

double modularity_of(const Matrix& g, const std::vector<int>& c) {
  const double m2 = g.sum();
  if (!(m2 > 0.0)) return 0.0;
  const int nc = *std::max_element(c.begin(), c.end()) + 1;
  std::vector<double> in(nc, 0.0), tot(nc, 0.0);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    tot[c[i]] += g.row(i).sum();
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      if (c[i] == c[j]) in[c[i]] += g(i, j);
  }
  double q = 0.0;
  for (int k = 0; k < nc; ++k) q += in[k] / m2 - (tot[k] / m2) * (tot[k] / m2);
  return q;
}

// One local-moving phase on graph g (self-loops allowed). Returns true if any node moved.
bool local_moves(const Matrix& g, std::vector<int>& comm, std::mt19937_64& rng) {
  const Eigen::Index n = g.rows();
  const double m2 = g.sum();
  const Vector k = g.rowwise().sum();
  std::vector<double> tot(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) tot[comm[i]] += k(i);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  bool moved_any = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (Eigen::Index i : order) {
      const int own = comm[i];
      std::map<int, double> links;  // community -> weight from i, excluding self-loop
      links[own] += 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i && g(i, j) != 0.0) links[comm[j]] += g(i, j);
      tot[own] -= k(i);
      auto gain = [&](int c) { return links[c] - tot[c] * k(i) / m2; };
      int best = own;
      double best_gain = gain(own);
      for (const auto& [c, w] : links) {
        const double gc = gain(c);
        if (gc > best_gain + 1e-12) {
          best = c;
          best_gain = gc;
        }
      }
      tot[best] += k(i);
      if (best != own) {
        comm[i] = best;
        moved = true;
        moved_any = true;
      }
    }
  }
  return moved_any;
}

}  // namespace

int CommunityAssignment::count() const {
  return community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
}

double modularity(const Matrix& weights, const std::vector<int>& community) {
  if (static_cast<Eigen::Index>(community.size()) != weights.rows())
    throw InputError("modularity: assignment size does not match the graph");
  return modularity_of(graph_of(weights), relabel(community));
}

CommunityAssignment detect_communities(const Matrix& weights, std::uint64_t seed) {
  const Matrix g0 = graph_of(weights);
  const Eigen::Index n = g0.rows();
  if (n < 2) throw InputError("community detection needs at least two nodes");

  CommunityAssignment out;
  out.community.assign(static_cast<std::size_t>(n), 0);
  if (!(g0.sum() > 0.0)) return out;

  std::mt19937_64 rng(seed);
  std::vector<int> node_comm(static_cast<std::size_t>(n));
  std::iota(node_comm.begin(), node_comm.end(), 0);
  Matrix g = g0;
  while (true) {
    std::vector<int> comm(static_cast<std::size_t>(g.rows()));
    std::iota(comm.begin(), comm.end(), 0);
    if (!local_moves(g, comm, rng)) break;
    comm = relabel(comm);
    const int nc = *std::max_element(comm.begin(), comm.end()) + 1;
    for (auto& c : node_comm) c = comm[static_cast<std::size_t>(c)];
    Matrix agg = Matrix::Zero(nc, nc);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) agg(comm[i], comm[j]) += g(i, j);
    g = std::move(agg);
    if (nc == 1) break;
  }
  out.community = relabel(node_comm);
  out.modularity = modularity_of(g0, out.community);
  return out;
}

CommunityAssignment detect_communities(const PartialCorrelationNetwork& net, std::uint64_t seed) {
  return detect_communities(net.weights, seed);
}

void write_communities_csv(const CommunityAssignment& c, const std::vector<std::string>& nodes, std::ostream& out) {
  if (nodes.size() != c.community.size()) throw InputError("communities: label count mismatch");
  out << "node,community\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) out << csv_escape(nodes[i]) << ',' << c.community[i] << '\n';
}

}  // namespace tvar
