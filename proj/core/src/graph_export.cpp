#include "tvar/graph_export.hpp"

#include <fstream>
#include <map>
#include <ostream>

#include "tvar/csv.hpp"
#include "tvar/error.hpp"
#include "tvar/format.hpp"

namespace tvar {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write " + p.string());
  return f;
}

}  // namespace

void write_graphml(const PartialCorrelationNetwork& net, const CommunityAssignment& communities, std::ostream& out) {
  const Eigen::Index n = net.size();
  if (static_cast<Eigen::Index>(communities.community.size()) != n)
    throw InputError("graphml: community assignment does not match the network");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
      << "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"int\"/>\n"
      << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
      << "  <key id=\"significant\" for=\"edge\" attr.name=\"significant\" attr.type=\"boolean\"/>\n"
      << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
  for (Eigen::Index i = 0; i < n; ++i)
    out << "    <node id=\"n" << i << "\"><data key=\"label\">" << xml_escape(net.nodes[i])
        << "</data><data key=\"community\">" << communities.community[i] << "</data></node>\n";
  std::size_t e = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (net.weights(i, j) == 0.0) continue;
      out << "    <edge id=\"e" << e++ << "\" source=\"n" << i << "\" target=\"n" << j << "\"><data key=\"weight\">"
          << format_double(net.weights(i, j)) << "</data><data key=\"significant\">"
          << (net.significant(i, j) ? "true" : "false") << "</data></edge>\n";
    }
  out << "  </graph>\n</graphml>\n";
}

void write_edge_csv(const PartialCorrelationNetwork& net, std::ostream& out) {
  out << "source,target,weight,significant\n";
  for (Eigen::Index i = 0; i < net.size(); ++i)
    for (Eigen::Index j = i + 1; j < net.size(); ++j) {
      if (net.weights(i, j) == 0.0) continue;
      out << csv_escape(net.nodes[i]) << ',' << csv_escape(net.nodes[j]) << ',' << format_double(net.weights(i, j))
          << ',' << (net.significant(i, j) ? "true" : "false") << '\n';
    }
}

EdgeList read_edge_csv(std::istream& in, const std::vector<std::string>& nodes) {
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = static_cast<Eigen::Index>(i);
  const auto n = static_cast<Eigen::Index>(nodes.size());
  EdgeList el;
  el.weights = Matrix::Identity(n, n);
  el.significant = BoolMatrix::Constant(n, n, false);

  CsvReader reader(in);
  std::vector<std::string> f;
  if (!reader.next(f) || f.size() < 4 || f[0] != "source" || f[1] != "target" || f[2] != "weight")
    throw InputError("edge list: expected header source,target,weight,significant");
  while (reader.next(f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    const std::string where = "edge list line " + std::to_string(reader.line());
    if (f.size() != 4) throw InputError(where + ": expected 4 fields");
    const auto a = index.find(f[0]), b = index.find(f[1]);
    if (a == index.end() || b == index.end()) throw InputError(where + ": unknown node");
    double w = 0.0;
    try {
      w = std::stod(f[2]);
    } catch (const std::logic_error&) {
      throw InputError(where + ": bad weight");
    }
    if (f[3] != "true" && f[3] != "false") throw InputError(where + ": significant must be true or false");
    el.weights(a->second, b->second) = el.weights(b->second, a->second) = w;
    el.significant(a->second, b->second) = el.significant(b->second, a->second) = f[3] == "true";
  }
  return el;
}

void export_graph(const PartialCorrelationNetwork& net, const CommunityAssignment& communities,
                  const std::filesystem::path& stem) {
  auto graphml = open_out(std::filesystem::path(stem.string() + ".graphml"));
  write_graphml(net, communities, graphml);
  auto edges = open_out(std::filesystem::path(stem.string() + "_edges.csv"));
  write_edge_csv(net, edges);
  if (!graphml || !edges) throw InputError("failed writing graph files for " + stem.string());
}

}  // namespace tvar
