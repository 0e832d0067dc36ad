#include "tvar/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "tvar/error.hpp"

namespace tvar {

namespace {

template <typename Fn>
Matrix average(const PosteriorDraws& d, Fn&& f) {
  if (d.empty()) throw InputError("posterior mean of an empty set of draws");
  Matrix acc = f(d.states.front());
  for (std::size_t s = 1; s < d.size(); ++s) acc += f(d.states[s]);
  return acc / static_cast<double>(d.size());
}

nlohmann::json to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw InputError(std::string("draw record: ") + name + " has the wrong number of rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(std::string("draw record: ") + name + " has the wrong number of columns");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

Matrix PosteriorDraws::mean_A() const { return average(*this, [](const ModelState& s) { return s.A(); }); }
Matrix PosteriorDraws::mean_B() const { return average(*this, [](const ModelState& s) { return s.B(); }); }
Matrix PosteriorDraws::mean_Sigma_A() const { return average(*this, [](const ModelState& s) { return s.Sigma_A; }); }
Matrix PosteriorDraws::mean_Sigma_B() const { return average(*this, [](const ModelState& s) { return s.Sigma_B; }); }
Matrix PosteriorDraws::mean_kron() const {
  return average(*this, [](const ModelState& s) { return kron(s.B(), s.A()); });
}

std::vector<double> PosteriorDraws::trace(const std::function<double(const ModelState&)>& f) const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(f(s));
  return out;
}

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = acov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);

  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (acov(2 * m) + acov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);  // initial monotone sequence
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

std::vector<TraceSummary> trace_summaries(const PosteriorDraws& draws) {
  std::vector<std::pair<std::string, std::vector<double>>> traces;
  traces.emplace_back("log_det_Sigma_A",
                      draws.trace([](const ModelState& s) { return log_det_spd(s.Sigma_A, "Sigma_A"); }));
  traces.emplace_back("log_det_Sigma_B",
                      draws.trace([](const ModelState& s) { return log_det_spd(s.Sigma_B, "Sigma_B"); }));
  traces.emplace_back("norm_A", draws.trace([](const ModelState& s) { return s.A().norm(); }));
  traces.emplace_back("norm_B", draws.trace([](const ModelState& s) { return s.B().norm(); }));
  traces.emplace_back("spectral_radius", draws.spectral_radius);

  std::vector<TraceSummary> out;
  for (auto& [name, v] : traces) {
    TraceSummary t;
    t.name = name;
    if (!v.empty()) {
      const double n = static_cast<double>(v.size());
      t.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
      double ss = 0.0;
      for (double x : v) ss += (x - t.mean) * (x - t.mean);
      t.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      t.ess = effective_sample_size(v);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_draws_jsonl(const PosteriorDraws& draws, std::ostream& out) {
  for (std::size_t s = 0; s < draws.size(); ++s) {
    const ModelState& st = draws.states[s];
    nlohmann::json j;
    j["draw"] = s;
    j["dims"] = {{"K", draws.dims.K}, {"Q", draws.dims.Q}, {"R_A", draws.dims.R_A}, {"R_B", draws.dims.R_B}};
    j["L_A"] = to_json(st.L_A);
    j["Z_A"] = to_json(st.Z_A);
    j["L_B"] = to_json(st.L_B);
    j["Z_B"] = to_json(st.Z_B);
    j["Sigma_A"] = to_json(st.Sigma_A);
    j["Sigma_B"] = to_json(st.Sigma_B);
    if (s < draws.spectral_radius.size()) j["spectral_radius"] = draws.spectral_radius[s];
    out << j.dump() << '\n';
  }
}

PosteriorDraws read_draws_jsonl(std::istream& in) {
  PosteriorDraws d;
  std::string line;
  std::size_t lineno = 0;
  bool have_dims = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ModelDims dims{j.at("dims").at("K").get<Eigen::Index>(), j.at("dims").at("Q").get<Eigen::Index>(),
                     j.at("dims").at("R_A").get<Eigen::Index>(), j.at("dims").at("R_B").get<Eigen::Index>()};
      dims.validate();
      if (!have_dims) {
        d.dims = dims;
        have_dims = true;
      } else if (!(dims == d.dims)) {
        throw InputError("dimensions differ from the first draw");
      }
      ModelState s;
      s.L_A = from_json(j.at("L_A"), dims.K, dims.R_A, "L_A");
      s.Z_A = from_json(j.at("Z_A"), dims.R_A, dims.K, "Z_A");
      s.L_B = from_json(j.at("L_B"), dims.Q, dims.R_B, "L_B");
      s.Z_B = from_json(j.at("Z_B"), dims.R_B, dims.Q, "Z_B");
      s.Sigma_A = from_json(j.at("Sigma_A"), dims.K, dims.K, "Sigma_A");
      s.Sigma_B = from_json(j.at("Sigma_B"), dims.Q, dims.Q, "Sigma_B");
      d.spectral_radius.push_back(j.contains("spectral_radius")
                                      ? j["spectral_radius"].get<double>()
                                      : spectral_radius(s.A()) * spectral_radius(s.B()));
      d.states.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("draws line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("draws line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return d;
}

}  // namespace tvar
