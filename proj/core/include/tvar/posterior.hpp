#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tvar/model.hpp"

namespace tvar {

/// Retained states of one chain, in sampling order. Immutable once the chain
/// has finished, so it can be shared across threads.
struct PosteriorDraws {
  ModelDims dims;
  std::vector<ModelState> states;
  std::vector<double> spectral_radius;  ///< of B (x) A, one per draw

  bool empty() const { return states.empty(); }
  std::size_t size() const { return states.size(); }

  Matrix mean_A() const;
  Matrix mean_B() const;
  Matrix mean_Sigma_A() const;
  Matrix mean_Sigma_B() const;
  /// Posterior mean of B (x) A (dimension KQ x KQ; meant for small models).
  Matrix mean_kron() const;

  std::vector<double> trace(const std::function<double(const ModelState&)>& f) const;
};

/// Effective sample size of a scalar trace using Geyer's initial positive
/// sequence estimator.
double effective_sample_size(std::span<const double> trace);

struct TraceSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
};

/// Summaries of scalar functionals of the chain: log|Sigma_A|, log|Sigma_B|,
/// ||A||_F, ||B||_F and the spectral radius of B (x) A.
std::vector<TraceSummary> trace_summaries(const PosteriorDraws& draws);

/// One JSON document per line, one line per retained draw.
void write_draws_jsonl(const PosteriorDraws& draws, std::ostream& out);
PosteriorDraws read_draws_jsonl(std::istream& in);

}  // namespace tvar
