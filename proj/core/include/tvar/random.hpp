#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace tvar {

/// Mixes a master seed with stream identifiers into an independent seed.
/// Used to split one user-facing seed into per-chain / per-window streams
/// so results do not depend on execution order or thread count.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream);

/// Single pseudo-random stream. Every sampler routine takes one by reference
/// and consumes it in a fixed, documented order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Gamma with the given shape and unit scale.
  double gamma(double shape);
  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  /// rows x cols matrix of independent standard normals, filled column-major.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd normal_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace tvar
