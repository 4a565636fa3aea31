#pragma once

// Monte Carlo kernels. The rgeom::mc versions run replicates in parallel with
// OpenMP; rgeom::mc::reference holds straightforward serial versions of the
// same computations, kept for testing and benchmarking. Replicate r always
// draws from substream r of the seed, so both produce the same samples.

#include <cstdint>
#include <span>

#include "rgeom/kernels.hpp"

namespace rgeom::mc {

/// Inputs of the path-length kernel. mean is (K+1) x n_max (column i holds
/// output i's mean velocities), factor is (K+1) x r with factor*factor^T the
/// node covariance, weights are trapezoid weights over nodes.
struct PathLengthProblem {
  const Matrix& mean;
  const Matrix& factor;
  const Vector& weights;
  std::span<const Eigen::Index> n_list;  // ascending, each <= mean.cols()
  /// Optional (K+1) x n_list.size() expansion points m_n(t_k). When set,
  /// each node contributes w - m P(w^2/m^2) instead of w, where P is the
  /// cubic Taylor polynomial of sqrt around 1 (nodes with m = 0 contribute 0).
  const Matrix* taylor_centers = nullptr;
};

/// m P(x/m^2) with P the cubic Taylor polynomial of sqrt around 1.
inline double taylor_sqrt_scaled(double x, double m) {
  const double d = x / (m * m) - 1.0;
  return m * (1.0 + d * (0.5 + d * (-0.125 + 0.0625 * d)));
}

/// samples x n_list.size(): entry (s, j) is int ||phi_{n_j}'|| dt for draw s.
/// With antithetic sampling, rows 2p and 2p+1 are a reflected pair and
/// `samples` must be even.
Matrix path_lengths(const PathLengthProblem& problem, int samples, std::uint64_t seed,
                    bool antithetic);

enum class Family { Gaussian, Uniform, Deterministic };

/// samples values of w_n^2 = |X|^2 / n for iid components of `family`.
Vector norm_squares(Family family, Eigen::Index n, int samples, std::uint64_t seed);

namespace reference {
Matrix path_lengths(const PathLengthProblem& problem, int samples, std::uint64_t seed,
                    bool antithetic);
Vector norm_squares(Family family, Eigen::Index n, int samples, std::uint64_t seed);
}  // namespace reference

}  // namespace rgeom::mc
