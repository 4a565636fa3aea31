#include <cmath>
#include <vector>

#include "rgeom/error.hpp"
#include "rgeom/mc.hpp"
#include "rgeom/rng.hpp"

namespace rgeom::mc::reference {

Matrix path_lengths(const PathLengthProblem& problem, int samples, std::uint64_t seed,
                    bool antithetic) {
  detail::require(samples >= 2, "monte carlo: need at least 2 samples");
  detail::require(!antithetic || samples % 2 == 0,
                  "monte carlo: antithetic sampling needs an even sample count");
  const Eigen::Index n_max = problem.n_list.empty() ? 0 : problem.n_list.back();
  const auto nodes = problem.mean.rows();
  const auto rank = problem.factor.cols();
  const int draws = antithetic ? samples / 2 : samples;
  const std::size_t slices = problem.n_list.size();
  Matrix out(samples, static_cast<Eigen::Index>(slices));

  std::vector<double> z(static_cast<std::size_t>(rank * n_max));
  for (int p = 0; p < draws; ++p) {
    Rng rng(seed, static_cast<std::uint64_t>(p));
    for (Eigen::Index i = 0; i < n_max; ++i)
      for (Eigen::Index r = 0; r < rank; ++r) z[i * rank + r] = rng.normal();

    for (int sign : {1, -1}) {
      if (sign < 0 && !antithetic) break;
      const Eigen::Index row = antithetic ? 2 * p + (sign < 0 ? 1 : 0) : p;
      std::vector<double> totals(slices, 0.0);
      for (Eigen::Index k = 0; k < nodes; ++k) {
        double acc = 0.0;
        Eigen::Index i = 0;
        for (std::size_t j = 0; j < slices; ++j) {
          const Eigen::Index n = problem.n_list[j];
          for (; i < n; ++i) {
            double noise = 0.0;
            for (Eigen::Index r = 0; r < rank; ++r) noise += problem.factor(k, r) * z[i * rank + r];
            const double v = problem.mean(k, i) + sign * noise;
            acc += v * v;
          }
          const double w2 = acc / static_cast<double>(n);
          double value = std::sqrt(w2);
          if (problem.taylor_centers != nullptr) {
            const double m = (*problem.taylor_centers)(k, static_cast<Eigen::Index>(j));
            value = m == 0.0 ? 0.0 : value - taylor_sqrt_scaled(w2, m);
          }
          totals[j] += problem.weights[k] * value;
        }
      }
      for (std::size_t j = 0; j < slices; ++j) out(row, static_cast<Eigen::Index>(j)) = totals[j];
    }
  }
  return out;
}

Vector norm_squares(Family family, Eigen::Index n, int samples, std::uint64_t seed) {
  detail::require(n >= 1, "norm_squares: n must be >= 1");
  detail::require(samples >= 1, "norm_squares: samples must be >= 1");
  Vector out(samples);
  for (int s = 0; s < samples; ++s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double x = 1.0;
      if (family == Family::Gaussian) x = rng.normal();
      else if (family == Family::Uniform) x = std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
      sum += x * x;
    }
    out[s] = sum / static_cast<double>(n);
  }
  return out;
}

}  // namespace rgeom::mc::reference
