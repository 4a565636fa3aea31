#include <cmath>

#include "rgeom/error.hpp"
#include "rgeom/mc.hpp"
#include "rgeom/rng.hpp"

namespace rgeom::mc {

namespace {

void check_problem(const PathLengthProblem& problem, int samples, bool antithetic) {
  detail::require(samples >= 2, "monte carlo: need at least 2 samples");
  detail::require(!antithetic || samples % 2 == 0,
                  "monte carlo: antithetic sampling needs an even sample count");
  detail::require(problem.factor.rows() == problem.mean.rows() &&
                      problem.weights.size() == problem.mean.rows(),
                  "monte carlo: node counts disagree");
  if (problem.taylor_centers != nullptr) {
    detail::require(problem.taylor_centers->rows() == problem.mean.rows() &&
                        problem.taylor_centers->cols() ==
                            static_cast<Eigen::Index>(problem.n_list.size()),
                    "monte carlo: taylor centers must be nodes x slices");
  }
  Eigen::Index prev = 0;
  for (auto n : problem.n_list) {
    detail::require(n > prev && n <= problem.mean.cols(),
                    "monte carlo: n_list must be ascending within [1, m]");
    prev = n;
  }
}

// Writes int sqrt(1/n sum_{i<n} P(k,i)^2) dt for each n of the list.
template <typename Row>
void integrate_slices(const Matrix& P, const PathLengthProblem& problem, Vector& acc,
                      Row&& out) {
  acc.setZero(P.rows());
  Eigen::Index i = 0;
  for (std::size_t j = 0; j < problem.n_list.size(); ++j) {
    const Eigen::Index n = problem.n_list[j];
    for (; i < n; ++i) acc.array() += P.col(i).array().square();
    const double inv_n = 1.0 / static_cast<double>(n);
    if (problem.taylor_centers == nullptr) {
      out(static_cast<Eigen::Index>(j)) =
          (acc.array() * inv_n).sqrt().matrix().dot(problem.weights);
    } else {
      const auto centers = problem.taylor_centers->col(static_cast<Eigen::Index>(j));
      double total = 0.0;
      for (Eigen::Index k = 0; k < acc.size(); ++k) {
        const double m = centers[k];
        if (m == 0.0) continue;
        const double w2 = acc[k] * inv_n;
        total += problem.weights[k] * (std::sqrt(w2) - taylor_sqrt_scaled(w2, m));
      }
      out(static_cast<Eigen::Index>(j)) = total;
    }
  }
}

void draw_normals(Rng& rng, Matrix& Z) {
  for (Eigen::Index i = 0; i < Z.cols(); ++i)
    for (Eigen::Index r = 0; r < Z.rows(); ++r) Z(r, i) = rng.normal();
}

}  // namespace

Matrix path_lengths(const PathLengthProblem& problem, int samples, std::uint64_t seed,
                    bool antithetic) {
  check_problem(problem, samples, antithetic);
  const Eigen::Index n_max = problem.n_list.empty() ? 0 : problem.n_list.back();
  const auto nodes = problem.mean.rows();
  const auto rank = problem.factor.cols();
  const int draws = antithetic ? samples / 2 : samples;
  Matrix out(samples, static_cast<Eigen::Index>(problem.n_list.size()));
  const Matrix mean = problem.mean.leftCols(n_max);

#pragma omp parallel
  {
    Matrix Z(rank, n_max);
    Matrix FZ(nodes, n_max);
    Matrix P(nodes, n_max);
    Vector acc(nodes);
#pragma omp for schedule(static)
    for (int p = 0; p < draws; ++p) {
      Rng rng(seed, static_cast<std::uint64_t>(p));
      draw_normals(rng, Z);
      FZ.noalias() = problem.factor * Z;
      const Eigen::Index row = antithetic ? 2 * p : p;
      P = mean + FZ;
      integrate_slices(P, problem, acc, out.row(row));
      if (antithetic) {
        P = mean - FZ;
        integrate_slices(P, problem, acc, out.row(row + 1));
      }
    }
  }
  return out;
}

Vector norm_squares(Family family, Eigen::Index n, int samples, std::uint64_t seed) {
  detail::require(n >= 1, "norm_squares: n must be >= 1");
  detail::require(samples >= 1, "norm_squares: samples must be >= 1");
  Vector out(samples);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double root3 = std::sqrt(3.0);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < samples; ++s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double x = 1.0;
      if (family == Family::Gaussian) x = rng.normal();
      else if (family == Family::Uniform) x = root3 * (2.0 * rng.uniform() - 1.0);
      sum += x * x;
    }
    out[s] = sum * inv_n;
  }
  return out;
}

}  // namespace rgeom::mc
