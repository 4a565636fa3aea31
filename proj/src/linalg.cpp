#include "rgeom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rgeom/error.hpp"

namespace rgeom {

Matrix pivoted_cholesky(const Matrix& C, double rel_tol) {
  detail::require(C.rows() == C.cols(), "pivoted_cholesky: matrix not square");
  const auto n = C.rows();
  if (n == 0) return Matrix(0, 0);
  Vector diag = C.diagonal();
  const double scale = diag.cwiseAbs().maxCoeff();
  if (scale == 0.0) return Matrix(n, 0);
  if (diag.minCoeff() < -1e-9 * scale) {
    throw NumericalError("pivoted_cholesky: negative variance " +
                         std::to_string(diag.minCoeff()));
  }

  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Matrix F = Matrix::Zero(n, n);
  Eigen::Index rank = 0;
  for (; rank < n; ++rank) {
    // Largest remaining diagonal; ties resolved by lowest index.
    Eigen::Index best = rank;
    for (Eigen::Index i = rank + 1; i < n; ++i)
      if (diag[perm[i]] > diag[perm[best]]) best = i;
    const double pivot = diag[perm[best]];
    if (!(pivot > rel_tol * scale)) break;
    std::swap(perm[rank], perm[best]);
    const Eigen::Index p = perm[rank];
    const double root = std::sqrt(pivot);
    F(p, rank) = root;
    for (Eigen::Index i = rank + 1; i < n; ++i) {
      const Eigen::Index r = perm[i];
      double v = C(r, p);
      for (Eigen::Index k = 0; k < rank; ++k) v -= F(r, k) * F(p, k);
      F(r, rank) = v / root;
      diag[r] -= F(r, rank) * F(r, rank);
    }
  }
  return F.leftCols(rank);
}

double min_eigenvalue(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  return eig.eigenvalues()[0];
}

}  // namespace rgeom
