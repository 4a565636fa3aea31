#pragma once

#include "rgeom/kernels.hpp"

namespace rgeom {

/// Low-rank factor F (n x r) of a symmetric PSD matrix with F F^T ~= C, by
/// diagonally pivoted Cholesky. Pivoting stops once the largest remaining
/// diagonal falls below rel_tol * max(diag C); a zero matrix gives r = 0.
/// Throws NumericalError when a diagonal entry is negative beyond
/// -1e-9 * max(diag C).
Matrix pivoted_cholesky(const Matrix& C, double rel_tol = 1e-12);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& S);

}  // namespace rgeom
