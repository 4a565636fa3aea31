#include "rgeom/kernels.hpp"

#include <cmath>

#include "rgeom/error.hpp"

namespace rgeom {

namespace {

void check_same_dim(const Vector& p, const Vector& q) {
  detail::require(p.size() >= 1, "kernel: points must have dimension >= 1");
  detail::require(p.size() == q.size(),
                  "kernel: dimension mismatch (" + std::to_string(p.size()) +
                      " vs " + std::to_string(q.size()) + ")");
}

// Squared distance from the difference vector; nonnegative by construction
// and bitwise symmetric in (p, q).
double squared_distance(const Vector& p, const Vector& q) {
  double s = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    const double diff = p[a] - q[a];
    s += diff * diff;
  }
  return s;
}

}  // namespace

KernelSpec KernelSpec::rbf(double variance, double length_scale) {
  KernelSpec spec{KernelFamily::RBF, variance, length_scale};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::linear() { return KernelSpec{KernelFamily::Linear, 1.0, 1.0}; }

void KernelSpec::validate() const {
  if (family == KernelFamily::RBF) {
    detail::require(std::isfinite(variance) && variance > 0.0,
                    "rbf kernel: variance must be positive");
    detail::require(std::isfinite(length_scale) && length_scale > 0.0,
                    "rbf kernel: length_scale must be positive");
  }
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::RBF ? "rbf" : "linear";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "rbf" || name == "RBF") return KernelFamily::RBF;
  if (name == "linear" || name == "Linear") return KernelFamily::Linear;
  throw InputError("unknown kernel family '" + name + "'");
}

double eval_kernel(const KernelSpec& spec, const Vector& p, const Vector& q) {
  check_same_dim(p, q);
  switch (spec.family) {
    case KernelFamily::RBF: {
      const double l2 = spec.length_scale * spec.length_scale;
      return spec.variance * std::exp(-0.5 * squared_distance(p, q) / l2);
    }
    case KernelFamily::Linear:
      return p.dot(q);
  }
  return 0.0;
}

Vector kernel_grad_p(const KernelSpec& spec, const Vector& p, const Vector& q) {
  check_same_dim(p, q);
  switch (spec.family) {
    case KernelFamily::RBF: {
      const double l2 = spec.length_scale * spec.length_scale;
      const double k = eval_kernel(spec, p, q);
      return (-k / l2) * (p - q);
    }
    case KernelFamily::Linear:
      return q;
  }
  return Vector::Zero(p.size());
}

Matrix kernel_cross_hessian(const KernelSpec& spec, const Vector& p,
                            const Vector& q) {
  check_same_dim(p, q);
  const auto d = p.size();
  switch (spec.family) {
    case KernelFamily::RBF: {
      // K * (I / l^2 - (p-q)(p-q)^T / l^4)
      const double l2 = spec.length_scale * spec.length_scale;
      const double k = eval_kernel(spec, p, q);
      const Vector diff = p - q;
      Matrix h = Matrix::Identity(d, d) * (k / l2);
      h.noalias() -= (k / (l2 * l2)) * diff * diff.transpose();
      return h;
    }
    case KernelFamily::Linear:
      return Matrix::Identity(d, d);
  }
  return Matrix::Zero(d, d);
}

Matrix gram(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  detail::require(A.rows() == B.rows(), "gram: point sets differ in dimension");
  Matrix g(A.cols(), B.cols());
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    const Vector b = B.col(j);
    for (Eigen::Index i = 0; i < A.cols(); ++i) {
      g(i, j) = eval_kernel(spec, A.col(i), b);
    }
  }
  return g;
}

Matrix gram(const KernelSpec& spec, const Matrix& A) {
  const auto n = A.cols();
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vector a = A.col(j);
    for (Eigen::Index i = 0; i <= j; ++i) {
      g(i, j) = eval_kernel(spec, A.col(i), a);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

}  // namespace rgeom
