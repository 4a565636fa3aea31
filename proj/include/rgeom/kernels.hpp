#pragma once

#include <Eigen/Dense>

#include <string>

namespace rgeom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class KernelFamily { RBF, Linear };

/// Prior covariance family with its hyperparameters.
///
/// RBF:    K(p,q) = variance * exp(-|p-q|^2 / (2 length_scale^2))
/// Linear: K(p,q) = p^T q           (variance and length_scale unused)
struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double variance = 1.0;
  double length_scale = 1.0;

  static KernelSpec rbf(double variance, double length_scale);
  static KernelSpec linear();

  /// Throws InputError unless the hyperparameters are admissible.
  void validate() const;
};

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

double eval_kernel(const KernelSpec& spec, const Vector& p, const Vector& q);

/// Gradient of K(p,q) in its first argument.
Vector kernel_grad_p(const KernelSpec& spec, const Vector& p, const Vector& q);

/// Entry (a,b) is d^2 K(p,q) / dp_a dq_b.
Matrix kernel_cross_hessian(const KernelSpec& spec, const Vector& p,
                            const Vector& q);

/// K(A,B) for column-stacked point sets.
Matrix gram(const KernelSpec& spec, const Matrix& A, const Matrix& B);

/// Symmetric gram K(A,A); the upper triangle is mirrored so the result is
/// exactly symmetric.
Matrix gram(const KernelSpec& spec, const Matrix& A);

}  // namespace rgeom
