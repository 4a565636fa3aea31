#pragma once

#include <cstdint>
#include <vector>

#include "rgeom/kernels.hpp"

namespace rgeom {

/// Observations stored as columns: Y is m x N.
struct Dataset {
  Matrix Y;

  Eigen::Index ambient_dim() const { return Y.rows(); }
  Eigen::Index size() const { return Y.cols(); }
  void validate() const;
};

/// Posterior of a symmetric (independent outputs, shared kernel) zero-mean GP
/// conditioned on (X, Y) with observation noise `noise`.
///
///   mu(p)   = Y R^{-T} K(X,p)
///   k(p,q)  = K(p,q) - K(p,X) R^{-1} K(X,q),     R = K(X,X) + noise I
///
/// k is the covariance of the latent function; the noise enters only through R.
/// Immutable after construction.
class PosteriorGP {
 public:
  PosteriorGP(KernelSpec spec, Matrix X, Matrix Y, double noise);

  const KernelSpec& spec() const { return spec_; }
  const Matrix& latents() const { return X_; }
  const Matrix& data() const { return Y_; }
  double noise() const { return noise_; }
  /// Diagonal jitter that was needed on top of `noise` to factor R.
  double jitter() const { return jitter_; }

  Eigen::Index latent_dim() const { return X_.rows(); }
  Eigen::Index num_points() const { return X_.cols(); }
  Eigen::Index output_dim() const { return Y_.rows(); }

  /// Lower Cholesky factor of R (jitter included).
  const Matrix& chol_lower() const { return L_; }
  /// R^{-1} Y^T, N x m.
  const Matrix& alpha() const { return alpha_; }
  /// R with the jitter that was actually factored.
  Matrix regularized_gram() const;

  Vector mean(const Vector& p) const;
  double cov(const Vector& p, const Vector& q) const;
  Matrix mean_jacobian(const Vector& p) const;
  Matrix grad_cov(const Vector& p, const Vector& q) const;

  /// Rows are dK(x_j, p)/dp, N x d.
  Matrix kernel_gradients(const Vector& p) const;
  /// L^{-1} kernel_gradients(p); the data correction of grad_cov is
  /// whitened_gradients(p)^T whitened_gradients(q).
  Matrix whitened_gradients(const Vector& p) const;

 private:
  void check_point(const Vector& p) const;
  Vector whitened_kernel(const Vector& p) const;

  KernelSpec spec_;
  Matrix X_;
  Matrix Y_;
  double noise_;
  double jitter_ = 0.0;
  Matrix L_;
  Matrix alpha_;
};

/// Factors K + noise*I with the jitter ladder 1e-10, 1e-9, ..., 1e-6 (times
/// mean diagonal of K). Returns the lower factor and writes the jitter used.
/// Throws NumericalError with a minimum-eigenvalue estimate when every rung
/// fails.
Matrix factor_with_jitter(const Matrix& K, double noise, double* jitter_used);

PosteriorGP make_posterior(const KernelSpec& spec, const Matrix& X,
                           const Matrix& Y, double noise);

Vector posterior_mean(const PosteriorGP& post, const Vector& p);
double posterior_cov(const PosteriorGP& post, const Vector& p, const Vector& q);
Matrix posterior_mean_jacobian(const PosteriorGP& post, const Vector& p);
Matrix posterior_grad_cov(const PosteriorGP& post, const Vector& p,
                          const Vector& q);

struct FitConfig {
  int latent_dim = 2;
  int max_iters = 500;
  double step_tolerance = 1e-9;
  std::uint64_t seed = 0;
  bool optimize_hyperparams = true;
  KernelFamily family = KernelFamily::RBF;
  /// Initial observation noise; negative selects 1e-2 * mean(Y^2).
  double initial_noise = -1.0;
  bool optimize_noise = true;
};

struct FitResult {
  Matrix X;
  KernelSpec spec;
  double noise = 0.0;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  /// Log marginal likelihood after each accepted step (first entry is the
  /// initialization).
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

/// Sum over output dimensions of the GP log marginal likelihood with a
/// shared kernel:
///   -1/2 tr(Y R^{-1} Y^T) - m/2 log det R - mN/2 log(2 pi)
double log_marginal_likelihood(const KernelSpec& spec, const Matrix& X,
                               const Matrix& Y, double noise);

/// PCA initialization (centered data, top latent_dim components, unit
/// variance per latent coordinate). Directions with no variance are filled
/// with tiny seeded noise.
Matrix pca_init(const Matrix& Y, int latent_dim, std::uint64_t seed);

/// GPLVM maximum-likelihood fit: latent points plus log-hyperparameters,
/// limited-memory quasi-Newton ascent with backtracking. Monotone in the
/// likelihood and deterministic for a fixed seed.
FitResult fit_gplvm(const Dataset& data, const FitConfig& config);

}  // namespace rgeom
