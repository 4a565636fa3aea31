#include "rgeom/gp.hpp"

#include <cmath>
#include <sstream>

#include "rgeom/error.hpp"

namespace rgeom {

void Dataset::validate() const {
  detail::require(Y.rows() >= 1, "dataset: ambient dimension must be >= 1");
  detail::require(Y.cols() >= 2, "dataset: need at least 2 observations");
  detail::require(Y.allFinite(), "dataset: non-finite entries");
}

Matrix factor_with_jitter(const Matrix& K, double noise, double* jitter_used) {
  const auto n = K.rows();
  double scale = n > 0 ? K.diagonal().mean() : 1.0;
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;

  Matrix R = K;
  R.diagonal().array() += noise;
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * scale;
    Matrix Rj = R;
    Rj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(Rj);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
      if (jitter_used) *jitter_used = jitter;
      return llt.matrixL();
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(R, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << "cholesky failed after jitter escalation to 1e-6; min eigenvalue "
         "estimate "
      << (eig.info() == Eigen::Success ? eig.eigenvalues().minCoeff()
                                       : std::nan(""));
  throw NumericalError(msg.str());
}

PosteriorGP::PosteriorGP(KernelSpec spec, Matrix X, Matrix Y, double noise)
    : spec_(spec), X_(std::move(X)), Y_(std::move(Y)), noise_(noise) {
  spec_.validate();
  detail::require(X_.rows() >= 1, "posterior: latent dimension must be >= 1");
  detail::require(X_.cols() >= 1, "posterior: need at least one training point");
  detail::require(X_.cols() == Y_.cols(),
                  "posterior: X and Y have different numbers of columns");
  detail::require(std::isfinite(noise_) && noise_ >= 0.0,
                  "posterior: noise variance must be nonnegative");
  detail::require(X_.allFinite() && Y_.allFinite(),
                  "posterior: non-finite training data");

  L_ = factor_with_jitter(gram(spec_, X_), noise_, &jitter_);
  alpha_ = L_.triangularView<Eigen::Lower>().solve(Y_.transpose());
  L_.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha_);
}

Matrix PosteriorGP::regularized_gram() const {
  Matrix R = gram(spec_, X_);
  R.diagonal().array() += noise_ + jitter_;
  return R;
}

void PosteriorGP::check_point(const Vector& p) const {
  detail::require(p.size() == X_.rows(),
                  "posterior: query has dimension " + std::to_string(p.size()) +
                      ", latent dimension is " + std::to_string(X_.rows()));
}

Vector PosteriorGP::whitened_kernel(const Vector& p) const {
  Vector k(num_points());
  for (Eigen::Index j = 0; j < num_points(); ++j) {
    k[j] = eval_kernel(spec_, X_.col(j), p);
  }
  L_.triangularView<Eigen::Lower>().solveInPlace(k);
  return k;
}

Matrix PosteriorGP::kernel_gradients(const Vector& p) const {
  check_point(p);
  Matrix D(num_points(), latent_dim());
  for (Eigen::Index j = 0; j < num_points(); ++j) {
    D.row(j) = kernel_grad_p(spec_, p, X_.col(j)).transpose();
  }
  return D;
}

Matrix PosteriorGP::whitened_gradients(const Vector& p) const {
  Matrix D = kernel_gradients(p);
  L_.triangularView<Eigen::Lower>().solveInPlace(D);
  return D;
}

Vector PosteriorGP::mean(const Vector& p) const {
  check_point(p);
  Vector k(num_points());
  for (Eigen::Index j = 0; j < num_points(); ++j) {
    k[j] = eval_kernel(spec_, X_.col(j), p);
  }
  return alpha_.transpose() * k;
}

double PosteriorGP::cov(const Vector& p, const Vector& q) const {
  check_point(p);
  check_point(q);
  const double prior = eval_kernel(spec_, p, q);
  const Vector vp = whitened_kernel(p);
  const Vector vq = whitened_kernel(q);
  // Elementwise products commute, so the sum is bitwise symmetric in (p, q).
  double correction = 0.0;
  for (Eigen::Index j = 0; j < vp.size(); ++j) correction += vp[j] * vq[j];
  double k = prior - correction;
  if (k < 0.0 && p == q) k = 0.0;
  return k;
}

Matrix PosteriorGP::mean_jacobian(const Vector& p) const {
  return alpha_.transpose() * kernel_gradients(p);
}

Matrix PosteriorGP::grad_cov(const Vector& p, const Vector& q) const {
  check_point(p);
  check_point(q);
  Matrix g = kernel_cross_hessian(spec_, p, q);
  if (p == q) {
    const Matrix Wp = whitened_gradients(p);
    g.noalias() -= Wp.transpose() * Wp;
    g = 0.5 * (g + g.transpose()).eval();
  } else {
    g.noalias() -= whitened_gradients(p).transpose() * whitened_gradients(q);
  }
  return g;
}

PosteriorGP make_posterior(const KernelSpec& spec, const Matrix& X,
                           const Matrix& Y, double noise) {
  return PosteriorGP(spec, X, Y, noise);
}

Vector posterior_mean(const PosteriorGP& post, const Vector& p) {
  return post.mean(p);
}

double posterior_cov(const PosteriorGP& post, const Vector& p, const Vector& q) {
  return post.cov(p, q);
}

Matrix posterior_mean_jacobian(const PosteriorGP& post, const Vector& p) {
  return post.mean_jacobian(p);
}

Matrix posterior_grad_cov(const PosteriorGP& post, const Vector& p,
                          const Vector& q) {
  return post.grad_cov(p, q);
}

}  // namespace rgeom
