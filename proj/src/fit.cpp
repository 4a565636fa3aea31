#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "rgeom/error.hpp"
#include "rgeom/gp.hpp"
#include "rgeom/rng.hpp"

namespace rgeom {

double log_marginal_likelihood(const KernelSpec& spec, const Matrix& X,
                               const Matrix& Y, double noise) {
  detail::require(X.cols() == Y.cols(), "likelihood: X and Y column mismatch");
  const double m = static_cast<double>(Y.rows());
  const double n = static_cast<double>(Y.cols());
  const Matrix L = factor_with_jitter(gram(spec, X), noise, nullptr);
  const Matrix V = L.triangularView<Eigen::Lower>().solve(Y.transpose());
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * V.squaredNorm() - 0.5 * m * log_det -
         0.5 * m * n * std::log(2.0 * std::numbers::pi);
}

Matrix pca_init(const Matrix& Y, int latent_dim, std::uint64_t seed) {
  const auto n = Y.cols();
  const Matrix centered = Y.colwise() - Y.rowwise().mean();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("pca: svd failed");

  const Vector& values = svd.singularValues();  // descending
  const double top = values.size() > 0 ? values[0] : 0.0;
  Rng rng(seed, 0x9ca);
  Matrix X(latent_dim, n);
  for (int k = 0; k < latent_dim; ++k) {
    if (k < values.size() && top > 0.0 && values[k] > 1e-6 * top) {
      Vector v = svd.matrixV().col(k);
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v[imax] < 0.0) v = -v;
      // Unit eigenvectors have sum of squares 1, so sqrt(N) gives unit variance.
      X.row(k) = std::sqrt(static_cast<double>(n)) * v.transpose();
    } else {
      for (Eigen::Index j = 0; j < n; ++j) X(k, j) = 1e-5 * rng.normal();
    }
  }
  return X;
}

namespace {

bool has_duplicate_columns(const Matrix& Y) {
  for (Eigen::Index i = 0; i < Y.cols(); ++i)
    for (Eigen::Index j = i + 1; j < Y.cols(); ++j)
      if (Y.col(i) == Y.col(j)) return true;
  return false;
}

// Packs latent points and log-hyperparameters into one vector.
struct Layout {
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  KernelFamily family = KernelFamily::RBF;
  bool kernel_params = false;
  bool noise_param = false;

  Eigen::Index size() const {
    return d * n + (kernel_params ? 2 : 0) + (noise_param ? 1 : 0);
  }

  Vector pack(const Matrix& X, const KernelSpec& spec, double noise) const {
    Vector theta(size());
    theta.head(d * n) = Eigen::Map<const Vector>(X.data(), d * n);
    Eigen::Index k = d * n;
    if (kernel_params) {
      theta[k++] = std::log(spec.variance);
      theta[k++] = std::log(spec.length_scale);
    }
    if (noise_param) theta[k++] = std::log(noise);
    return theta;
  }

  void unpack(const Vector& theta, Matrix& X, KernelSpec& spec,
              double& noise) const {
    X = Eigen::Map<const Matrix>(theta.data(), d, n);
    Eigen::Index k = d * n;
    if (kernel_params) {
      spec.variance = std::exp(theta[k++]);
      spec.length_scale = std::exp(theta[k++]);
    }
    if (noise_param) noise = std::exp(theta[k++]);
  }
};

struct Objective {
  const Matrix& Y;
  Layout layout;
  KernelSpec base_spec;
  double base_noise;

  // Log likelihood and its gradient; -inf when R cannot be factored.
  double operator()(const Vector& theta, Vector* grad) const {
    Matrix X;
    KernelSpec spec = base_spec;
    double noise = base_noise;
    layout.unpack(theta, X, spec, noise);
    if (!X.allFinite() || !std::isfinite(noise) ||
        (spec.family == KernelFamily::RBF &&
         !(spec.variance > 0.0 && std::isfinite(spec.variance) &&
           spec.length_scale > 1e-8 && std::isfinite(spec.length_scale)))) {
      return -std::numeric_limits<double>::infinity();
    }

    const double m = static_cast<double>(Y.rows());
    const auto n = X.cols();
    const Matrix K = gram(spec, X);
    Matrix L;
    try {
      L = factor_with_jitter(K, noise, nullptr);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
    const auto tri = L.triangularView<Eigen::Lower>();
    Matrix alpha = tri.solve(Y.transpose());
    const double quad = alpha.squaredNorm();
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const double value = -0.5 * quad - 0.5 * m * log_det -
                         0.5 * m * static_cast<double>(n) *
                             std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(value)) return -std::numeric_limits<double>::infinity();
    if (grad == nullptr) return value;

    Matrix Rinv = tri.solve(Matrix::Identity(n, n));
    Rinv = (Rinv.transpose() * Rinv).eval();
    // dL/dR = W (symmetric)
    const Matrix W = 0.5 * (alpha * alpha.transpose() - m * Rinv);

    grad->resize(layout.size());
    Matrix GX(X.rows(), n);
    if (spec.family == KernelFamily::RBF) {
      const double l2 = spec.length_scale * spec.length_scale;
      const Matrix WK = W.cwiseProduct(K);
      const Vector s = WK.colwise().sum().transpose();
      GX = (-2.0 / l2) * (X * s.asDiagonal() - X * WK);
    } else {
      GX = 2.0 * X * W;
    }
    grad->head(X.size()) = Eigen::Map<const Vector>(GX.data(), GX.size());
    Eigen::Index k = X.size();
    if (layout.kernel_params) {
      const double l2 = spec.length_scale * spec.length_scale;
      double g_var = 0.0;
      double g_len = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double wk = W(i, j) * K(i, j);
          g_var += wk;
          g_len += wk * (X.col(i) - X.col(j)).squaredNorm() / l2;
        }
      }
      (*grad)[k++] = g_var;
      (*grad)[k++] = g_len;
    }
    if (layout.noise_param) (*grad)[k++] = noise * W.trace();
    return value;
  }
};

}  // namespace

FitResult fit_gplvm(const Dataset& data, const FitConfig& config) {
  data.validate();
  const Matrix& Y = data.Y;
  const auto m = Y.rows();
  const auto n = Y.cols();
  detail::require(config.latent_dim >= 1, "fit: latent_dim must be >= 1");
  detail::require(config.latent_dim <= std::min(m, n),
                  "fit: latent_dim " + std::to_string(config.latent_dim) +
                      " exceeds min(m, N) = " + std::to_string(std::min(m, n)));
  detail::require(config.max_iters >= 1, "fit: max_iters must be >= 1");
  detail::require(config.step_tolerance > 0.0, "fit: step_tolerance must be positive");

  const double power = std::max(Y.squaredNorm() / static_cast<double>(Y.size()), 1e-12);
  double noise = config.initial_noise < 0.0 ? 1e-2 * power : config.initial_noise;
  detail::require(std::isfinite(noise), "fit: initial noise must be finite");
  const bool noise_free = noise == 0.0;
  if (noise_free && has_duplicate_columns(Y)) {
    throw InputError(
        "fit: duplicate observations make R(X) singular without noise; use a "
        "positive noise variance");
  }

  KernelSpec spec = config.family == KernelFamily::RBF
                        ? KernelSpec::rbf(power, std::sqrt(static_cast<double>(config.latent_dim)))
                        : KernelSpec::linear();

  Layout layout;
  layout.d = config.latent_dim;
  layout.n = n;
  layout.family = config.family;
  layout.kernel_params = config.family == KernelFamily::RBF && config.optimize_hyperparams;
  layout.noise_param = config.optimize_noise && !noise_free;

  const Objective objective{Y, layout, spec, noise};
  Vector theta = layout.pack(pca_init(Y, config.latent_dim, config.seed), spec, noise);

  FitResult result;
  Vector grad;
  double value = objective(theta, &grad);
  if (!std::isfinite(value)) {
    throw NumericalError("fit: likelihood not finite at initialization");
  }
  result.initial_log_likelihood = value;
  result.trace.push_back(value);

  // L-BFGS on the negative log likelihood.
  constexpr std::size_t kMemory = 10;
  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  Vector neg_grad = -grad;

  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    Vector direction = -neg_grad;
    if (!s_hist.empty()) {
      std::vector<double> a(s_hist.size());
      Vector q = neg_grad;
      for (std::size_t i = s_hist.size(); i-- > 0;) {
        const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
        a[i] = rho * s_hist[i].dot(q);
        q -= a[i] * y_hist[i];
      }
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
        const double b = rho * y_hist[i].dot(q);
        q += (a[i] - b) * s_hist[i];
      }
      direction = -q;
    }
    double slope = neg_grad.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      direction = -neg_grad;
      slope = neg_grad.dot(direction);
    }
    if (slope == 0.0) {
      result.converged = true;
      break;
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / direction.norm()) : 1.0;
    bool accepted = false;
    Vector trial;
    Vector trial_grad;
    double trial_value = value;
    for (int ls = 0; ls < 50; ++ls) {
      trial = theta + step * direction;
      trial_value = objective(trial, &trial_grad);
      // Armijo on -L: -L(trial) <= -L(theta) + c1 * step * slope
      if (std::isfinite(trial_value) && -trial_value <= -value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        continue;
      }
      result.converged = true;  // no ascent direction left
      break;
    }

    const Vector s = trial - theta;
    const Vector y = (-trial_grad) - neg_grad;
    if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (s_hist.size() > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    const double change = std::abs(trial_value - value) / std::max(1.0, std::abs(value));
    theta = trial;
    value = trial_value;
    neg_grad = -trial_grad;
    result.trace.push_back(value);
    if (change < config.step_tolerance) {
      result.converged = true;
      ++iter;
      break;
    }
  }

  layout.unpack(theta, result.X, spec, noise);
  result.spec = spec;
  result.noise = noise;
  result.log_likelihood = value;
  result.iterations = iter;
  return result;
}

}  // namespace rgeom
