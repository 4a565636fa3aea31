#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "rgeom/gp.hpp"
#include "rgeom/rng.hpp"

namespace rgeom {

/// A field of symmetric PSD d x d matrices over latent space.
class MetricField {
 public:
  using Fn = std::function<Matrix(const Vector&)>;

  /// Expected metric of a GP posterior.
  static MetricField from_posterior(std::shared_ptr<const PosteriorGP> post);
  static MetricField constant(Matrix M0);
  static MetricField callable(Fn fn, Eigen::Index dim);

  Matrix operator()(const Vector& z) const;
  Eigen::Index dim() const { return dim_; }

 private:
  struct FromPosterior {
    std::shared_ptr<const PosteriorGP> post;
  };
  struct Constant {
    Matrix M0;
  };
  struct Callable {
    Fn fn;
  };

  MetricField(std::variant<FromPosterior, Constant, Callable> v, Eigen::Index dim)
      : impl_(std::move(v)), dim_(dim) {}

  std::variant<FromPosterior, Constant, Callable> impl_;
  Eigen::Index dim_;
};

/// Polyline in latent space: parameters t_0 < ... < t_K and one point per
/// parameter (columns of `points`).
struct DiscreteCurve {
  Vector params;
  Matrix points;

  Eigen::Index dim() const { return points.rows(); }
  Eigen::Index num_nodes() const { return points.cols(); }
  Eigen::Index num_segments() const { return points.cols() - 1; }
  double a() const { return params[0]; }
  double b() const { return params[params.size() - 1]; }

  Vector velocity(Eigen::Index k) const;
  Vector midpoint(Eigen::Index k) const;

  void validate() const;

  /// Uniform straight line from za to zb on [a, b].
  static DiscreteCurve straight(const Vector& za, const Vector& zb,
                                Eigen::Index segments, double a = 0.0,
                                double b = 1.0);
};

/// E(J^T J) = J_mu^T J_mu + m * posterior_grad_cov(p, p).
Matrix expected_metric(const PosteriorGP& post, const Vector& p);

/// One draw of J^T J: rows of J are independent Gaussians sharing the
/// covariance posterior_grad_cov(p, p) around the rows of J_mu(p).
Matrix sample_metric(const PosteriorGP& post, const Vector& p, Rng& rng);

/// Composite midpoint rule for  int sqrt(c'^T M c') dt.
double curve_length(const MetricField& metric, const DiscreteCurve& curve);
/// Composite midpoint rule for  1/2 int c'^T M c' dt.
double curve_energy(const MetricField& metric, const DiscreteCurve& curve);
/// Per-segment metric speeds sqrt(v_k^T M(zbar_k) v_k).
Vector segment_speeds(const MetricField& metric, const DiscreteCurve& curve);
/// Coefficient of variation (std / mean) of segment_speeds; 0 for a
/// zero-length curve.
double speed_cov(const MetricField& metric, const DiscreteCurve& curve);

struct GeodesicConfig {
  Eigen::Index nodes = 64;  // segments of the initial straight line
  int max_iters = 2000;
  double tolerance = 1e-10;
  int window = 100;
  double fd_step = 1e-5;
};

struct GeodesicResult {
  DiscreteCurve curve;
  bool converged = false;
  int iterations = 0;
  double energy = 0.0;
  double length = 0.0;
  double speed_cov = 0.0;
};

/// Minimizes the discrete curve energy over interior nodes with the
/// endpoints pinned, starting from the straight line on [0, 1].
GeodesicResult geodesic(const MetricField& metric, const Vector& za,
                        const Vector& zb, const GeodesicConfig& cfg = {});

/// Moves nodes along the polyline so that every segment has the same metric
/// length, with uniform parameters on the original [a, b].
DiscreteCurve reparametrize_constant_speed(const MetricField& metric,
                                           const DiscreteCurve& curve);

struct Box {
  Vector lower;
  Vector upper;
};

/// Midpoint-rule approximation of  int_box h(z) sqrt(det M(z)) dz  for d <= 3.
double volume_integral(const MetricField& metric,
                       const std::function<double(const Vector&)>& h,
                       const Box& box, const std::vector<int>& resolution);

/// Rotation of z by the angle sin(pi |z|).
Vector swirl(const Vector& z);
Vector swirl_inverse(const Vector& z);

}  // namespace rgeom
