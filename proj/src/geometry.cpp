#include "rgeom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rgeom/error.hpp"
#include "rgeom/linalg.hpp"

namespace rgeom {

// --- MetricField -----------------------------------------------------------

MetricField MetricField::from_posterior(std::shared_ptr<const PosteriorGP> post) {
  detail::require(post != nullptr, "metric: null posterior");
  const auto d = post->latent_dim();
  return MetricField(FromPosterior{std::move(post)}, d);
}

MetricField MetricField::constant(Matrix M0) {
  detail::require(M0.rows() == M0.cols() && M0.rows() >= 1,
                  "metric: constant metric must be square");
  const auto d = M0.rows();
  return MetricField(Constant{std::move(M0)}, d);
}

MetricField MetricField::callable(Fn fn, Eigen::Index dim) {
  detail::require(static_cast<bool>(fn), "metric: empty callable");
  detail::require(dim >= 1, "metric: dimension must be >= 1");
  return MetricField(Callable{std::move(fn)}, dim);
}

Matrix MetricField::operator()(const Vector& z) const {
  detail::require(z.size() == dim_, "metric: point of dimension " +
                                        std::to_string(z.size()) + ", expected " +
                                        std::to_string(dim_));
  struct Visitor {
    const Vector& z;
    Matrix operator()(const FromPosterior& f) const { return expected_metric(*f.post, z); }
    Matrix operator()(const Constant& c) const { return c.M0; }
    Matrix operator()(const Callable& c) const { return c.fn(z); }
  };
  return std::visit(Visitor{z}, impl_);
}

// --- DiscreteCurve ---------------------------------------------------------

Vector DiscreteCurve::velocity(Eigen::Index k) const {
  return (points.col(k + 1) - points.col(k)) / (params[k + 1] - params[k]);
}

Vector DiscreteCurve::midpoint(Eigen::Index k) const {
  return 0.5 * (points.col(k) + points.col(k + 1));
}

void DiscreteCurve::validate() const {
  detail::require(points.cols() >= 2, "curve: need at least two nodes");
  detail::require(points.rows() >= 1, "curve: points must have dimension >= 1");
  detail::require(params.size() == points.cols(),
                  "curve: parameter count differs from node count");
  detail::require(points.allFinite() && params.allFinite(), "curve: non-finite values");
  for (Eigen::Index k = 0; k + 1 < params.size(); ++k) {
    detail::require(params[k] < params[k + 1], "curve: parameters must be strictly increasing");
  }
}

DiscreteCurve DiscreteCurve::straight(const Vector& za, const Vector& zb,
                                      Eigen::Index segments, double a, double b) {
  detail::require(segments >= 1, "curve: need at least one segment");
  detail::require(za.size() == zb.size(), "curve: endpoint dimension mismatch");
  detail::require(a < b, "curve: empty parameter interval");
  DiscreteCurve c;
  c.params.resize(segments + 1);
  c.points.resize(za.size(), segments + 1);
  for (Eigen::Index k = 0; k <= segments; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(segments);
    c.params[k] = k == segments ? b : a + s * (b - a);
    c.points.col(k) = k == segments ? zb : Vector((1.0 - s) * za + s * zb);
  }
  return c;
}

// --- expected / sampled metric ----------------------------------------------

Matrix expected_metric(const PosteriorGP& post, const Vector& p) {
  const Matrix J = post.mean_jacobian(p);
  Matrix M = J.transpose() * J;
  M.noalias() += static_cast<double>(post.output_dim()) * post.grad_cov(p, p);
  return 0.5 * (M + M.transpose());
}

Matrix sample_metric(const PosteriorGP& post, const Vector& p, Rng& rng) {
  const Matrix mean = post.mean_jacobian(p);
  const Matrix F = pivoted_cholesky(post.grad_cov(p, p));
  Matrix J = mean;
  if (F.cols() > 0) {
    Matrix Z(mean.rows(), F.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      for (Eigen::Index r = 0; r < Z.cols(); ++r) Z(i, r) = rng.normal();
    J.noalias() += Z * F.transpose();
  }
  return J.transpose() * J;
}

// --- length / energy ---------------------------------------------------------

namespace {

double quadratic_form(const Matrix& M, const Vector& v) {
  const double q = v.dot(M * v);
  if (q >= 0.0) return q;
  const double scale = M.diagonal().cwiseAbs().sum() * v.squaredNorm();
  if (q < -1e-9 * scale) {
    throw NumericalError("metric is not positive semi-definite: quadratic form " +
                         std::to_string(q));
  }
  return 0.0;
}

}  // namespace

Vector segment_speeds(const MetricField& metric, const DiscreteCurve& curve) {
  curve.validate();
  Vector speeds(curve.num_segments());
  for (Eigen::Index k = 0; k < curve.num_segments(); ++k) {
    const Vector v = curve.velocity(k);
    speeds[k] = std::sqrt(quadratic_form(metric(curve.midpoint(k)), v));
  }
  return speeds;
}

double curve_length(const MetricField& metric, const DiscreteCurve& curve) {
  const Vector speeds = segment_speeds(metric, curve);
  double length = 0.0;
  for (Eigen::Index k = 0; k < speeds.size(); ++k)
    length += speeds[k] * (curve.params[k + 1] - curve.params[k]);
  return length;
}

double curve_energy(const MetricField& metric, const DiscreteCurve& curve) {
  curve.validate();
  double energy = 0.0;
  for (Eigen::Index k = 0; k < curve.num_segments(); ++k) {
    const Vector v = curve.velocity(k);
    energy += 0.5 * quadratic_form(metric(curve.midpoint(k)), v) *
              (curve.params[k + 1] - curve.params[k]);
  }
  return energy;
}

double speed_cov(const MetricField& metric, const DiscreteCurve& curve) {
  const Vector s = segment_speeds(metric, curve);
  const double mean = s.mean();
  if (mean == 0.0) return 0.0;
  const double var = (s.array() - mean).square().mean();
  return std::sqrt(var) / mean;
}

// --- reparametrization --------------------------------------------------------

namespace {

// Point at polyline coordinate u in [0, K] (node k sits at u = k).
Vector polyline_point(const Matrix& pts, double u) {
  const auto segs = pts.cols() - 1;
  if (u <= 0.0) return pts.col(0);
  if (u >= static_cast<double>(segs)) return pts.col(segs);
  const auto k = static_cast<Eigen::Index>(std::floor(u));
  const double s = u - static_cast<double>(k);
  if (s == 0.0) return pts.col(k);
  return (1.0 - s) * pts.col(k) + s * pts.col(k + 1);
}

// Inverts a nondecreasing piecewise-linear map knots -> values at `target`.
double invert_cumulative(const Vector& cumulative, const Vector& coords, double target) {
  const auto n = cumulative.size();
  if (target <= cumulative[0]) return coords[0];
  if (target >= cumulative[n - 1]) return coords[n - 1];
  const auto* begin = cumulative.data();
  const auto* it = std::upper_bound(begin, begin + n, target);
  const auto hi = static_cast<Eigen::Index>(it - begin);
  const auto lo = hi - 1;
  const double span = cumulative[hi] - cumulative[lo];
  const double s = span > 0.0 ? (target - cumulative[lo]) / span : 0.0;
  return coords[lo] + s * (coords[hi] - coords[lo]);
}

Vector cumulative_of(const Vector& segment_lengths) {
  Vector c(segment_lengths.size() + 1);
  c[0] = 0.0;
  for (Eigen::Index k = 0; k < segment_lengths.size(); ++k) c[k + 1] = c[k] + segment_lengths[k];
  return c;
}

Vector metric_segment_lengths(const MetricField& metric, const Matrix& pts) {
  Vector lengths(pts.cols() - 1);
  for (Eigen::Index k = 0; k + 1 < pts.cols(); ++k) {
    const Vector dz = pts.col(k + 1) - pts.col(k);
    lengths[k] = std::sqrt(quadratic_form(metric(0.5 * (pts.col(k) + pts.col(k + 1))), dz));
  }
  return lengths;
}

}  // namespace

DiscreteCurve reparametrize_constant_speed(const MetricField& metric,
                                           const DiscreteCurve& curve) {
  curve.validate();
  const auto segs = curve.num_segments();
  const Vector old_lengths = metric_segment_lengths(metric, curve.points);
  const double total = old_lengths.sum();
  if (!(total > 0.0)) throw InputError("reparametrize: curve has zero length");

  Vector node_coords(segs + 1);
  for (Eigen::Index k = 0; k <= segs; ++k) node_coords[k] = static_cast<double>(k);

  // Start from arc-length inversion along the old nodes, then re-equalize the
  // midpoint-rule lengths of the new chords.
  Vector u(segs + 1);
  {
    const Vector cum = cumulative_of(old_lengths);
    for (Eigen::Index j = 0; j <= segs; ++j)
      u[j] = invert_cumulative(cum, node_coords,
                               total * static_cast<double>(j) / static_cast<double>(segs));
  }
  Matrix pts(curve.dim(), segs + 1);
  for (int iter = 0; iter < 100; ++iter) {
    for (Eigen::Index j = 0; j <= segs; ++j) pts.col(j) = polyline_point(curve.points, u[j]);
    const Vector lengths = metric_segment_lengths(metric, pts);
    const double mean = lengths.mean();
    if (!(mean > 0.0)) break;
    if ((lengths.array() / mean - 1.0).abs().maxCoeff() < 1e-12) break;
    const Vector cum = cumulative_of(lengths);
    Vector next(segs + 1);
    for (Eigen::Index j = 0; j <= segs; ++j)
      next[j] = invert_cumulative(cum, u,
                                  cum[segs] * static_cast<double>(j) / static_cast<double>(segs));
    u = next;
  }
  for (Eigen::Index j = 0; j <= segs; ++j) pts.col(j) = polyline_point(curve.points, u[j]);

  DiscreteCurve out;
  out.points = std::move(pts);
  out.params.resize(segs + 1);
  const double a = curve.a();
  const double b = curve.b();
  for (Eigen::Index j = 0; j <= segs; ++j)
    out.params[j] = j == segs ? b
                              : a + (b - a) * static_cast<double>(j) / static_cast<double>(segs);
  return out;
}

// --- volume ---------------------------------------------------------------------

double volume_integral(const MetricField& metric,
                       const std::function<double(const Vector&)>& h,
                       const Box& box, const std::vector<int>& resolution) {
  const auto d = metric.dim();
  detail::require(d <= 3, "volume_integral: grid quadrature supports d <= 3");
  detail::require(box.lower.size() == d && box.upper.size() == d,
                  "volume_integral: box dimension mismatch");
  detail::require(static_cast<Eigen::Index>(resolution.size()) == d,
                  "volume_integral: one resolution per axis required");
  Vector cell(d);
  double cell_volume = 1.0;
  std::size_t total = 1;
  for (Eigen::Index a = 0; a < d; ++a) {
    detail::require(resolution[a] >= 1, "volume_integral: resolution must be >= 1");
    detail::require(box.lower[a] < box.upper[a], "volume_integral: empty box");
    cell[a] = (box.upper[a] - box.lower[a]) / resolution[a];
    cell_volume *= cell[a];
    total *= static_cast<std::size_t>(resolution[a]);
  }

  double sum = 0.0;
  std::vector<int> idx(d, 0);
  Vector z(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (Eigen::Index a = 0; a < d; ++a) z[a] = box.lower[a] + (idx[a] + 0.5) * cell[a];
    const Matrix M = metric(z);
    double det = M.determinant();
    if (det < 0.0) {
      const double scale = std::pow(M.diagonal().cwiseAbs().maxCoeff(), static_cast<double>(d));
      if (det < -1e-12 * std::max(scale, 1.0)) {
        throw NumericalError("volume_integral: negative metric determinant " + std::to_string(det));
      }
      det = 0.0;
    }
    sum += h(z) * std::sqrt(det);
    for (Eigen::Index a = 0; a < d; ++a) {
      if (++idx[a] < resolution[a]) break;
      idx[a] = 0;
    }
  }
  return sum * cell_volume;
}

// --- swirl --------------------------------------------------------------------------

namespace {
Vector rotate2(const Vector& z, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Vector r(2);
  r[0] = c * z[0] - s * z[1];
  r[1] = s * z[0] + c * z[1];
  return r;
}
}  // namespace

Vector swirl(const Vector& z) {
  detail::require(z.size() == 2, "swirl: defined on R^2 only");
  return rotate2(z, std::sin(std::numbers::pi * z.norm()));
}

Vector swirl_inverse(const Vector& z) {
  detail::require(z.size() == 2, "swirl_inverse: defined on R^2 only");
  // The rotation preserves the norm, so the angle is recoverable from z.
  return rotate2(z, -std::sin(std::numbers::pi * z.norm()));
}

}  // namespace rgeom
