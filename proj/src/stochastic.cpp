#include "rgeom/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgeom/error.hpp"
#include "rgeom/linalg.hpp"
#include "rgeom/mc.hpp"

namespace rgeom {

void CurveProcess::validate() const {
  const auto k = nodes.size();
  detail::require(k >= 2, "curve process: need at least two nodes");
  detail::require(mean_velocities.cols() == k, "curve process: mean velocities need one column per node");
  detail::require(mean_velocities.rows() >= 1, "curve process: no output dimensions");
  detail::require(node_cov.rows() == k && node_cov.cols() == k,
                  "curve process: node covariance must be (K+1) x (K+1)");
  for (Eigen::Index i = 0; i + 1 < k; ++i)
    detail::require(nodes[i] < nodes[i + 1], "curve process: nodes must be increasing");
}

CurveProcess CurveProcess::with_variance_scale(double factor) const {
  detail::require(factor >= 0.0 && std::isfinite(factor), "variance scale must be >= 0");
  CurveProcess out = *this;
  out.node_cov *= factor;
  return out;
}

CurveProcess restrict_to_curve(const PosteriorGP& post, const DiscreteCurve& curve,
                               Eigen::Index nodes) {
  curve.validate();
  detail::require(nodes >= 2, "restrict_to_curve: need at least 2 nodes");
  detail::require(curve.dim() == post.latent_dim(),
                  "restrict_to_curve: curve dimension differs from latent dimension");
  double extent = 0.0;
  for (Eigen::Index k = 0; k + 1 < curve.num_nodes(); ++k)
    extent += (curve.points.col(k + 1) - curve.points.col(k)).norm();
  detail::require(extent > 0.0, "restrict_to_curve: curve has zero length");

  const auto d = curve.dim();
  const double a = curve.a();
  const double b = curve.b();
  const double ds = 1.0 / static_cast<double>(nodes - 1);

  CurveProcess cp;
  cp.nodes.resize(nodes);
  Matrix pos(d, nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    const double s = k == nodes - 1 ? 1.0 : static_cast<double>(k) * ds;
    cp.nodes[k] = s;
    const double t = k == nodes - 1 ? b : a + s * (b - a);
    const double* begin = curve.params.data();
    auto seg = static_cast<Eigen::Index>(
        std::upper_bound(begin, begin + curve.params.size(), t) - begin) - 1;
    seg = std::clamp<Eigen::Index>(seg, 0, curve.num_segments() - 1);
    const double w = (t - curve.params[seg]) / (curve.params[seg + 1] - curve.params[seg]);
    pos.col(k) = (1.0 - w) * curve.points.col(seg) + w * curve.points.col(seg + 1);
  }
  Matrix vel(d, nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    if (k == 0) vel.col(k) = (pos.col(1) - pos.col(0)) / ds;
    else if (k == nodes - 1) vel.col(k) = (pos.col(k) - pos.col(k - 1)) / ds;
    else vel.col(k) = (pos.col(k + 1) - pos.col(k - 1)) / (2.0 * ds);
  }

  // Directional kernel gradients D_k v_k and their whitened versions.
  const auto N = post.num_points();
  Matrix directional(N, nodes);
  Matrix whitened(N, nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    directional.col(k) = post.kernel_gradients(pos.col(k)) * vel.col(k);
  }
  whitened = post.chol_lower().triangularView<Eigen::Lower>().solve(directional);

  cp.mean_velocities = post.alpha().transpose() * directional;
  const Matrix correction = whitened.transpose() * whitened;
  cp.node_cov.resize(nodes, nodes);
  for (Eigen::Index j = 0; j < nodes; ++j) {
    for (Eigen::Index k = j; k < nodes; ++k) {
      const double prior =
          vel.col(j).dot(kernel_cross_hessian(post.spec(), pos.col(j), pos.col(k)) * vel.col(k));
      double c = prior - correction(j, k);
      if (j == k && c < 0.0) c = 0.0;
      cp.node_cov(j, k) = c;
      cp.node_cov(k, j) = c;
    }
  }
  return cp;
}

namespace {

void check_slice(const CurveProcess& cp, Eigen::Index n) {
  detail::require(n >= 1 && n <= cp.output_dim(),
                  "slice size n=" + std::to_string(n) + " outside [1, " +
                      std::to_string(cp.output_dim()) + "]");
}

// 1/n sum_{i<n} mu_i'(t_k)^2, accumulated in output order.
Vector mean_square_speed(const CurveProcess& cp, Eigen::Index n) {
  Vector acc = Vector::Zero(cp.num_nodes());
  for (Eigen::Index i = 0; i < n; ++i)
    acc.array() += cp.mean_velocities.row(i).transpose().array().square();
  const double inv_n = 1.0 / static_cast<double>(n);
  return acc * inv_n;
}

// Node variances, with round-off negatives clamped.
Vector node_variances(const CurveProcess& cp) {
  return cp.node_cov.diagonal().cwiseMax(0.0);
}

// Shifted mean: exact when all values coincide.
double stable_mean(const Eigen::Ref<const Vector>& x) {
  const double x0 = x[0];
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] - x0;
  return x0 + s / static_cast<double>(x.size());
}

double standard_error(const Eigen::Ref<const Vector>& x) {
  const double mean = stable_mean(x);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) ss += (x[i] - mean) * (x[i] - mean);
  const double n = static_cast<double>(x.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

Vector trapezoid_weights(const Vector& nodes) {
  const auto k = nodes.size();
  Vector w = Vector::Zero(k);
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    const double h = 0.5 * (nodes[i + 1] - nodes[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

Vector m_n_profile(const CurveProcess& cp, Eigen::Index n) {
  cp.validate();
  check_slice(cp, n);
  return (node_variances(cp) + mean_square_speed(cp, n)).array().sqrt();
}

Vector sigma_n_profile(const CurveProcess& cp, Eigen::Index n) {
  cp.validate();
  check_slice(cp, n);
  const Vector var = node_variances(cp);
  const Vector a = mean_square_speed(cp, n);
  return (2.0 * var.array().square() + 4.0 * var.array() * a.array()).sqrt();
}

Vector taylor_expectation_profile(const CurveProcess& cp, Eigen::Index n) {
  cp.validate();
  check_slice(cp, n);
  const Vector var = node_variances(cp);
  const Vector a = mean_square_speed(cp, n);
  const double nn = static_cast<double>(n);
  Vector out(cp.num_nodes());
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double m = std::sqrt(var[k] + a[k]);
    if (m == 0.0) {
      out[k] = 0.0;
      continue;
    }
    const double s2 = var[k];
    const double v2 = (2.0 * s2 * s2 + 4.0 * s2 * a[k]) / nn;
    const double m3 = (8.0 * s2 * s2 * s2 + 24.0 * s2 * s2 * a[k]) / (nn * nn);
    const double m2 = m * m;
    out[k] = m - v2 / (8.0 * m2 * m) + m3 / (16.0 * m2 * m2 * m);
  }
  return out;
}

double length_expected_metric(const CurveProcess& cp, Eigen::Index n) {
  const Vector m = m_n_profile(cp, n);
  return m.dot(trapezoid_weights(cp.nodes));
}

std::vector<LengthEstimate> expected_lengths_mc(const CurveProcess& cp,
                                                std::span<const Eigen::Index> n_list,
                                                const MonteCarloOptions& opts) {
  cp.validate();
  detail::require(!n_list.empty(), "expected_length_mc: empty n list");
  for (auto n : n_list) check_slice(cp, n);
  detail::require(opts.samples >= 2, "expected_length_mc: need at least 2 samples");

  std::vector<Eigen::Index> sorted(n_list.begin(), n_list.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const Matrix factor = pivoted_cholesky(cp.node_cov);
  const Matrix mean = cp.mean_velocities.topRows(sorted.back()).transpose();
  const Vector weights = trapezoid_weights(cp.nodes);
  Matrix centers;
  Vector offsets = Vector::Zero(static_cast<Eigen::Index>(sorted.size()));
  if (opts.control_variate) {
    centers.resize(cp.num_nodes(), static_cast<Eigen::Index>(sorted.size()));
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      centers.col(c) = m_n_profile(cp, sorted[j]);
      offsets[c] = taylor_expectation_profile(cp, sorted[j]).dot(weights);
    }
  }
  mc::PathLengthProblem problem{mean, factor, weights, sorted};
  if (opts.control_variate) problem.taylor_centers = &centers;
  const Matrix lengths = mc::path_lengths(problem, opts.samples, opts.seed, opts.antithetic);

  std::vector<LengthEstimate> out;
  out.reserve(n_list.size());
  for (auto n : n_list) {
    const auto col = static_cast<Eigen::Index>(
        std::lower_bound(sorted.begin(), sorted.end(), n) - sorted.begin());
    const Vector x = lengths.col(col);
    LengthEstimate est;
    est.mean = stable_mean(x) + offsets[col];
    if (opts.antithetic) {
      const Eigen::Index pairs = x.size() / 2;
      Vector pair_means(pairs);
      for (Eigen::Index p = 0; p < pairs; ++p) pair_means[p] = 0.5 * (x[2 * p] + x[2 * p + 1]);
      est.std_err = pairs >= 2 ? standard_error(pair_means) : 0.0;
    } else {
      est.std_err = standard_error(x);
    }
    est.samples = opts.samples;
    est.seed = opts.seed;
    out.push_back(est);
  }
  return out;
}

LengthEstimate expected_length_mc(const CurveProcess& cp, Eigen::Index n,
                                  const MonteCarloOptions& opts) {
  const Eigen::Index list[] = {n};
  return expected_lengths_mc(cp, list, opts).front();
}

BoundReport bound_report(const CurveProcess& cp, std::span<const Eigen::Index> n_list,
                         const MonteCarloOptions& opts) {
  cp.validate();
  detail::require(!n_list.empty(), "bound_report: empty n list");
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    check_slice(cp, n_list[j]);
    detail::require(j == 0 || n_list[j] > n_list[j - 1], "bound_report: n list must be ascending");
  }

  BoundReport report;
  double sigma_max = 0.0;
  double m_min = std::numeric_limits<double>::infinity();
  for (auto n : n_list) {
    const Vector m = m_n_profile(cp, n);
    Eigen::Index at = 0;
    const double lo = m.minCoeff(&at);
    if (!(lo >= 1e-6)) {
      throw PreconditionError("bound_report: m_n not bounded away from 0 (m_n = " +
                              std::to_string(lo) + " at node " + std::to_string(at) +
                              ", n = " + std::to_string(n) + ")");
    }
    m_min = std::min(m_min, lo);
    sigma_max = std::max(sigma_max, sigma_n_profile(cp, n).maxCoeff());
  }
  report.A = 1.05 * sigma_max;
  report.b = 0.95 * m_min;

  const auto estimates = expected_lengths_mc(cp, n_list, opts);
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    BoundRow row;
    row.n = n_list[j];
    row.L_n = length_expected_metric(cp, row.n);
    row.l_n = estimates[j].mean;
    row.std_err = estimates[j].std_err;
    row.rel_err = (row.L_n - row.l_n) / row.L_n;
    const double b4 = report.b * report.b * report.b * report.b;
    row.h_n = report.A * report.A / (8.0 * static_cast<double>(row.n) * b4);
    const double pad = 4.0 * row.std_err / row.L_n;
    row.flag = row.rel_err > row.h_n + pad || row.rel_err < -pad;
    report.rows.push_back(row);
  }
  for (std::size_t j = report.rows.size(); j-- > 0;) {
    if (report.rows[j].flag) break;
    report.n0 = report.rows[j].n;
  }
  return report;
}

MeanCurveComparison mean_curve_vs_expected_length(const CurveProcess& cp, Eigen::Index n,
                                                  const MonteCarloOptions& opts) {
  cp.validate();
  check_slice(cp, n);
  const Vector weights = trapezoid_weights(cp.nodes);
  MeanCurveComparison out;
  out.len_of_mean = mean_square_speed(cp, n).array().sqrt().matrix().dot(weights);
  out.expected_len = expected_length_mc(cp, n, opts);
  out.gap = out.expected_len.mean - out.len_of_mean;
  out.integrated_variance = node_variances(cp).dot(weights);
  return out;
}

}  // namespace rgeom
