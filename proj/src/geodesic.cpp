#include <cmath>
#include <vector>

#include "rgeom/error.hpp"
#include "rgeom/geometry.hpp"

namespace rgeom {

namespace {

// Discrete energy on a uniform grid over [0, 1]:
//   E = 1/(2 dt) sum_k dz_k^T M(zbar_k) dz_k
class DiscreteEnergy {
 public:
  DiscreteEnergy(const MetricField& metric, const GeodesicConfig& cfg, Eigen::Index segments)
      : metric_(metric), cfg_(cfg), dt_(1.0 / static_cast<double>(segments)) {}

  double value(const Matrix& pts) const {
    double e = 0.0;
    for (Eigen::Index k = 0; k + 1 < pts.cols(); ++k) {
      const Vector dz = pts.col(k + 1) - pts.col(k);
      const Matrix M = metric_(0.5 * (pts.col(k) + pts.col(k + 1)));
      e += dz.dot(M * dz);
    }
    return 0.5 * e / dt_;
  }

  // Gradient over interior nodes (d x (K-1)) and the midpoint metrics, which
  // the caller reuses for the preconditioner.
  double gradient(const Matrix& pts, Matrix& grad, std::vector<Matrix>& mids) const {
    const auto d = pts.rows();
    const auto segs = pts.cols() - 1;
    grad.setZero(d, segs - 1);
    mids.resize(segs);
    double e = 0.0;
    for (Eigen::Index k = 0; k < segs; ++k) {
      const Vector zbar = 0.5 * (pts.col(k) + pts.col(k + 1));
      const Vector dz = pts.col(k + 1) - pts.col(k);
      mids[k] = metric_(zbar);
      const Vector Mdz = mids[k] * dz;
      e += dz.dot(Mdz);

      // d/dzbar of dz^T M(zbar) dz by central differences.
      const double h = cfg_.fd_step * (1.0 + zbar.norm());
      Vector dq(d);
      for (Eigen::Index a = 0; a < d; ++a) {
        Vector zp = zbar;
        Vector zm = zbar;
        zp[a] += h;
        zm[a] -= h;
        dq[a] = (dz.dot(metric_(zp) * dz) - dz.dot(metric_(zm) * dz)) / (2.0 * h);
      }
      // zbar moves by 1/2 per endpoint.
      const Vector pull = Mdz / dt_;
      const Vector push = 0.25 * dq / dt_;
      if (k >= 1) grad.col(k - 1) += -pull + push;  // node k
      if (k + 1 <= segs - 1) grad.col(k) += pull + push;  // node k+1
    }
    return 0.5 * e / dt_;
  }

  double dt() const { return dt_; }

 private:
  const MetricField& metric_;
  const GeodesicConfig& cfg_;
  double dt_;
};

// Block-tridiagonal Gauss-Newton approximation of the energy Hessian,
// exact when the metric is constant.
Matrix preconditioner(const std::vector<Matrix>& mids, Eigen::Index d, double dt) {
  const auto interior = static_cast<Eigen::Index>(mids.size()) - 1;
  Matrix H = Matrix::Zero(interior * d, interior * d);
  double scale = 0.0;
  for (const auto& M : mids) scale = std::max(scale, M.trace() / static_cast<double>(d));
  const double ridge = 1e-12 * std::max(scale, 1e-300);
  for (Eigen::Index j = 0; j < interior; ++j) {
    H.block(j * d, j * d, d, d) =
        (mids[j] + mids[j + 1]) / dt + ridge * Matrix::Identity(d, d);
    if (j + 1 < interior) {
      H.block(j * d, (j + 1) * d, d, d) = -mids[j + 1] / dt;
      H.block((j + 1) * d, j * d, d, d) = -mids[j + 1].transpose() / dt;
    }
  }
  return H;
}

}  // namespace

GeodesicResult geodesic(const MetricField& metric, const Vector& za, const Vector& zb,
                        const GeodesicConfig& cfg) {
  detail::require(za.size() == metric.dim() && zb.size() == metric.dim(),
                  "geodesic: endpoint dimension differs from metric dimension");
  detail::require(cfg.nodes >= 1, "geodesic: need at least one segment");
  detail::require(cfg.max_iters >= 0, "geodesic: max_iters must be >= 0");
  detail::require(cfg.window >= 1, "geodesic: window must be >= 1");

  GeodesicResult result;
  result.curve = DiscreteCurve::straight(za, zb, cfg.nodes);
  if (za == zb) {
    result.converged = true;
    return result;
  }

  const auto d = za.size();
  const auto segs = cfg.nodes;
  DiscreteEnergy energy(metric, cfg, segs);
  Matrix pts = result.curve.points;

  std::vector<double> history;
  Matrix grad;
  std::vector<Matrix> mids;
  double current = energy.gradient(pts, grad, mids);
  history.push_back(current);

  int iter = 0;
  while (segs >= 2 && iter < cfg.max_iters) {
    Vector g = Eigen::Map<const Vector>(grad.data(), grad.size());
    Vector direction;
    {
      Eigen::LDLT<Matrix> ldlt(preconditioner(mids, d, energy.dt()));
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) direction = -ldlt.solve(g);
    }
    if (direction.size() == 0 || !direction.allFinite() || !(direction.dot(g) < 0.0)) {
      direction = -g;
    }
    const double slope = direction.dot(g);
    if (slope == 0.0) {
      result.converged = true;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    Matrix trial;
    double trial_energy = current;
    for (int ls = 0; ls < 60; ++ls) {
      trial = pts;
      trial.middleCols(1, segs - 1) +=
          step * Eigen::Map<const Matrix>(direction.data(), d, segs - 1);
      trial_energy = energy.value(trial);
      if (std::isfinite(trial_energy) && trial_energy <= current + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!accepted || !(trial_energy < current)) {
      // No descent left: further iterations would not change the energy.
      result.converged = true;
      break;
    }
    pts = trial;
    current = energy.gradient(pts, grad, mids);
    history.push_back(current);
    if (static_cast<int>(history.size()) > cfg.window) {
      const double past = history[history.size() - 1 - cfg.window];
      if ((past - current) <= cfg.tolerance * std::abs(current)) {
        result.converged = true;
        break;
      }
    }
  }
  if (segs < 2) result.converged = true;

  result.curve.points = pts;
  result.iterations = iter;
  result.energy = curve_energy(metric, result.curve);
  result.length = curve_length(metric, result.curve);
  result.speed_cov = speed_cov(metric, result.curve);
  return result;
}

}  // namespace rgeom
