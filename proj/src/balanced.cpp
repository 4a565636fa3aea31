#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

#include "rgeom/error.hpp"
#include "rgeom/mc.hpp"
#include "rgeom/stochastic.hpp"

namespace rgeom {

double expected_norm_expansion(double m_n, double sigma_n, Eigen::Index n) {
  detail::require(m_n > 0.0, "expected_norm_expansion: m_n must be positive");
  detail::require(n >= 1, "expected_norm_expansion: n must be >= 1");
  return m_n - sigma_n * sigma_n / (8.0 * static_cast<double>(n) * m_n * m_n * m_n);
}

TaylorSqrt taylor_sqrt(double x) {
  detail::require(x >= 0.0, "taylor_sqrt: x must be nonnegative");
  const double d = x - 1.0;
  const double d2 = d * d;
  TaylorSqrt t;
  t.value = 1.0 + 0.5 * d - 0.125 * d2 + 0.0625 * d2 * d;
  t.remainder_bound = 0.3125 * d2 * d2;
  return t;
}

double normalized_chi_mean(Eigen::Index n) {
  detail::require(n >= 1, "normalized_chi_mean: n must be >= 1");
  const double half = 0.5 * static_cast<double>(n);
  // Gamma((n+1)/2) / Gamma(n/2) without forming either factor.
  const double ratio = 1.0 / boost::math::tgamma_delta_ratio(half, 0.5);
  return std::sqrt(2.0 / static_cast<double>(n)) * ratio;
}

ComponentFamily parse_component_family(const std::string& name) {
  if (name == "gaussian") return ComponentFamily::Gaussian;
  if (name == "uniform") return ComponentFamily::Uniform;
  if (name == "deterministic") return ComponentFamily::Deterministic;
  throw InputError("unknown component family '" + name + "'");
}

std::string to_string(ComponentFamily family) {
  switch (family) {
    case ComponentFamily::Gaussian: return "gaussian";
    case ComponentFamily::Uniform: return "uniform";
    case ComponentFamily::Deterministic: return "deterministic";
  }
  return "";
}

ComponentMoments component_moments(ComponentFamily family) {
  switch (family) {
    case ComponentFamily::Gaussian:
      // X^2 ~ chi^2_1
      return {1.0, 2.0, 8.0, 60.0};
    case ComponentFamily::Uniform:
      // X = sqrt(3) V, V ~ U(-1, 1): E X^{2k} = 3^k / (2k + 1)
      return {1.0, 4.0 / 5.0, 16.0 / 35.0, 48.0 / 35.0};
    case ComponentFamily::Deterministic:
      return {1.0, 0.0, 0.0, 0.0};
  }
  return {};
}

BalancedStats balanced_stats(std::span<const ComponentMoments> components) {
  detail::require(!components.empty(), "balanced_stats: no components");
  const double n = static_cast<double>(components.size());
  double sum_sq = 0.0;
  double sum_mu2 = 0.0;
  double sum_mu3 = 0.0;
  double sum_mu4 = 0.0;
  double sum_mu2_sq = 0.0;
  for (const auto& c : components) {
    sum_sq += c.mean_sq;
    sum_mu2 += c.mu2;
    sum_mu3 += c.mu3;
    sum_mu4 += c.mu4;
    sum_mu2_sq += c.mu2 * c.mu2;
  }
  // sum_{i<j} mu2_i mu2_j
  const double cross = 0.5 * (sum_mu2 * sum_mu2 - sum_mu2_sq);
  BalancedStats s;
  s.n = static_cast<Eigen::Index>(components.size());
  s.m_n = std::sqrt(sum_sq / n);
  s.sigma_n = std::sqrt(sum_mu2 / n);
  // n^2 mu3(w^2) = (1/n) sum mu3(X_i^2)
  s.mu3 = sum_mu3 / (n * n * n);
  // n^2 mu4(w^2) = (1/n^2) sum mu4(X_i^2) + (6/n^2) sum_{i<j} mu2 mu2
  s.mu4 = (sum_mu4 + 6.0 * cross) / (n * n * n * n);
  return s;
}

BalancedStats balanced_stats_iid(const ComponentMoments& c, Eigen::Index n) {
  detail::require(n >= 1, "balanced_stats: n must be >= 1");
  const double nn = static_cast<double>(n);
  BalancedStats s;
  s.n = n;
  s.m_n = std::sqrt(c.mean_sq);
  s.sigma_n = std::sqrt(c.mu2);
  s.mu3 = c.mu3 / (nn * nn);
  s.mu4 = (nn * c.mu4 + 3.0 * nn * (nn - 1.0) * c.mu2 * c.mu2) / (nn * nn * nn * nn);
  return s;
}

namespace {

EmpiricalBalancedStats stats_from_norm_squares(const Vector& w2, Eigen::Index n) {
  const auto S = w2.size();
  detail::require(S >= 2, "balanced_stats: need at least 2 samples");
  const double s = static_cast<double>(S);
  const double mean = w2.mean();
  const Eigen::ArrayXd dev = w2.array() - mean;
  const Eigen::ArrayXd dev2 = dev.square();
  const Eigen::ArrayXd dev3 = dev2 * dev;
  const Eigen::ArrayXd dev4 = dev2 * dev2;
  const auto sample_se = [s](const Eigen::ArrayXd& v) {
    const double m = v.mean();
    return std::sqrt((v - m).square().sum() / (s - 1.0) / s);
  };

  EmpiricalBalancedStats out;
  out.samples = static_cast<int>(S);
  out.stats.n = n;
  out.stats.m_n = std::sqrt(mean);
  out.stats.sigma_n = std::sqrt(static_cast<double>(n) * dev2.mean());
  out.stats.mu3 = dev3.mean();
  out.stats.mu4 = dev4.mean();
  out.se_mu3 = sample_se(dev3);
  out.se_mu4 = sample_se(dev4);

  const Eigen::ArrayXd w = w2.array().sqrt();
  out.mean_w = w.mean();
  out.se_mean_w = sample_se(w);
  out.var_w = (w - out.mean_w).square().sum() / (s - 1.0);
  return out;
}

mc::Family to_mc(ComponentFamily f) {
  switch (f) {
    case ComponentFamily::Gaussian: return mc::Family::Gaussian;
    case ComponentFamily::Uniform: return mc::Family::Uniform;
    case ComponentFamily::Deterministic: return mc::Family::Deterministic;
  }
  return mc::Family::Gaussian;
}

}  // namespace

EmpiricalBalancedStats balanced_stats(const Matrix& component_samples) {
  detail::require(component_samples.rows() >= 2, "balanced_stats: need at least 2 samples");
  detail::require(component_samples.cols() >= 1, "balanced_stats: need at least 1 component");
  const auto n = component_samples.cols();
  const Vector w2 = component_samples.rowwise().squaredNorm() / static_cast<double>(n);
  return stats_from_norm_squares(w2, n);
}

EmpiricalBalancedStats sample_balanced_stats(ComponentFamily family, Eigen::Index n,
                                             int samples, std::uint64_t seed) {
  detail::require(samples >= 2, "balanced_stats: need at least 2 samples");
  return stats_from_norm_squares(mc::norm_squares(to_mc(family), n, samples, seed), n);
}

}  // namespace rgeom
