#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rgeom/geometry.hpp"

namespace rgeom {

/// Derivative process of a symmetric GP along a curve c: [0,1] -> Z.
///
/// Output dimension i has path derivative f_i'(t_k) = c'(t_k)^T grad f_i(c(t_k)),
/// Gaussian with mean mean_velocities(i, k); all outputs share node_cov.
/// The slice phi_n keeps outputs 0..n-1, each divided by sqrt(n).
struct CurveProcess {
  Vector nodes;            // t_0 < ... < t_K in [0, 1]
  Matrix mean_velocities;  // m x (K+1)
  Matrix node_cov;         // (K+1) x (K+1)

  Eigen::Index num_nodes() const { return nodes.size(); }
  Eigen::Index output_dim() const { return mean_velocities.rows(); }
  void validate() const;

  /// Copy with node_cov multiplied by `factor` (0 gives the mean-only
  /// surrogate).
  CurveProcess with_variance_scale(double factor) const;
};

/// Resamples `curve` at `nodes` uniform parameters (piecewise-linear
/// geometry, central-difference velocities, one-sided at the ends) and fills
/// the mean velocities and node covariance from the posterior.
CurveProcess restrict_to_curve(const PosteriorGP& post, const DiscreteCurve& curve,
                               Eigen::Index nodes);

/// m_n(t_k) = sqrt(E w_n(t_k)^2) = sqrt(sigma^2(t_k) + 1/n sum_{i<n} mu_i'(t_k)^2)
Vector m_n_profile(const CurveProcess& cp, Eigen::Index n);

/// Sigma_n(t_k) = sqrt(n Var w_n^2) = sqrt(2 sigma^4 + 4 sigma^2 / n sum_{i<n} mu_i'^2)
Vector sigma_n_profile(const CurveProcess& cp, Eigen::Index n);

/// Closed-form E[m P(w^2/m^2)] at each node for the Gaussian slice n, with
/// m = m_n(t_k) and P the cubic Taylor polynomial of sqrt around 1:
///   m - Var(w^2)/(8 m^3) + mu_3(w^2)/(16 m^5)
///   Var(w^2) = (2 s^4 + 4 s^2 a)/n,  mu_3(w^2) = (8 s^6 + 24 s^4 a)/n^2
/// where s^2 is the node variance and a = 1/n sum_{i<n} mu_i'^2.
Vector taylor_expectation_profile(const CurveProcess& cp, Eigen::Index n);

/// Trapezoid weights for integrating nodal values over cp.nodes.
Vector trapezoid_weights(const Vector& nodes);

struct MonteCarloOptions {
  int samples = 2000;
  std::uint64_t seed = 0;
  /// Taylor control variate: average w - m_n P(w^2/m_n^2) over the draws and
  /// add its closed-form Gaussian expectation. Unbiased; removes the noise of
  /// the leading terms, which otherwise swamps (L_n - l_n) at large n.
  bool control_variate = true;
  /// Pairs each Gaussian draw with its reflection about the mean. std_err is
  /// then computed from pair averages, which are independent.
  bool antithetic = false;
};

struct LengthEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

/// l_n = E int ||phi_n'(t)|| dt by Monte Carlo over joint path draws.
LengthEstimate expected_length_mc(const CurveProcess& cp, Eigen::Index n,
                                  const MonteCarloOptions& opts = {});

/// Same draws shared across every n in n_list (one estimate per entry).
std::vector<LengthEstimate> expected_lengths_mc(const CurveProcess& cp,
                                                std::span<const Eigen::Index> n_list,
                                                const MonteCarloOptions& opts = {});

/// L_n = int E(||phi_n'(t)||^2)^{1/2} dt, trapezoid over the nodes.
double length_expected_metric(const CurveProcess& cp, Eigen::Index n);

struct BoundRow {
  Eigen::Index n = 0;
  double L_n = 0.0;
  double l_n = 0.0;
  double std_err = 0.0;
  double rel_err = 0.0;
  double h_n = 0.0;
  bool flag = false;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  double A = 0.0;  // 1.05 * max Sigma_n(t)
  double b = 0.0;  // 0.95 * min m_n(t)
  /// Smallest n in the list from which every row is unflagged.
  std::optional<Eigen::Index> n0;
};

/// Relative error (L_n - l_n)/L_n against h(n) = A^2/(8 n b^4). A row is
/// flagged when rel_err leaves [-4 se/L_n, h(n) + 4 se/L_n].
/// Throws PreconditionError when min m_n < 1e-6.
BoundReport bound_report(const CurveProcess& cp, std::span<const Eigen::Index> n_list,
                         const MonteCarloOptions& opts = {});

/// m_n - Sigma_n^2 / (8 n m_n^3), the two-term expansion of E(w_n).
double expected_norm_expansion(double m_n, double sigma_n, Eigen::Index n);

struct TaylorSqrt {
  double value = 0.0;            // P(x)
  double remainder_bound = 0.0;  // 5/16 (x-1)^4 >= P(x) - sqrt(x) >= 0
};

/// Cubic Taylor polynomial of sqrt around 1.
TaylorSqrt taylor_sqrt(double x);

/// E|N(0, I_n)/sqrt(n)|, i.e. the mean of a chi variable with n degrees of
/// freedom divided by sqrt(n).
double normalized_chi_mean(Eigen::Index n);

struct BalancedStats {
  double m_n = 0.0;
  double sigma_n = 0.0;
  double mu3 = 0.0;  // third central moment of w_n^2
  double mu4 = 0.0;  // fourth central moment of w_n^2
  Eigen::Index n = 0;
};

/// E X^2 and central moments mu_2..mu_4 of X^2 for one component.
struct ComponentMoments {
  double mean_sq = 0.0;
  double mu2 = 0.0;
  double mu3 = 0.0;
  double mu4 = 0.0;
};

enum class ComponentFamily { Gaussian, Uniform, Deterministic };

ComponentFamily parse_component_family(const std::string& name);
std::string to_string(ComponentFamily family);
/// Unit second moment in every family: N(0,1), U(-sqrt3, sqrt3), constant 1.
ComponentMoments component_moments(ComponentFamily family);

/// Independent components X_1..X_n with the given moments of X_i^2, for
/// W_n = (X_1, ..., X_n)/sqrt(n).
BalancedStats balanced_stats(std::span<const ComponentMoments> components);
BalancedStats balanced_stats_iid(const ComponentMoments& component, Eigen::Index n);

struct EmpiricalBalancedStats {
  BalancedStats stats;
  double mean_w = 0.0;  // sample mean of w_n
  double se_mean_w = 0.0;
  double var_w = 0.0;
  double se_mu3 = 0.0;
  double se_mu4 = 0.0;
  int samples = 0;
};

/// Sample statistics from rows of unnormalized components X (S x n); each
/// row gives one W_n = X/sqrt(n).
EmpiricalBalancedStats balanced_stats(const Matrix& component_samples);

/// Sample statistics of w_n from `samples` draws of iid components.
EmpiricalBalancedStats sample_balanced_stats(ComponentFamily family, Eigen::Index n,
                                             int samples, std::uint64_t seed);

struct MeanCurveComparison {
  double len_of_mean = 0.0;     // int ||E phi_n'(t)|| dt
  LengthEstimate expected_len;  // l_n
  double gap = 0.0;             // expected_len.mean - len_of_mean
  double integrated_variance = 0.0;  // int sigma^2(t) dt
};

MeanCurveComparison mean_curve_vs_expected_length(const CurveProcess& cp, Eigen::Index n,
                                                  const MonteCarloOptions& opts = {});

}  // namespace rgeom
