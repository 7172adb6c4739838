#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "biascal/oracles.hpp"

namespace biascal {

/// sum_{j=1..n} (j+n0)^-kappa, compensated.
double phi_sum(double kappa, std::int64_t n, std::int64_t n0);

/// Decay exponents of the two weight components.
double fast_decay_exponent(const BiasOrder& o);  // (q1+2q2)/(2(q1+q2))
double slow_decay_exponent(const BiasOrder& o);  // q2/(q1+q2)

struct XiMatrix {
  double xi11 = 0, xi12 = 0, xi22 = 0;
  double phi11 = 0, phi12 = 0, phi22 = 0;  // the matrix that was inverted
  std::int64_t n = 0;
  std::int64_t n0 = 0;
  BiasOrder order;

  double xi21() const noexcept { return xi12; }
};

XiMatrix xi_matrix(const BiasOrder& order, std::int64_t n, std::int64_t n0);

/// xi11 a^2 + 2 xi12 a + xi22: the minimal variance sum at bias sum a.
double ztilde_squared(double a, const XiMatrix& xi);

/// |a|^(2q2/(q1+q2)) * ztilde_squared(a)^(q1/(q1+q2)).
double a_star_objective(double a, const XiMatrix& xi);

/// (K^(2(q1+q2)) - xi11) a^2 - 2 xi12 a - xi22; feasible where >= 0.
double feasibility_margin(double a, const XiMatrix& xi, double K);

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double a) const noexcept { return a >= lo && a <= hi; }
};

struct FeasibleRegion {
  std::vector<Interval> intervals;  // at most two, sorted, disjoint
  std::vector<double> roots;        // real roots of the margin
  bool empty() const noexcept { return intervals.empty(); }
  bool contains(double a) const noexcept;
};

FeasibleRegion feasible_region(const XiMatrix& xi, double K);

/// Asymptotic guess sqrt(q1/(q1+q2)) / (K^(q1+q2) n^(q1/(2(q1+q2)))).
double a_star_pilot(const BiasOrder& order, std::int64_t n, double K);

/// Global minimiser of a_star_objective over the feasible region.
/// Throws InfeasibleError when the region is empty.
double solve_a_star(const XiMatrix& xi, const BiasOrder& order, double K);

struct WeightScheme {
  std::vector<double> weights;
  double lambda1 = 0, lambda2 = 0;
  double a_star = 0;
  double eta_star = 0;
  double s_star = 0;
  double K = 1;
  BiasOrder order;
  std::int64_t n0 = 0;
  XiMatrix xi;

  std::int64_t n() const noexcept { return static_cast<std::int64_t>(weights.size()); }
  /// n^(q1/(q1+q2)) * s_star; tends to amrr_general.
  double scaled_s_star() const;
};

/// lambda = Xi [a, 1]'.
void two_decay_lambdas(const XiMatrix& xi, double a, double& lambda1, double& lambda2);
std::vector<double> two_decay_weights(const XiMatrix& xi, double lambda1, double lambda2);

WeightScheme optimal_weights(std::int64_t n, std::int64_t n0, const BiasOrder& order, double K);

/// Weight sums entering the bias and variance of a weighted estimator.
struct WeightSums {
  double total = 0;     // sum w_j
  double bias = 0;      // sum w_j (j+n0)^(-alpha q1)
  double variance = 0;  // sum w_j^2 (j+n0)^(2 alpha q2)
};
WeightSums weight_sums(const std::vector<double>& w, std::int64_t n0, const BiasOrder& order);

double amrr_general(const BiasOrder& order, double K);

struct RecursiveCalibration {
  double ratio = 0;
  double c = 0;
  double beta = 1;
  double d_scale = 1;
};

/// d~ = d; best c.
RecursiveCalibration amrr_recursive_tied(const BiasOrder& order);
/// d~ = d_scale * d with c = 1 (also the averaged estimator's constant).
RecursiveCalibration amrr_recursive_free(const BiasOrder& order);

/// Solves the equality-constrained least squares
///   min sum (j+n0)^(2 alpha q2) w_j^2  s.t.  sum w_j = 1, sum w_j (j+n0)^(-alpha q1) = a
/// through its full KKT system. Independent of the closed form above.
std::vector<double> brute_force_weights(std::int64_t n, std::int64_t n0, const BiasOrder& order, double a);

}  // namespace biascal
