#include "biascal/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "biascal/errors.hpp"
#include "biascal/summation.hpp"

namespace biascal {

double phi_sum(double kappa, std::int64_t n, std::int64_t n0) {
  if (n < 1) throw DomainError("phi_sum needs n >= 1");
  if (n0 < 0) throw DomainError("n0 must be non-negative");
  CompensatedSum s;
  // small terms first
  for (std::int64_t j = n; j >= 1; --j) s += std::pow(static_cast<double>(j + n0), -kappa);
  return s.value();
}

double fast_decay_exponent(const BiasOrder& o) { return (o.q1 + 2.0 * o.q2) / (2.0 * o.sum()); }
double slow_decay_exponent(const BiasOrder& o) { return o.q2 / o.sum(); }

XiMatrix xi_matrix(const BiasOrder& order, std::int64_t n, std::int64_t n0) {
  order.validate();
  if (n < 2) throw DomainError("xi_matrix needs n >= 2 (the phi-matrix is singular for n = 1)");
  XiMatrix x;
  x.n = n;
  x.n0 = n0;
  x.order = order;
  x.phi11 = phi_sum(1.0, n, n0);
  x.phi12 = phi_sum(fast_decay_exponent(order), n, n0);
  x.phi22 = phi_sum(slow_decay_exponent(order), n, n0);
  const double det = x.phi11 * x.phi22 - x.phi12 * x.phi12;
  if (!(det > 1e-14 * x.phi11 * x.phi22)) throw DomainError("phi-matrix is numerically singular");
  x.xi11 = x.phi22 / det;
  x.xi12 = -x.phi12 / det;
  x.xi22 = x.phi11 / det;
  return x;
}

double ztilde_squared(double a, const XiMatrix& xi) {
  return xi.xi11 * a * a + 2.0 * xi.xi12 * a + xi.xi22;
}

double a_star_objective(double a, const XiMatrix& xi) {
  const double s = xi.order.sum();
  return std::pow(std::fabs(a), 2.0 * xi.order.q2 / s) * std::pow(ztilde_squared(a, xi), xi.order.q1 / s);
}

double feasibility_margin(double a, const XiMatrix& xi, double K) {
  const double A = std::pow(K, 2.0 * xi.order.sum()) - xi.xi11;
  return A * a * a - 2.0 * xi.xi12 * a - xi.xi22;
}

bool FeasibleRegion::contains(double a) const noexcept {
  return std::any_of(intervals.begin(), intervals.end(), [a](const Interval& i) { return i.contains(a); });
}

FeasibleRegion feasible_region(const XiMatrix& xi, double K) {
  if (!(K > 0.0)) throw DomainError("K must be positive");
  constexpr double inf = std::numeric_limits<double>::infinity();
  FeasibleRegion r;
  const double A = std::pow(K, 2.0 * xi.order.sum()) - xi.xi11;
  if (A == 0.0) {
    // linear: -2 xi12 a - xi22 >= 0
    if (xi.xi12 == 0.0) return r;
    const double root = -xi.xi22 / (2.0 * xi.xi12);
    r.roots = {root};
    r.intervals.push_back(xi.xi12 < 0.0 ? Interval{root, inf} : Interval{-inf, root});
    return r;
  }
  const double disc = xi.xi12 * xi.xi12 + A * xi.xi22;
  if (disc < 0.0) return r;
  const double sq = std::sqrt(disc);
  const double q = xi.xi12 + (xi.xi12 >= 0.0 ? sq : -sq);
  double r1, r2;
  if (q == 0.0) {
    r1 = r2 = 0.0;  // only when xi12 = 0 and disc = 0, impossible with xi22 > 0
  } else {
    r1 = q / A;
    r2 = -xi.xi22 / q;
  }
  if (r1 > r2) std::swap(r1, r2);
  r.roots = {r1, r2};
  if (A > 0.0) {
    r.intervals = {Interval{-inf, r1}, Interval{r2, inf}};
  } else {
    r.intervals = {Interval{r1, r2}};
  }
  return r;
}

double a_star_pilot(const BiasOrder& order, std::int64_t n, double K) {
  const double s = order.sum();
  return std::sqrt(order.q1 / s) / std::pow(K, s) * std::pow(static_cast<double>(n), -order.q1 / (2.0 * s));
}

namespace {

struct Candidate {
  double a;
  double f;
};

// Minimise over [lo, hi] within one sign branch (0 < lo < hi in magnitude),
// sign = +1 or -1. Log-spaced grid then golden section.
Candidate minimise_branch(const XiMatrix& xi, double lo, double hi, double sign) {
  constexpr int grid = 10000;
  auto f = [&](double m) { return a_star_objective(sign * m, xi); };
  std::vector<double> pts(grid + 1);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i <= grid; ++i) pts[i] = std::exp(llo + (lhi - llo) * i / grid);
  pts.front() = lo;
  pts.back() = hi;
  int best = 0;
  double fbest = f(pts[0]);
  for (int i = 1; i <= grid; ++i) {
    const double v = f(pts[i]);
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  double a = pts[std::max(best - 1, 0)];
  double b = pts[std::min(best + 1, grid)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-12 * std::max(std::fabs(a), std::fabs(b))) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  Candidate c{pts[best], fbest};
  for (double m : {x1, x2, lo, hi}) {
    const double v = f(m);
    if (v < c.f) c = {m, v};
  }
  c.a = sign * c.a;
  // An interior minimum is a root of the stationarity quadratic of the log
  // objective. Golden section only pins a flat minimum to about sqrt(eps),
  // so snap to the nearby root when there is one.
  const double s = xi.order.sum();
  const double qa = 2.0 * s * xi.xi11, qb = (2.0 * xi.order.q1 + 4.0 * xi.order.q2) * xi.xi12,
               qc = 2.0 * xi.order.q2 * xi.xi22;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc >= 0.0 && qa != 0.0) {
    const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    for (double r : {q / qa, q != 0.0 ? qc / q : 0.0}) {
      const double m = sign * r;
      if (m >= lo && m <= hi && std::fabs(r - c.a) <= 1e-4 * std::fabs(c.a)) {
        const double v = f(m);
        if (v <= c.f * (1.0 + 1e-12)) c = {r, v};
      }
    }
  }
  return c;
}

}  // namespace

double solve_a_star(const XiMatrix& xi, const BiasOrder& order, double K) {
  const auto region = feasible_region(xi, K);
  if (region.empty()) {
    std::ostringstream os;
    os << "no feasible weighting for n = " << xi.n << ", K = " << K
       << " (the bias-variance balance cannot be met with d~/d <= K)";
    throw InfeasibleError(xi.n, K, os.str());
  }
  const double pilot = a_star_pilot(order, xi.n, K);
  bool have = false;
  Candidate best{0, 0};
  for (const auto& iv : region.intervals) {
    // 0 is never feasible (margin(0) = -xi22 < 0), so each interval lies on one side
    const double sign = (iv.hi <= 0.0) ? -1.0 : 1.0;
    double lo = sign > 0 ? iv.lo : -iv.hi;
    double hi = sign > 0 ? iv.hi : -iv.lo;
    if (!std::isfinite(hi)) {
      hi = std::max(1e3 * pilot, 10.0 * lo);
      // the objective grows like a^2; push the bracket out if the optimum sits on it
      for (int k = 0; k < 60; ++k) {
        const auto c = minimise_branch(xi, lo, hi, sign);
        if (std::fabs(c.a) < hi * (1.0 - 1e-9)) break;
        hi *= 10.0;
      }
    }
    const auto c = minimise_branch(xi, lo, hi, sign);
    if (!have || c.f < best.f || (c.f == best.f && c.a > 0.0)) {
      best = c;
      have = true;
    }
  }
  return best.a;
}

double WeightScheme::scaled_s_star() const {
  return std::pow(static_cast<double>(n()), order.q1 / order.sum()) * s_star;
}

void two_decay_lambdas(const XiMatrix& xi, double a, double& lambda1, double& lambda2) {
  lambda1 = xi.xi11 * a + xi.xi12;
  lambda2 = xi.xi12 * a + xi.xi22;
}

std::vector<double> two_decay_weights(const XiMatrix& xi, double lambda1, double lambda2) {
  const double e1 = fast_decay_exponent(xi.order), e2 = slow_decay_exponent(xi.order);
  std::vector<double> w(static_cast<std::size_t>(xi.n));
  for (std::int64_t j = 1; j <= xi.n; ++j) {
    const double t = static_cast<double>(j + xi.n0);
    w[j - 1] = lambda1 * std::pow(t, -e1) + lambda2 * std::pow(t, -e2);
  }
  return w;
}

WeightSums weight_sums(const std::vector<double>& w, std::int64_t n0, const BiasOrder& order) {
  const double alpha = order.alpha();
  CompensatedSum tot, bias, var;
  for (std::size_t i = w.size(); i-- > 0;) {
    const double t = static_cast<double>(static_cast<std::int64_t>(i) + 1 + n0);
    tot += w[i];
    bias += w[i] * std::pow(t, -alpha * order.q1);
    var += w[i] * w[i] * std::pow(t, 2.0 * alpha * order.q2);
  }
  return {tot.value(), bias.value(), var.value()};
}

WeightScheme optimal_weights(std::int64_t n, std::int64_t n0, const BiasOrder& order, double K) {
  if (!(K > 0.0)) throw DomainError("K must be positive");
  if (n < 2) {
    std::ostringstream os;
    os << "no feasible weighting for n = " << n << " (need n >= 2)";
    throw InfeasibleError(n, K, os.str());
  }
  WeightScheme ws;
  ws.xi = xi_matrix(order, n, n0);
  ws.K = K;
  ws.order = order;
  ws.n0 = n0;
  ws.a_star = solve_a_star(ws.xi, order, K);
  two_decay_lambdas(ws.xi, ws.a_star, ws.lambda1, ws.lambda2);
  ws.weights = two_decay_weights(ws.xi, ws.lambda1, ws.lambda2);
  auto sums = weight_sums(ws.weights, n0, order);
  // Iterative refinement: for tiny n with large n0 the two decay bases are
  // nearly collinear and Xi [a, 1]' loses digits to cancellation.
  for (int it = 0; it < 3 && std::fabs(sums.total - 1.0) > 1e-13; ++it) {
    const double r1 = ws.a_star - sums.bias, r2 = 1.0 - sums.total;
    ws.lambda1 += ws.xi.xi11 * r1 + ws.xi.xi12 * r2;
    ws.lambda2 += ws.xi.xi12 * r1 + ws.xi.xi22 * r2;
    ws.weights = two_decay_weights(ws.xi, ws.lambda1, ws.lambda2);
    sums = weight_sums(ws.weights, n0, order);
  }
  ws.eta_star = std::pow(sums.variance / (sums.bias * sums.bias), 1.0 / (2.0 * order.sum()));
  ws.s_star = a_star_objective(ws.a_star, ws.xi);
  return ws;
}

double amrr_general(const BiasOrder& order, double K) {
  order.validate();
  if (!(K > 0.0)) throw DomainError("K must be positive");
  return order.q1 / (order.sum() * std::pow(K, 2.0 * order.q2));
}

RecursiveCalibration amrr_recursive_tied(const BiasOrder& order) {
  order.validate();
  const double s = order.sum();
  RecursiveCalibration r;
  r.ratio = order.q1 * order.q1 / (16.0 * s * s) + order.q1 / (2.0 * s) + 1.0;
  r.c = (5.0 * order.q1 + 4.0 * order.q2) / (2.0 * s);
  r.beta = 1.0;
  r.d_scale = 1.0;
  return r;
}

RecursiveCalibration amrr_recursive_free(const BiasOrder& order) {
  order.validate();
  const double s = order.sum();
  const double m = (order.q1 + 2.0 * order.q2) / s;
  RecursiveCalibration r;
  r.ratio = std::pow(2.0, 2.0 * order.q2 / s) * std::pow(m, -m);
  r.d_scale = std::pow(m / 4.0, 1.0 / (2.0 * s));
  r.c = 1.0;
  r.beta = 1.0;
  return r;
}

std::vector<double> brute_force_weights(std::int64_t n, std::int64_t n0, const BiasOrder& order, double a) {
  order.validate();
  if (n < 1 || n > 50) throw DomainError("brute_force_weights is an oracle for 1 <= n <= 50");
  const int m = static_cast<int>(n);
  const double alpha = 0.5 / (order.q1 + order.q2);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m + 2, m + 2);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 2);
  for (int j = 0; j < m; ++j) {
    const double t = static_cast<double>(j + 1 + n0);
    M(j, j) = 2.0 * std::pow(t, 2.0 * alpha * order.q2);
    const double mu = std::pow(t, -alpha * order.q1);
    M(j, m) = M(m, j) = 1.0;
    M(j, m + 1) = M(m + 1, j) = mu;
  }
  rhs(m) = 1.0;
  rhs(m + 1) = a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw DomainError("KKT system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  return std::vector<double>(sol.data(), sol.data() + m);
}

}  // namespace biascal
