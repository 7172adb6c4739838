#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "biascal/calibration.hpp"
#include "biascal/errors.hpp"

using namespace biascal;

namespace {

const BiasOrder kCfd{2.0, 1.0};
const BiasOrder kFfd{1.0, 1.0};

// Exact minimiser: stationary points of the log-objective solve
// 2(q1+q2) xi11 a^2 + (2q1 + 4q2) xi12 a + 2 q2 xi22 = 0; otherwise the optimum
// sits on a root of the feasibility constraint.
double exact_a_star(const XiMatrix& xi, double K) {
  const double q1 = xi.order.q1, q2 = xi.order.q2, s = q1 + q2;
  std::vector<double> cand;
  const auto reg = feasible_region(xi, K);
  for (double r : reg.roots) cand.push_back(r);
  const double A = 2 * s * xi.xi11, B = (2 * q1 + 4 * q2) * xi.xi12, C = 2 * q2 * xi.xi22;
  const double disc = B * B - 4 * A * C;
  if (disc >= 0) {
    for (double sg : {-1.0, 1.0}) {
      const double a = (-B + sg * std::sqrt(disc)) / (2 * A);
      if (feasibility_margin(a, xi, K) >= 0) cand.push_back(a);
    }
  }
  double best = cand.at(0), fb = a_star_objective(best, xi);
  for (double a : cand) {
    const double f = a_star_objective(a, xi);
    if (f < fb || (f == fb && a > best)) {
      best = a;
      fb = f;
    }
  }
  return best;
}

}  // namespace

TEST(PhiSum, SmallCases) {
  EXPECT_NEAR(phi_sum(1.0, 3, 0), 11.0 / 6.0, 1e-15);
  EXPECT_EQ(phi_sum(0.0, 5, 7), 5.0);
  EXPECT_THROW(phi_sum(1.0, 0, 0), DomainError);
}

TEST(PhiSum, HarmonicAsymptotic) {
  const double r = phi_sum(1.0, 1000000, 0) / std::log(1e6);
  EXPECT_NEAR(r, 1.0, 0.05);
  EXPECT_NEAR(r, 1.04178029921, 1e-10);  // mpmath
}

TEST(XiMatrix, TwoRunsInvertedByHand) {
  const auto x = xi_matrix(kCfd, 2, 0);
  EXPECT_DOUBLE_EQ(x.phi11, 1.5);
  EXPECT_NEAR(x.phi12, 1 + std::pow(2.0, -2.0 / 3.0), 1e-15);
  EXPECT_NEAR(x.phi22, 1 + std::pow(2.0, -1.0 / 3.0), 1e-15);
  const double det = 1.5 * x.phi22 - x.phi12 * x.phi12;
  EXPECT_NEAR(x.xi11, x.phi22 / det, 1e-10);
  EXPECT_NEAR(x.xi12, -x.phi12 / det, 1e-10);
  EXPECT_NEAR(x.xi22, 1.5 / det, 1e-10);
  // mpmath, 40 digits
  EXPECT_NEAR(x.xi11, 53.100306270178419, 1e-9);
  EXPECT_NEAR(x.xi12, -48.252984168315346, 1e-9);
  EXPECT_NEAR(x.xi22, 44.405662066452273, 1e-9);
}

TEST(XiMatrix, InverseOfPhiMatrix) {
  for (std::int64_t n : {2, 3, 10, 1000, 100000})
    for (std::int64_t n0 : {0, 5, 500}) {
      const auto x = xi_matrix(kCfd, n, n0);
      // tolerance relative to the size of the cancelling products
      const double tol = 1e-12 * std::fabs(x.phi22 * x.xi22) + 1e-12;
      EXPECT_NEAR(x.phi11 * x.xi11 + x.phi12 * x.xi12, 1.0, tol);
      EXPECT_NEAR(x.phi11 * x.xi12 + x.phi12 * x.xi22, 0.0, tol);
      EXPECT_NEAR(x.phi12 * x.xi11 + x.phi22 * x.xi12, 0.0, tol);
      EXPECT_NEAR(x.phi12 * x.xi12 + x.phi22 * x.xi22, 1.0, tol);
      EXPECT_EQ(x.xi12, x.xi21());
    }
}

TEST(XiMatrix, SingleRunIsSingular) { EXPECT_THROW(xi_matrix(kCfd, 1, 0), DomainError); }

TEST(XiMatrix, ScaledXi22ApproachesOneLogarithmically) {
  // xi22 ~ (q1/(q1+q2)) n^(-q1/(q1+q2)) / (1 - 6/log n) for q1=2, q2=1: the
  // correction is still ~70% at n = 1e6.
  double prev = 1e9;
  for (std::int64_t n : {10000, 100000, 1000000}) {
    const double v = xi_matrix(kCfd, n, 0).xi22 * 1.5 * std::pow(static_cast<double>(n), 2.0 / 3.0);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 1.0);
    prev = v;
  }
  EXPECT_NEAR(prev, 1.69539628471, 1e-8);  // mpmath
}

TEST(Ztilde, QuadraticForm) {
  XiMatrix x;
  x.xi11 = 2;
  x.xi12 = -1;
  x.xi22 = 3;
  EXPECT_EQ(ztilde_squared(1.0, x), 3.0);
  EXPECT_EQ(ztilde_squared(0.0, x), 3.0);
  const auto y = xi_matrix(kCfd, 40, 5);
  EXPECT_EQ(ztilde_squared(0.0, y), y.xi22);
}

TEST(Ztilde, EqualsConstrainedMinimumFromKkt) {
  for (std::int64_t n : {2, 3, 7, 20, 50})
    for (std::int64_t n0 : {0, 5})
      for (double a : {-0.3, 0.05, 0.2, 0.9}) {
        const auto x = xi_matrix(kCfd, n, n0);
        const auto w = brute_force_weights(n, n0, kCfd, a);
        const auto s = weight_sums(w, n0, kCfd);
        EXPECT_NEAR(s.variance, ztilde_squared(a, x), 1e-8 * std::max(1.0, s.variance));
      }
}

TEST(FeasibleRegion, RootsZeroTheMargin) {
  for (std::int64_t n : {3, 30, 1000, 100000})
    for (double K : {0.8, 1.0, 2.0, 3.0}) {
      const auto x = xi_matrix(kCfd, n, 0);
      const auto r = feasible_region(x, K);
      const double scale = std::fabs(x.xi22) + std::fabs(x.xi11) + std::fabs(x.xi12);
      for (double root : r.roots) EXPECT_NEAR(feasibility_margin(root, x, K) / scale, 0.0, 1e-9);
    }
}

TEST(FeasibleRegion, ShapeMatchesSignAnalysis) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> uq(0.5, 3.0), uK(0.3, 3.0);
  for (int t = 0; t < 300; ++t) {
    const BiasOrder o{uq(gen), uq(gen)};
    const std::int64_t n = 2 + t % 60;
    const double K = uK(gen);
    const auto x = xi_matrix(o, n, t % 2 ? 5 : 0);
    const auto r = feasible_region(x, K);
    ASSERT_LE(r.intervals.size(), 2u);
    EXPECT_FALSE(r.contains(0.0));
    for (std::size_t i = 1; i < r.intervals.size(); ++i) EXPECT_LT(r.intervals[i - 1].hi, r.intervals[i].lo);
    for (int k = -200; k <= 200; ++k) {
      const double a = k * 0.05;
      const double m = feasibility_margin(a, x, K);
      if (std::fabs(m) < 1e-9 * (1 + std::fabs(x.xi22))) continue;
      EXPECT_EQ(r.contains(a), m > 0) << "a=" << a;
    }
  }
}

TEST(SolveAStar, InfeasibleNamesNAndK) {
  const auto x = xi_matrix(kCfd, 10000, 0);
  try {
    solve_a_star(x, kCfd, 0.5);
    FAIL() << "expected infeasibility";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.n(), 10000);
    EXPECT_EQ(e.K(), 0.5);
    EXPECT_NE(std::string(e.what()).find("n = 10000"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("K = 0.5"), std::string::npos);
  }
}

TEST(SolveAStar, BeatsAuditGrid) {
  for (auto [n, n0, K] : {std::tuple<std::int64_t, std::int64_t, double>{1000, 0, 1.0},
                          {10000, 500, 1.0},
                          {30, 5, 1.3},
                          {10000, 0, 2.0}}) {
    const auto x = xi_matrix(kCfd, n, n0);
    const double a = solve_a_star(x, kCfd, K);
    const auto reg = feasible_region(x, K);
    ASSERT_TRUE(reg.contains(a) || std::fabs(feasibility_margin(a, x, K)) < 1e-12 * x.xi22);
    const double fa = a_star_objective(a, x);
    const double span = 50.0 * std::fabs(a) + 1.0;
    for (int i = 0; i <= 100000; ++i) {
      const double t = -span + 2.0 * span * i / 100000;
      if (!reg.contains(t)) continue;
      ASSERT_GE(a_star_objective(t, x), fa * (1 - 1e-12)) << "t=" << t;
    }
  }
}

TEST(SolveAStar, MatchesExactStationaryOracle) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> uq(0.5, 3.0), uK(0.8, 3.0);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const BiasOrder o{uq(gen), uq(gen)};
    const std::int64_t n = 2 + static_cast<std::int64_t>(gen() % 2000);
    const double K = uK(gen);
    const auto x = xi_matrix(o, n, t % 3 == 0 ? 500 : 0);
    if (feasible_region(x, K).empty()) continue;
    const double a = solve_a_star(x, o, K);
    const double e = exact_a_star(x, K);
    EXPECT_NEAR(a_star_objective(a, x), a_star_objective(e, x), 1e-10 * a_star_objective(e, x));
    EXPECT_NEAR(a, e, 1e-6 * std::fabs(e));
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

struct Frozen {
  BiasOrder order;
  std::int64_t n, n0;
  double K, a, eta, S, lambda1, lambda2;
};

// mpmath at 40 digits with the exact stationary-point oracle
const Frozen kFrozen[] = {
    {kCfd, 1000, 0, 1.0, 0.0989601783334932, 1.0, 0.00979311689579677, -0.0359182554281931, 0.0133475938583987},
    {kCfd, 10000, 0, 1.0, 0.0439167176870149, 1.0, 0.00192867809240097, -0.0107730829641007, 0.00240179653555417},
    {kCfd, 10000, 0, 2.0, 0.006903765217351, 2.0, 0.000762591586820888, -0.0195322069422349, 0.00318521211818945},
    {kCfd, 100000, 0, 1.0, 0.0197613835382876, 1.0, 0.000390512279347306, -0.00358598054445407, 0.0004613762162471},
    {kCfd, 10000, 500, 1.0, 0.0639973017272254, 0.858486792791776, 0.00222463005344077, -0.0128095353718368,
     0.00245932710053103},
    {kCfd, 10000, 500, 4.0, 0.00217459731538258, 4.0, 0.00121059161192169, -0.273976922112813, 0.0199652552700504},
    {kFfd, 5000, 0, 1.5, 0.0576548042477544, 1.5, 0.00747917201890549, -0.0612594965751473, 0.0203600413258934},
};

TEST(OptimalWeights, MatchesFrozenReference) {
  for (const auto& f : kFrozen) {
    const auto w = optimal_weights(f.n, f.n0, f.order, f.K);
    EXPECT_NEAR(w.a_star, f.a, 1e-8 * std::fabs(f.a)) << "n=" << f.n << " K=" << f.K;
    EXPECT_NEAR(w.eta_star, f.eta, 1e-8 * f.eta);
    EXPECT_NEAR(w.s_star, f.S, 1e-8 * f.S);
    EXPECT_NEAR(w.lambda1, f.lambda1, 1e-7 * std::fabs(f.lambda1));
    EXPECT_NEAR(w.lambda2, f.lambda2, 1e-7 * std::fabs(f.lambda2));
  }
}

TEST(OptimalWeights, SchemeInvariants) {
  for (auto [n, n0, K] : {std::tuple<std::int64_t, std::int64_t, double>{2, 0, 3.0},
                          {50, 5, 1.2},
                          {1000, 0, 1.0},
                          {10000, 500, 2.0},
                          {100000, 0, 2.0}}) {
    const auto w = optimal_weights(n, n0, kCfd, K);
    const auto s = weight_sums(w.weights, n0, kCfd);
    EXPECT_NEAR(s.total, 1.0, 1e-10);
    EXPECT_NEAR(s.bias, w.a_star, 1e-10 * std::max(1.0, std::fabs(w.a_star)));
    EXPECT_LE(w.eta_star, K + 1e-9);
    // bias-variance balance
    const double lhs = std::pow(w.eta_star, 4.0) * s.bias * s.bias;
    const double rhs = std::pow(w.eta_star, -2.0) * s.variance;
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-8);
    EXPECT_NEAR(lhs, w.s_star, 1e-8 * w.s_star);
    // two-decay form
    const double e1 = fast_decay_exponent(kCfd), e2 = slow_decay_exponent(kCfd);
    for (std::int64_t j : {std::int64_t{1}, n / 2 + 1, n}) {
      const double t = static_cast<double>(j + n0);
      EXPECT_EQ(w.weights[j - 1], w.lambda1 * std::pow(t, -e1) + w.lambda2 * std::pow(t, -e2));
    }
  }
}

TEST(OptimalWeights, DegenerateBudget) { EXPECT_THROW(optimal_weights(1, 0, kCfd, 1.0), InfeasibleError); }

TEST(OptimalWeights, LambdaTwoApproachesAsymptoteLogarithmically) {
  const auto w = optimal_weights(1000000, 0, kCfd, 1.0);
  const double scaled = w.lambda2 * 1e4 * 1.5;
  EXPECT_NEAR(scaled, 9.20523622949143e-5 * 1.5e4, 1e-6);  // mpmath: 1.381
  EXPECT_NEAR(w.eta_star, 1.0, 1e-9);
  EXPECT_NEAR(w.a_star * 100.0, 0.897598235488809, 1e-7);
}

TEST(Amrr, GeneralClosedForm) {
  EXPECT_NEAR(amrr_general(kCfd, 1.0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(amrr_general(kCfd, 2.0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(amrr_general(kFfd, 0.5), 2.0, 1e-15);
  double prev = 1e9;
  for (int i = 1; i < 100; ++i) {
    const double v = amrr_general(kCfd, 0.05 * i);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_THROW(amrr_general(kCfd, 0.0), DomainError);
}

TEST(Amrr, RecursiveTied) {
  const auto a = amrr_recursive_tied(kFfd);
  EXPECT_NEAR(a.ratio, 1.27, 0.005);
  EXPECT_DOUBLE_EQ(a.c, 2.25);
  const auto b = amrr_recursive_tied(kCfd);
  EXPECT_NEAR(b.c, 2.33, 0.005);
  EXPECT_NEAR(b.ratio, 49.0 / 36.0, 1e-15);
}

TEST(Amrr, RecursiveFree) {
  const auto a = amrr_recursive_free(kCfd);
  EXPECT_NEAR(a.ratio, 1.08, 0.005);
  EXPECT_NEAR(a.d_scale, 0.83, 0.005);
  EXPECT_NEAR(a.d_scale, std::pow(3.0, -1.0 / 6.0), 1e-15);
  EXPECT_EQ(a.c, 1.0);
  const auto b = amrr_recursive_free(kFfd);
  EXPECT_NEAR(b.ratio, 1.09, 0.005);
  EXPECT_NEAR(b.d_scale, 0.78, 0.005);
}

TEST(BruteForceWeights, SquareSystemForTwoRuns) {
  const double a = 0.8;
  const auto w = brute_force_weights(2, 0, kCfd, a);
  // w1 + w2 = 1, w1 + w2 2^(-1/3) = a
  const double m2 = std::pow(2.0, -1.0 / 3.0);
  const double w2 = (a - 1.0) / (m2 - 1.0);
  EXPECT_NEAR(w[1], w2, 1e-12);
  EXPECT_NEAR(w[0], 1.0 - w2, 1e-12);
}

TEST(BruteForceWeights, AgreesWithClosedForm) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> uq(0.5, 3.0), ua(-1.0, 1.0);
  for (std::int64_t n = 3; n <= 50; ++n) {
    const BiasOrder o{uq(gen), uq(gen)};
    const std::int64_t n0 = n % 2 ? 0 : 5;
    const double a = ua(gen);
    const auto x = xi_matrix(o, n, n0);
    double l1, l2;
    two_decay_lambdas(x, a, l1, l2);
    const auto closed = two_decay_weights(x, l1, l2);
    const auto brute = brute_force_weights(n, n0, o, a);
    const auto s = weight_sums(brute, n0, o);
    EXPECT_NEAR(s.total, 1.0, 1e-10);
    EXPECT_NEAR(s.bias, a, 1e-10);
    for (std::int64_t j = 0; j < n; ++j) EXPECT_NEAR(closed[j], brute[j], 1e-8) << "n=" << n << " j=" << j;
  }
  EXPECT_THROW(brute_force_weights(51, 0, kCfd, 0.1), DomainError);
}
