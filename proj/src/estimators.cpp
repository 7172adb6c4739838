#include "biascal/estimators.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <sstream>

#include "biascal/errors.hpp"
#include "biascal/summation.hpp"

namespace biascal {

double DeltaSchedule::at(std::int64_t j) const {
  return scale * std::pow(static_cast<double>(j + n0), -alpha);
}

void DeltaSchedule::validate() const {
  if (!(scale > 0.0)) throw ConfigError("delta scale must be positive");
  if (!(alpha > 0.0)) throw ConfigError("delta exponent alpha must be positive");
  if (n0 < 0) throw ConfigError("n0 must be non-negative");
}

void RecursiveParams::validate() const {
  if (!(c > 0.0)) throw ConfigError("step constant c must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("step exponent beta must lie in (0, 1]");
}

namespace {

void check_n(std::int64_t n) {
  if (n < 1) throw ConfigError("budget n must be >= 1");
}

std::atomic<bool> clamp_warned{false};

double step_size(const RecursiveParams& p, std::int64_t j, std::int64_t n0) {
  const double g = p.c * std::pow(static_cast<double>(j + n0), -p.beta);
  if (g <= 1.0) return g;
  if (n0 == 0) {
    std::ostringstream os;
    os << "step size c*(j+n0)^-beta = " << g << " exceeds 1 at j = " << j << "; raise n0 or lower c";
    throw ConfigError(os.str());
  }
  if (!clamp_warned.exchange(true))
    std::clog << "warning: step size exceeds 1 at j = " << j << " (n0 = " << n0 << "); clamping to 1\n";
  return 1.0;
}

std::vector<double> initial_iterate(const RecursiveParams& p, std::size_t dim) {
  if (p.init.empty()) return std::vector<double>(dim, 0.0);
  if (p.init.size() != dim) throw ConfigError("initial iterate has the wrong dimension");
  return p.init;
}

}  // namespace

EstimatorRun baseline_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const StreamKey& key, bool keep_trace) {
  check_n(n);
  sched.validate();
  const std::size_t p = oracle.dim;
  const double delta = sched.at(n);
  std::vector<double> x(p);
  std::vector<CompensatedSum> acc(p);
  EstimatorRun run;
  run.n = n;
  for (std::int64_t j = 1; j <= n; ++j) {
    oracle.sample(delta, key.child(static_cast<std::uint64_t>(j)), x);
    for (std::size_t i = 0; i < p; ++i) acc[i] += x[i];
    if (keep_trace) {
      std::vector<double> m(p);
      for (std::size_t i = 0; i < p; ++i) m[i] = acc[i].value() / static_cast<double>(j);
      run.trace.push_back(std::move(m));
    }
  }
  run.estimate.resize(p);
  for (std::size_t i = 0; i < p; ++i) run.estimate[i] = acc[i].value() / static_cast<double>(n);
  return run;
}

EstimatorRun recursive_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                                const RecursiveParams& params, const StreamKey& key, bool keep_trace) {
  check_n(n);
  sched.validate();
  params.validate();
  const std::size_t p = oracle.dim;
  std::vector<double> theta = initial_iterate(params, p);
  std::vector<double> x(p);
  EstimatorRun run;
  run.n = n;
  for (std::int64_t j = 1; j <= n; ++j) {
    const double g = step_size(params, j, sched.n0);
    oracle.sample(sched.at(j), key.child(static_cast<std::uint64_t>(j)), x);
    for (std::size_t i = 0; i < p; ++i) theta[i] = (1.0 - g) * theta[i] + g * x[i];
    if (keep_trace) run.trace.push_back(theta);
  }
  run.estimate = std::move(theta);
  return run;
}

EstimatorRun averaged_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const RecursiveParams& params, const StreamKey& key, bool keep_trace) {
  check_n(n);
  sched.validate();
  params.validate();
  if (params.beta >= 1.0) throw ConfigError("averaged estimator needs beta < 1");
  const std::size_t p = oracle.dim;
  std::vector<double> theta = initial_iterate(params, p);
  std::vector<double> x(p);
  std::vector<CompensatedSum> acc(p);
  EstimatorRun run;
  run.n = n;
  for (std::int64_t j = 1; j <= n; ++j) {
    const double g = step_size(params, j, sched.n0);
    oracle.sample(sched.at(j), key.child(static_cast<std::uint64_t>(j)), x);
    for (std::size_t i = 0; i < p; ++i) {
      theta[i] = (1.0 - g) * theta[i] + g * x[i];
      acc[i] += theta[i];
    }
    if (keep_trace) {
      std::vector<double> m(p);
      for (std::size_t i = 0; i < p; ++i) m[i] = acc[i].value() / static_cast<double>(j);
      run.trace.push_back(std::move(m));
    }
  }
  run.estimate.resize(p);
  for (std::size_t i = 0; i < p; ++i) run.estimate[i] = acc[i].value() / static_cast<double>(n);
  return run;
}

EstimatorRun weighted_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const std::vector<double>& weights, const StreamKey& key, bool keep_trace) {
  check_n(n);
  sched.validate();
  if (static_cast<std::int64_t>(weights.size()) != n) {
    std::ostringstream os;
    os << "weight vector has length " << weights.size() << " but n = " << n;
    throw ConfigError(os.str());
  }
  const std::size_t p = oracle.dim;
  std::vector<double> x(p);
  std::vector<CompensatedSum> acc(p);
  EstimatorRun run;
  run.n = n;
  for (std::int64_t j = 1; j <= n; ++j) {
    oracle.sample(sched.at(j), key.child(static_cast<std::uint64_t>(j)), x);
    const double w = weights[static_cast<std::size_t>(j - 1)];
    for (std::size_t i = 0; i < p; ++i) acc[i] += w * x[i];
    if (keep_trace) {
      std::vector<double> m(p);
      for (std::size_t i = 0; i < p; ++i) m[i] = acc[i].value();
      run.trace.push_back(std::move(m));
    }
  }
  run.estimate.resize(p);
  for (std::size_t i = 0; i < p; ++i) run.estimate[i] = acc[i].value();
  return run;
}

EstimatorRun weighted_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const WeightScheme& scheme, const StreamKey& key, bool keep_trace) {
  return weighted_estimate(oracle, n, sched, scheme.weights, key, keep_trace);
}

void write_trace_csv(std::ostream& os, const EstimatorRun& run) {
  const std::size_t p = run.trace.empty() ? run.estimate.size() : run.trace.front().size();
  os << "j";
  for (std::size_t i = 0; i < p; ++i) os << ",x" << i;
  os << '\n';
  os.precision(17);
  for (std::size_t j = 0; j < run.trace.size(); ++j) {
    os << (j + 1);
    for (double v : run.trace[j]) os << ',' << v;
    os << '\n';
  }
}

double predict_mse_leading(const MsePredictionInput& in) {
  in.order.validate();
  const double q1 = in.order.q1, q2 = in.order.q2;
  const double alpha = in.alpha > 0.0 ? in.alpha : in.order.alpha();
  const double n = in.n;
  if (!(n >= 1.0)) throw DomainError("n must be >= 1");
  if (!(in.d > 0.0)) throw DomainError("d must be positive");
  const double B2 = in.bias_norm2, S2 = in.noise_trace;
  const double bias_rate = std::pow(n, -2.0 * q1 * alpha);
  const double d2q1 = std::pow(in.d, 2.0 * q1), d2q2 = std::pow(in.d, 2.0 * q2);
  switch (in.kind) {
    case EstimatorKind::Baseline:
      return d2q1 * B2 * bias_rate + S2 / d2q2 * std::pow(n, 2.0 * q2 * alpha - 1.0);
    case EstimatorKind::Recursive: {
      const double c = in.c, beta = in.beta;
      if (!(c > 0.0)) throw DomainError("c must be positive");
      if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("beta must lie in (0, 1]");
      if (beta < 1.0) {
        if (!(alpha < beta / (2.0 * q2)))
          throw DomainError("recursive estimator with beta < 1 needs alpha < beta/(2 q2)");
        return d2q1 * B2 * bias_rate + c * S2 / (2.0 * d2q2) * std::pow(n, 2.0 * q2 * alpha - beta);
      }
      if (!(c > q1 * alpha) || !(2.0 * c > 1.0 - 2.0 * q2 * alpha)) {
        std::ostringstream os;
        os << "divergent regime: with beta = 1 the scaled MSE is unbounded unless c > "
           << std::max(q1 * alpha, 0.5 - q2 * alpha);
        throw DomainError(os.str());
      }
      const double bc = c * std::pow(in.d, q1) / (c - q1 * alpha);
      return bc * bc * B2 * bias_rate +
             c * c * S2 / ((2.0 * c - 1.0 + 2.0 * q2 * alpha) * d2q2) * std::pow(n, 2.0 * q2 * alpha - 1.0);
    }
    case EstimatorKind::Averaged: {
      if (!(in.c > 0.0)) throw DomainError("c must be positive");
      if (!(in.beta > 0.0 && in.beta < 1.0)) throw DomainError("averaged estimator needs 0 < beta < 1");
      if (!(alpha < in.beta / (2.0 * q2)))
        throw DomainError("averaged estimator needs alpha < beta/(2 q2) for the iterates to converge");
      const double var = S2 / ((1.0 + 2.0 * q2 * alpha) * d2q2) * std::pow(n, 2.0 * q2 * alpha - 1.0);
      if (alpha > in.order.alpha() * (1.0 + 1e-12)) return var;  // bias is of lower order
      const double bc = std::pow(in.d, q1) / (1.0 - q1 * alpha);
      return bc * bc * B2 * bias_rate + var;
    }
    case EstimatorKind::Weighted:
      break;
  }
  throw DomainError("no closed-form leading MSE for this estimator kind");
}

double chung_recursion_check_const(double c, double b, double alpha, std::int64_t steps, double v0) {
  return chung_recursion_check([c](std::int64_t) { return c; }, [b](std::int64_t) { return b; }, alpha,
                               steps, v0);
}

}  // namespace biascal
