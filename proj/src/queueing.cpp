#include "biascal/queueing.hpp"

#include <algorithm>
#include <sstream>

#include "biascal/errors.hpp"

namespace biascal {

void QueueParams::validate() const {
  if (!(arrival_rate > 0.0)) throw DomainError("arrival rate must be positive");
  if (!(service_rate > 0.0)) throw DomainError("service rate must be positive");
  if (num_customers < 1) throw DomainError("need at least one customer");
}

std::vector<double> lindley_system_times(std::span<const double> interarrivals,
                                         std::span<const double> services) {
  if (interarrivals.size() != services.size()) throw DomainError("variate sequences differ in length");
  const std::size_t k = services.size();
  std::vector<double> T(k);
  double w = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) w = std::max(w + services[j - 1] - interarrivals[j], 0.0);
    T[j] = w + services[j];
  }
  return T;
}

void transient_unit_variates(const StreamKey& key, int num_customers, std::vector<double>& unit_arrivals,
                             std::vector<double>& unit_services) {
  RandomStream rng(key);
  unit_arrivals.resize(static_cast<std::size_t>(num_customers));
  unit_services.resize(static_cast<std::size_t>(num_customers));
  for (int j = 0; j < num_customers; ++j) {
    unit_arrivals[j] = rng.exponential();
    unit_services[j] = rng.exponential();
  }
}

TransientSample mm1_transient_sample(const QueueParams& params, const StreamKey& key, bool keep_per_customer) {
  params.validate();
  RandomStream rng(key);
  TransientSample out;
  if (keep_per_customer) out.per_customer_times.reserve(static_cast<std::size_t>(params.num_customers));
  const double inv_l = 1.0 / params.arrival_rate, inv_m = 1.0 / params.service_rate;
  // same arithmetic as lindley_system_times, without the temporaries
  double w = 0.0, prev_s = 0.0, total = 0.0;
  for (int j = 0; j < params.num_customers; ++j) {
    const double a = rng.exponential() * inv_l;
    const double s = rng.exponential() * inv_m;
    if (j > 0) w = std::max(w + prev_s - a, 0.0);
    const double t = w + s;
    total += t;
    if (keep_per_customer) out.per_customer_times.push_back(t);
    prev_s = s;
  }
  out.avg_system_time = total / params.num_customers;
  return out;
}

NoisyFunction mm1_average_time_function(int num_customers) {
  return [num_customers](std::span<const double> x, const StreamKey& key) {
    return mm1_transient_sample(QueueParams{x[0], x[1], num_customers}, key).avg_system_time;
  };
}

namespace {

void check_perturbation(const QueueParams& p, double delta) {
  p.validate();
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (delta >= p.arrival_rate || delta >= p.service_rate) {
    std::ostringstream os;
    os << "perturbation " << delta << " would make a rate non-positive";
    throw DomainError(os.str());
  }
}

}  // namespace

double mm1_derivative_oracle(const QueueParams& params, RateTarget target, double delta, const StreamKey& key,
                             bool crn) {
  check_perturbation(params, delta);
  const double x[2] = {params.arrival_rate, params.service_rate};
  const auto fn = mm1_average_time_function(params.num_customers);
  return cfd_sample(fn, x, target == RateTarget::Arrival ? 0 : 1, delta, key, crn);
}

std::vector<double> mm1_gradient_oracle_sp(const QueueParams& params, double delta, const StreamKey& key,
                                           bool crn) {
  check_perturbation(params, delta);
  const double x[2] = {params.arrival_rate, params.service_rate};
  return sp_sample(mm1_average_time_function(params.num_customers), x, delta, key, crn);
}

Oracle make_mm1_cfd_oracle(const QueueParams& params, RateTarget target, bool crn) {
  params.validate();
  Oracle o;
  o.dim = 1;
  o.sample = [params, target, crn](double delta, const StreamKey& key, std::span<double> out) {
    out[0] = mm1_derivative_oracle(params, target, delta, key, crn);
  };
  return o;
}

Oracle make_mm1_sp_oracle(const QueueParams& params, bool crn) {
  params.validate();
  Oracle o;
  o.dim = 2;
  o.sample = [params, crn](double delta, const StreamKey& key, std::span<double> out) {
    const auto g = mm1_gradient_oracle_sp(params, delta, key, crn);
    out[0] = g[0];
    out[1] = g[1];
  };
  return o;
}

}  // namespace biascal
