#pragma once

#include <span>
#include <vector>

#include "biascal/oracles.hpp"
#include "biascal/stream.hpp"

namespace biascal {

struct QueueParams {
  double arrival_rate = 4.0;
  double service_rate = 4.0;
  int num_customers = 10;

  void validate() const;
};

struct TransientSample {
  double avg_system_time = 0.0;
  std::vector<double> per_customer_times;
};

/// System times of customers 1..k of a FIFO single-server queue that starts
/// empty. interarrivals[j] is the gap before customer j arrives (entry 0 is
/// ignored: customer 1 finds the server idle).
std::vector<double> lindley_system_times(std::span<const double> interarrivals,
                                         std::span<const double> services);

/// Unit-rate exponentials used by one transient sample, interleaved as
/// (A_1, S_1, A_2, S_2, ...). Dividing by a rate gives the actual variates.
void transient_unit_variates(const StreamKey& key, int num_customers, std::vector<double>& unit_arrivals,
                             std::vector<double>& unit_services);

TransientSample mm1_transient_sample(const QueueParams& params, const StreamKey& key,
                                     bool keep_per_customer = false);

enum class RateTarget { Arrival, Service };

/// Average system time as a noisy function of x = (arrival_rate, service_rate).
NoisyFunction mm1_average_time_function(int num_customers);

/// Central difference in one rate, two transient samples per call.
double mm1_derivative_oracle(const QueueParams& params, RateTarget target, double delta,
                             const StreamKey& key, bool crn = false);

/// Simultaneous perturbation over (arrival_rate, service_rate).
std::vector<double> mm1_gradient_oracle_sp(const QueueParams& params, double delta, const StreamKey& key,
                                           bool crn = false);

Oracle make_mm1_cfd_oracle(const QueueParams& params, RateTarget target, bool crn = false);
Oracle make_mm1_sp_oracle(const QueueParams& params, bool crn = false);

}  // namespace biascal
