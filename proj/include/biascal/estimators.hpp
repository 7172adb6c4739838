#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "biascal/calibration.hpp"
#include "biascal/oracles.hpp"
#include "biascal/stream.hpp"

namespace biascal {

/// delta_j = scale * (j + n0)^-alpha.
struct DeltaSchedule {
  double scale = 1.0;
  double alpha = 1.0 / 6.0;
  std::int64_t n0 = 0;

  double at(std::int64_t j) const;
  void validate() const;
};

/// gamma_n = c (n + n0)^-beta.
struct RecursiveParams {
  double c = 1.0;
  double beta = 1.0;
  std::vector<double> init;  // empty means zero vector

  void validate() const;
};

struct EstimatorRun {
  std::vector<double> estimate;
  std::int64_t n = 0;
  std::vector<std::vector<double>> trace;  // filled only when requested
};

// Sample j (1-based) always comes from key.child(j), so estimators given the
// same key see the same raw variates.

EstimatorRun baseline_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const StreamKey& key, bool keep_trace = false);

EstimatorRun recursive_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                                const RecursiveParams& params, const StreamKey& key,
                                bool keep_trace = false);

EstimatorRun averaged_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const RecursiveParams& params, const StreamKey& key,
                               bool keep_trace = false);

EstimatorRun weighted_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const std::vector<double>& weights, const StreamKey& key,
                               bool keep_trace = false);
EstimatorRun weighted_estimate(const Oracle& oracle, std::int64_t n, const DeltaSchedule& sched,
                               const WeightScheme& scheme, const StreamKey& key, bool keep_trace = false);

/// Writes `j,x0,x1,...` rows of an iterate trace.
void write_trace_csv(std::ostream& os, const EstimatorRun& run);

enum class EstimatorKind { Baseline, Recursive, Averaged, Weighted };

struct MsePredictionInput {
  EstimatorKind kind = EstimatorKind::Baseline;
  BiasOrder order;
  double d = 1.0;  // d for baseline, d~ otherwise
  double c = 1.0;
  double beta = 1.0;
  double alpha = -1.0;  // negative means 1/(2(q1+q2))
  double bias_norm2 = 1.0;
  double noise_trace = 1.0;
  double n = 1.0;
};

/// Leading-order MSE. Throws DomainError outside the region where the
/// leading term is known (including the divergent recursive regime).
double predict_mse_leading(const MsePredictionInput& in);

/// v_{k+1} = (1 - c_k / k^alpha) v_k + b_k / k^alpha, k = 1..steps.
template <class CSeq, class BSeq>
double chung_recursion_check(CSeq c_seq, BSeq b_seq, double alpha, std::int64_t steps, double v0 = 0.0);

double chung_recursion_check_const(double c, double b, double alpha, std::int64_t steps, double v0 = 0.0);

}  // namespace biascal

#include <cmath>

#include "biascal/errors.hpp"

template <class CSeq, class BSeq>
double biascal::chung_recursion_check(CSeq c_seq, BSeq b_seq, double alpha, std::int64_t steps, double v0) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  double v = v0;
  for (std::int64_t k = 1; k <= steps; ++k) {
    const double kp = std::pow(static_cast<double>(k), alpha);
    v = (1.0 - c_seq(k) / kp) * v + b_seq(k) / kp;
  }
  return v;
}
