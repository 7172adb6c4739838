#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "biascal/stream.hpp"

namespace biascal {

/// Bias decays like delta^q1, noise standard deviation grows like delta^-q2.
struct BiasOrder {
  double q1 = 2.0;
  double q2 = 1.0;

  void validate() const;
  double sum() const noexcept { return q1 + q2; }
  /// Optimal baseline exponent 1/(2(q1+q2)).
  double alpha() const noexcept { return 0.5 / (q1 + q2); }
};

/// theta + B delta^q1 + h delta^(q1+1) + noise_scale * Z / delta^q2, Z ~ N(0, I).
struct SyntheticOracleSpec {
  std::vector<double> theta{0.0};
  std::vector<double> B{1.0};
  std::vector<double> noise_scale{1.0};
  BiasOrder order;
  std::vector<double> higher_order_bias;  // empty means zero
  bool allow_noiseless = false;

  static SyntheticOracleSpec scalar(double theta, double B, double sigma, BiasOrder order = {});

  std::size_t dim() const noexcept { return theta.size(); }
  double bias_norm2() const;
  double noise_trace() const;
  void validate() const;
};

/// A noisy black-box function. Must be deterministic in the key.
using NoisyFunction = std::function<double(std::span<const double> x, const StreamKey& key)>;

/// Generic oracle: writes one sample at perturbation delta into `out`.
struct Oracle {
  std::size_t dim = 1;
  std::function<void(double delta, const StreamKey& key, std::span<double> out)> sample;
};

std::vector<double> synthetic_sample(const SyntheticOracleSpec& spec, double delta, const StreamKey& key);
void synthetic_sample_into(const SyntheticOracleSpec& spec, double delta, const StreamKey& key,
                           std::span<double> out);
Oracle make_synthetic_oracle(SyntheticOracleSpec spec);

// Finite differences along unit vector e_coord. Without crn the two
// evaluations use key.child(0) and key.child(1); with crn both use child(0).
double cfd_sample(const NoisyFunction& f, std::span<const double> x, std::size_t coord, double delta,
                  const StreamKey& key, bool crn = false);
double ffd_sample(const NoisyFunction& f, std::span<const double> x, std::size_t coord, double delta,
                  const StreamKey& key, bool crn = false);
double bfd_sample(const NoisyFunction& f, std::span<const double> x, std::size_t coord, double delta,
                  const StreamKey& key, bool crn = false);

/// Rademacher direction drawn from key.child(2).
std::vector<double> rademacher_direction(std::size_t p, const StreamKey& key);

/// Simultaneous perturbation gradient sample.
std::vector<double> sp_sample(const NoisyFunction& f, std::span<const double> x, double delta,
                              const StreamKey& key, bool crn = false);
/// Same with an explicit direction (used for exhaustive enumeration).
std::vector<double> sp_sample_with_direction(const NoisyFunction& f, std::span<const double> x,
                                             double delta, std::span<const double> h,
                                             const StreamKey& key, bool crn = false);

}  // namespace biascal
