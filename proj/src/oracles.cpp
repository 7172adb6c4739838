#include "biascal/oracles.hpp"

#include <cmath>
#include <sstream>

#include "biascal/errors.hpp"

namespace biascal {

void BiasOrder::validate() const {
  if (!(q1 > 0.0) || !std::isfinite(q1)) throw DomainError("q1 must be positive");
  if (!(q2 > 0.0) || !std::isfinite(q2)) throw DomainError("q2 must be positive");
}

SyntheticOracleSpec SyntheticOracleSpec::scalar(double theta, double B, double sigma, BiasOrder order) {
  SyntheticOracleSpec s;
  s.theta = {theta};
  s.B = {B};
  s.noise_scale = {sigma};
  s.order = order;
  s.allow_noiseless = sigma == 0.0;
  return s;
}

double SyntheticOracleSpec::bias_norm2() const {
  double s = 0.0;
  for (double b : B) s += b * b;
  return s;
}

double SyntheticOracleSpec::noise_trace() const {
  double s = 0.0;
  for (double v : noise_scale) s += v * v;
  return s;
}

void SyntheticOracleSpec::validate() const {
  order.validate();
  const auto p = theta.size();
  if (p == 0) throw ConfigError("theta must have dimension >= 1");
  if (B.size() != p || noise_scale.size() != p)
    throw ConfigError("theta, B and noise_scale must have the same dimension");
  if (!higher_order_bias.empty() && higher_order_bias.size() != p)
    throw ConfigError("higher_order_bias has the wrong dimension");
  // a zero-bias, zero-noise model is allowed only when explicitly marked noiseless
  if (bias_norm2() == 0.0 && !allow_noiseless) throw ConfigError("B must have a nonzero coordinate");
  if (noise_trace() == 0.0 && !allow_noiseless) throw ConfigError("noise_scale must be nonzero");
}

void synthetic_sample_into(const SyntheticOracleSpec& spec, double delta, const StreamKey& key,
                           std::span<double> out) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  const double bias_scale = std::pow(delta, spec.order.q1);
  const double noise_div = std::pow(delta, spec.order.q2);
  const bool higher = !spec.higher_order_bias.empty();
  RandomStream rng(key);
  for (std::size_t i = 0; i < spec.theta.size(); ++i) {
    double v = spec.theta[i] + spec.B[i] * bias_scale;
    if (higher) v += spec.higher_order_bias[i] * bias_scale * delta;
    // always draw so coordinates keep the same variates whatever the scales
    const double z = rng.normal();
    if (spec.noise_scale[i] != 0.0) v += spec.noise_scale[i] * z / noise_div;
    out[i] = v;
  }
}

std::vector<double> synthetic_sample(const SyntheticOracleSpec& spec, double delta, const StreamKey& key) {
  std::vector<double> out(spec.dim());
  synthetic_sample_into(spec, delta, key, out);
  return out;
}

Oracle make_synthetic_oracle(SyntheticOracleSpec spec) {
  spec.validate();
  Oracle o;
  o.dim = spec.dim();
  o.sample = [spec = std::move(spec)](double delta, const StreamKey& key, std::span<double> out) {
    synthetic_sample_into(spec, delta, key, out);
  };
  return o;
}

namespace {

void check_fd(std::span<const double> x, std::size_t coord, double delta) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (coord >= x.size()) {
    std::ostringstream os;
    os << "coordinate " << coord << " out of range for dimension " << x.size();
    throw DomainError(os.str());
  }
}

std::vector<double> shifted(std::span<const double> x, std::size_t coord, double step) {
  std::vector<double> y(x.begin(), x.end());
  y[coord] += step;
  return y;
}

}  // namespace

double cfd_sample(const NoisyFunction& f, std::span<const double> x, std::size_t coord, double delta,
                  const StreamKey& key, bool crn) {
  check_fd(x, coord, delta);
  const auto up = shifted(x, coord, delta);
  const auto dn = shifted(x, coord, -delta);
  return (f(up, key.child(0)) - f(dn, key.child(crn ? 0 : 1))) / (2.0 * delta);
}

double ffd_sample(const NoisyFunction& f, std::span<const double> x, std::size_t coord, double delta,
                  const StreamKey& key, bool crn) {
  check_fd(x, coord, delta);
  const auto up = shifted(x, coord, delta);
  return (f(up, key.child(0)) - f(x, key.child(crn ? 0 : 1))) / delta;
}

double bfd_sample(const NoisyFunction& f, std::span<const double> x, std::size_t coord, double delta,
                  const StreamKey& key, bool crn) {
  check_fd(x, coord, delta);
  const auto dn = shifted(x, coord, -delta);
  return (f(x, key.child(0)) - f(dn, key.child(crn ? 0 : 1))) / delta;
}

std::vector<double> rademacher_direction(std::size_t p, const StreamKey& key) {
  RandomStream rng(key.child(2));
  std::vector<double> h(p);
  for (auto& v : h) v = rng.rademacher();
  return h;
}

std::vector<double> sp_sample_with_direction(const NoisyFunction& f, std::span<const double> x,
                                             double delta, std::span<const double> h,
                                             const StreamKey& key, bool crn) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  if (h.size() != x.size()) throw DomainError("direction and point dimensions differ");
  std::vector<double> up(x.begin(), x.end()), dn(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    up[i] += delta * h[i];
    dn[i] -= delta * h[i];
  }
  const double diff = (f(up, key.child(0)) - f(dn, key.child(crn ? 0 : 1))) / (2.0 * delta);
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = diff / h[i];
  return g;
}

std::vector<double> sp_sample(const NoisyFunction& f, std::span<const double> x, double delta,
                              const StreamKey& key, bool crn) {
  const auto h = rademacher_direction(x.size(), key);
  return sp_sample_with_direction(f, x, delta, h, key, crn);
}

}  // namespace biascal
