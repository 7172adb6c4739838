#include "biascal/stream.hpp"

#include <cmath>
#include <numbers>

#include "biascal/errors.hpp"

namespace biascal {

InfeasibleError::InfeasibleError(std::int64_t n, double K, const std::string& why)
    : std::runtime_error(why), n_(n), K_(K) {}

double RandomStream::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double t = 2.0 * std::numbers::pi * uniform();
  cached_normal_ = r * std::sin(t);
  has_cached_ = true;
  return r * std::cos(t);
}

double RandomStream::exponential() noexcept { return -std::log(uniform()); }

}  // namespace biascal
