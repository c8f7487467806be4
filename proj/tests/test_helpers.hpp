#pragma once

#include <random>

#include "membrane/analytic_fields.hpp"
#include "membrane/common.hpp"

namespace membrane::testing {

// Deterministic sampler of points strictly inside the cone K = { r < t-1 }.
class ConePointSampler {
  public:
    explicit ConePointSampler(std::uint64_t seed) : rng_(seed) {}

    SpacetimePoint next(double t_min = 2.0, double t_max = 40.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        // log-uniform in t so both early and late times are exercised
        const double t = t_min * std::pow(t_max / t_min, unit(rng_));
        const double r = 0.95 * (t - 1.0) * unit(rng_);
        const double th = 2.0 * M_PI * unit(rng_);
        return SpacetimePoint::cartesian(t, r * std::cos(th), r * std::sin(th));
    }

    double uniform(double a, double b) {
        std::uniform_real_distribution<double> d(a, b);
        return d(rng_);
    }

  private:
    std::mt19937_64 rng_;
};

inline double rel_diff(double a, double b, double scale = 0.0) {
    const double denom = std::max({std::abs(a), std::abs(b), scale, 1e-300});
    return std::abs(a - b) / denom;
}

}  // namespace membrane::testing
