#pragma once

#include <span>
#include <vector>

#include "tempcast/dates.hpp"

namespace tempcast {

// Two-coefficient seasonal model x(t) = beta1 cos(omega t) + beta2 sin(omega t)
// in standardized units; no intercept. t counts whole days since t0.
struct HarmonicFit {
    double beta1 = 0.0;  // cosine coefficient
    double beta2 = 0.0;  // sine coefficient
    double omega = 0.0;  // rad/day
    Date t0{};
};

// Closed-form least squares via the 2x2 normal equations. Rejects samples
// that leave the normal matrix singular or badly conditioned (all points at
// the same phase, fewer than 2 samples).
HarmonicFit fit_ols(std::span<const double> times_days, std::span<const double> values,
                    double omega, Date t0);

double predict(const HarmonicFit& fit, double time_days);
std::vector<double> predict(const HarmonicFit& fit, std::span<const double> times_days);

} // namespace tempcast
