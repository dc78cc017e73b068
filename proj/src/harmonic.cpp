#include "tempcast/harmonic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tempcast/errors.hpp"

namespace tempcast {

namespace {

constexpr double kMaxCondition = 1e12;

} // namespace

HarmonicFit fit_ols(std::span<const double> times_days, std::span<const double> values,
                    double omega, Date t0) {
    if (omega <= 0.0) throw std::invalid_argument("fit_ols: omega must be positive");
    if (times_days.size() != values.size())
        throw std::invalid_argument("fit_ols: " + std::to_string(times_days.size()) + " times vs " +
                                    std::to_string(values.size()) + " values");
    if (times_days.size() < 2)
        throw NumericError("fit_ols: need at least 2 samples, got " + std::to_string(times_days.size()));

    // Normal equations for the [cos, sin] design matrix.
    double s_cc = 0.0, s_cs = 0.0, s_ss = 0.0, b_c = 0.0, b_s = 0.0;
    for (std::size_t i = 0; i < times_days.size(); ++i) {
        const double c = std::cos(omega * times_days[i]);
        const double s = std::sin(omega * times_days[i]);
        s_cc += c * c;
        s_cs += c * s;
        s_ss += s * s;
        b_c += c * values[i];
        b_s += s * values[i];
    }

    // Eigenvalues of the symmetric PSD 2x2 normal matrix.
    const double trace_half = 0.5 * (s_cc + s_ss);
    const double gap = std::sqrt(0.25 * (s_cc - s_ss) * (s_cc - s_ss) + s_cs * s_cs);
    const double lambda_max = trace_half + gap;
    const double lambda_min = trace_half - gap;
    if (!(lambda_min > 0.0) || lambda_max / lambda_min > kMaxCondition)
        throw NumericError("fit_ols: singular or ill-conditioned normal matrix (eigenvalues " +
                           std::to_string(lambda_max) + ", " + std::to_string(lambda_min) +
                           "); samples likely cover a single phase");

    const double det = s_cc * s_ss - s_cs * s_cs;
    HarmonicFit fit;
    fit.beta1 = (s_ss * b_c - s_cs * b_s) / det;
    fit.beta2 = (s_cc * b_s - s_cs * b_c) / det;
    fit.omega = omega;
    fit.t0 = t0;
    return fit;
}

double predict(const HarmonicFit& fit, double time_days) {
    return fit.beta1 * std::cos(fit.omega * time_days) + fit.beta2 * std::sin(fit.omega * time_days);
}

std::vector<double> predict(const HarmonicFit& fit, std::span<const double> times_days) {
    std::vector<double> out(times_days.size());
    for (std::size_t i = 0; i < times_days.size(); ++i) out[i] = predict(fit, times_days[i]);
    return out;
}

} // namespace tempcast
