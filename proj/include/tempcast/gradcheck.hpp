#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tempcast {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_coord = 0;
};

// Central-difference check of an analytic gradient. For each coordinate,
//   g_fd = (f(x + eps e) - f(x - eps e)) / (2 eps)
// and the reported error is max_i |g[i] - g_fd[i]| / max(1, |g_fd[i]|).
// Non-finite f values raise NumericError naming the coordinate.
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point,
                           std::span<const double> analytic_grad,
                           double eps);

} // namespace tempcast
