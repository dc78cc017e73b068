#include "tempcast/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tempcast/errors.hpp"

namespace tempcast {

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point,
                           std::span<const double> analytic_grad,
                           double eps) {
    if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
    if (point.size() != analytic_grad.size())
        throw std::invalid_argument("grad_check: gradient length " + std::to_string(analytic_grad.size()) +
                                    " does not match point length " + std::to_string(point.size()));

    std::vector<double> x(point.begin(), point.end());
    GradCheckResult result;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double f_plus = f(x);
        x[i] = saved - eps;
        const double f_minus = f(x);
        x[i] = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
            throw NumericError("grad_check: non-finite function value at coordinate " + std::to_string(i));
        const double g_fd = (f_plus - f_minus) / (2.0 * eps);
        const double rel = std::abs(analytic_grad[i] - g_fd) / std::max(1.0, std::abs(g_fd));
        if (rel > result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_coord = i;
        }
    }
    return result;
}

} // namespace tempcast
