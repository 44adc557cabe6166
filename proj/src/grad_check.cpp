#include "partforge/grad_check.hpp"

#include <cmath>

#include "partforge/error.hpp"

namespace partforge {

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::vector<std::pair<std::string, Tensor*>>& params,
                                  const std::vector<Tensor>& analytic, double step) {
    if (params.size() != analytic.size())
        fail(ErrorKind::contract, "finite_diff_check: analytic gradient count mismatch");

    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p].second;
        const Tensor& grad = analytic[p];
        if (!theta.same_shape(grad))
            fail(ErrorKind::shape, "finite_diff_check: gradient shape mismatch for " + params[p].first);
        for (std::int64_t i = 0; i < theta.numel(); ++i) {
            const double saved = theta.at(i);
            theta.at(i) = saved + step;
            const double up = loss();
            theta.at(i) = saved - step;
            const double down = loss();
            theta.at(i) = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double analytic_i = grad.at(i);
            const double denom = std::max({std::abs(analytic_i), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic_i - numeric) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = params[p].first;
                report.worst_index = i;
                report.worst_analytic = analytic_i;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

} // namespace partforge
