#pragma once

#include <functional>
#include <string>
#include <vector>

#include "partforge/tensor.hpp"

namespace partforge {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central finite differences per coordinate against caller-supplied analytic
// gradients. `loss` must re-evaluate the scalar from the current contents of
// the parameter tensors; each tensor is perturbed in place and restored.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::vector<std::pair<std::string, Tensor*>>& params,
                                  const std::vector<Tensor>& analytic, double step);

} // namespace partforge
