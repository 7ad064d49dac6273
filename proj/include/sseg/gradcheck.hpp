#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sseg/tensor.hpp"

namespace sseg {

// Central finite-difference check of a scalar-valued closure against the
// analytic gradients it produces. 64-bit only; 32-bit finite differences
// are too noisy to be meaningful.
//
// `loss_fn(with_grad)` computes the loss over the current contents of
// `inputs`; when with_grad is true it must also accumulate d(loss)/d(input)
// into each input's grad buffer.
//
// Returns the worst relative error across all elements of all inputs.
inline double grad_check(const std::function<double(bool with_grad)>& loss_fn,
                         const std::vector<Tensor64*>& inputs,
                         double h = 1e-5) {
    for (auto* t : inputs) {
        t->requires_grad();
        t->zero_grad();
    }
    loss_fn(true);

    double worst = 0.0;
    for (auto* t : inputs) {
        for (std::size_t i = 0; i < t->data.size(); ++i) {
            double saved = t->data[i];
            t->data[i] = saved + h;
            double fp = loss_fn(false);
            t->data[i] = saved - h;
            double fm = loss_fn(false);
            t->data[i] = saved;

            double numeric = (fp - fm) / (2.0 * h);
            double analytic = t->grad[i];
            double denom =
                std::max({std::fabs(numeric), std::fabs(analytic), 1e-3});
            worst = std::max(worst, std::fabs(numeric - analytic) / denom);
        }
    }
    return worst;
}

}  // namespace sseg
