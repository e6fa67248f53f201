#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pcp/tensor.hpp"

namespace pcp {

// Central finite-difference check of the analytic gradients of a scalar
// function of the given inputs. `fn` must rebuild its graph deterministically
// on every call (fix any dropout mask by reseeding inside fn). Returns the
// max over all coordinates of |analytic - numeric| / max(1, |numeric|);
// reports rather than throws.
inline double finite_diff_gradcheck(const std::function<Tensor()>& fn, std::vector<Tensor> inputs,
                                    double eps = 1e-5) {
    for (Tensor& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tensor out = fn();
    backward(out);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const Tensor& t : inputs)
        analytic.push_back(t.has_grad() ? t.grad() : std::vector<double>(t.numel(), 0.0));

    double max_rel = 0.0;
    NoGradGuard ng;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        Tensor& t = inputs[p];
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double saved = t.data()[i];
            t.data()[i] = saved + eps;
            const double f_plus = fn().item();
            t.data()[i] = saved - eps;
            const double f_minus = fn().item();
            t.data()[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double rel = std::abs(analytic[p][i] - numeric) / std::max(1.0, std::abs(numeric));
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace pcp
