#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pcp/tensor.hpp"

namespace pcp {

// Per-parameter Adam state with bias correction. Moment buffers are
// zero-initialized and shape-matched to the parameters they track.
struct AdamState {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    explicit AdamState(const std::vector<Tensor>& params, double lr = 1e-4)
        : learning_rate(lr) {
        first_moment.reserve(params.size());
        second_moment.reserve(params.size());
        for (const Tensor& p : params) {
            first_moment.emplace_back(p.numel(), 0.0);
            second_moment.emplace_back(p.numel(), 0.0);
        }
    }
};

// One Adam update over all parameters. Parameters without a computed grad
// are treated as having zero gradient (their moments still decay).
inline void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (params.size() != state.first_moment.size())
        throw UsageError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& param = params[p];
        std::vector<double>& m = state.first_moment[p];
        std::vector<double>& v = state.second_moment[p];
        if (m.size() != param.numel())
            throw UsageError("adam_step: moment buffer size mismatch at parameter " + std::to_string(p));
        const bool has_grad = param.has_grad();
        if (has_grad && param.grad().size() != param.numel())
            throw ShapeError("adam_step: grad/param shape mismatch at parameter " + std::to_string(p));
        double* w = param.ptr();
        const double* g = has_grad ? param.grad().data() : nullptr;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double gi = g ? g[i] : 0.0;
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace pcp
