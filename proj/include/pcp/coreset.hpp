#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcp/matrix.hpp"
#include "pcp/rng.hpp"

namespace pcp {

struct CoresetResult {
    std::vector<std::size_t> indices;
    std::vector<double> weights;  // > 0
    std::string method;
    std::size_t k = 0;
};

// k i.i.d. draws with replacement and unit weights.
inline CoresetResult uniform_coreset(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (n == 0 || k == 0) throw UsageError("uniform_coreset: need n >= 1 and k >= 1");
    Rng rng = Rng::derive(seed, 0xC02E, 0);
    CoresetResult out;
    out.method = "uniform";
    out.k = k;
    out.indices.reserve(k);
    out.weights.assign(k, 1.0);
    for (std::size_t i = 0; i < k; ++i) out.indices.push_back(rng.uniform_index(n));
    return out;
}

// Lightweight coreset: the proposal q mixes a uniform term with the squared
// distance to the data mean,
//   q(x_i) = 1/(2n) + ||x_i - mu||^2 / (2 * sum_j ||x_j - mu||^2),
// k indices are sampled i.i.d. from q with replacement and weighted by
// 1/(k q). If all rows coincide the distance mass vanishes and q falls back
// to uniform.
inline CoresetResult lightweight_coreset(const Matrix& x, std::size_t k, std::uint64_t seed) {
    if (x.rows == 0 || k == 0) throw UsageError("lightweight_coreset: need n >= 1 and k >= 1");
    const std::size_t n = x.rows, E = x.cols;

    std::vector<double> mu(E, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t e = 0; e < E; ++e) mu[e] += x.at(i, e);
    for (double& v : mu) v /= static_cast<double>(n);

    std::vector<double> d2(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t e = 0; e < E; ++e) {
            const double d = x.at(i, e) - mu[e];
            s += d * d;
        }
        d2[i] = s;
        total += s;
    }

    std::vector<double> q(n);
    const double uniform_term = 0.5 / static_cast<double>(n);
    if (total > 0.0) {
        for (std::size_t i = 0; i < n; ++i) q[i] = uniform_term + 0.5 * d2[i] / total;
    } else {
        for (std::size_t i = 0; i < n; ++i) q[i] = 1.0 / static_cast<double>(n);
    }

    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += q[i];
        cdf[i] = acc;
    }
    cdf[n - 1] = 1.0;  // guard against rounding in the final bucket

    Rng rng = Rng::derive(seed, 0xC02E, 1);
    CoresetResult out;
    out.method = "lightweight";
    out.k = k;
    out.indices.reserve(k);
    out.weights.reserve(k);
    const double kd = static_cast<double>(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        const double u = rng.uniform01();
        const std::size_t i = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        out.indices.push_back(i);
        out.weights.push_back(1.0 / (kd * q[i]));
    }
    return out;
}

}  // namespace pcp
