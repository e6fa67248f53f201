#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pcp/model.hpp"

namespace pcp {

enum class StrategyKind { nearest, nearest_k, mean, similarity_weighted_mean };

struct Strategy {
    StrategyKind kind = StrategyKind::nearest;
    std::size_t k = 10;  // only for nearest_k
};

inline std::string strategy_name(const Strategy& s) {
    switch (s.kind) {
        case StrategyKind::nearest: return "nearest";
        case StrategyKind::nearest_k: return "nearest" + std::to_string(s.k);
        case StrategyKind::mean: return "mean";
        default: return "similarity_weighted_mean";
    }
}

inline Strategy parse_strategy(const std::string& name) {
    if (name == "nearest") return {StrategyKind::nearest, 10};
    if (name == "mean") return {StrategyKind::mean, 10};
    if (name == "similarity_weighted_mean" || name == "swmean")
        return {StrategyKind::similarity_weighted_mean, 10};
    if (name.rfind("nearest", 0) == 0) {
        const std::string digits = name.substr(7);
        if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
            const std::size_t k = std::stoul(digits);
            if (k == 0) throw UsageError("strategy: nearest-k needs k >= 1");
            return {StrategyKind::nearest_k, k};
        }
    }
    throw UsageError("strategy: unknown strategy '" + name +
                     "' (expected nearest, nearest<k>, mean, similarity_weighted_mean)");
}

namespace detail {

inline std::vector<double> cosines_to_bank(std::span<const double> h, const Matrix& bank) {
    const std::size_t P = bank.rows, E = bank.cols;
    double nh = 0.0;
    for (double v : h) nh += v * v;
    if (nh == 0.0) throw NumericError("strategy: zero-norm representation, cosine undefined");
    nh = std::sqrt(nh);
    std::vector<double> cos(P);
    for (std::size_t p = 0; p < P; ++p) {
        const double* row = bank.row(p);
        double dot = 0.0, nv = 0.0;
        for (std::size_t e = 0; e < E; ++e) {
            dot += h[e] * row[e];
            nv += row[e] * row[e];
        }
        if (nv == 0.0) throw NumericError("strategy: zero-norm prototype row " + std::to_string(p));
        cos[p] = dot / (nh * std::sqrt(nv));
    }
    return cos;
}

}  // namespace detail

// The vector fed to the hypernetwork at inference time.
//   nearest: argmax-similarity prototype (ties -> lowest row index)
//   nearest_k: unweighted mean of the k most similar prototypes
//   mean: mean of the whole bank
//   similarity_weighted_mean: softmax over temperature-scaled similarities
inline std::vector<double> select_hypernet_input(std::span<const double> h, const Matrix& bank,
                                                 const Strategy& strategy, double tau) {
    if (bank.rows == 0) throw UsageError("strategy: empty prototype bank");
    if (h.size() != bank.cols)
        throw ShapeError("strategy: representation dim " + std::to_string(h.size()) +
                         " != prototype dim " + std::to_string(bank.cols));
    if (!(tau > 0.0)) throw UsageError("strategy: tau must be > 0");
    const std::size_t P = bank.rows, E = bank.cols;

    if (strategy.kind == StrategyKind::mean) {
        std::vector<double> out(E, 0.0);
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t e = 0; e < E; ++e) out[e] += bank.at(p, e);
        for (double& v : out) v /= static_cast<double>(P);
        return out;
    }

    const std::vector<double> cos = detail::cosines_to_bank(h, bank);

    switch (strategy.kind) {
        case StrategyKind::nearest: {
            std::size_t best = 0;
            for (std::size_t p = 1; p < P; ++p)
                if (cos[p] > cos[best]) best = p;
            return std::vector<double>(bank.row(best), bank.row(best) + E);
        }
        case StrategyKind::nearest_k: {
            if (strategy.k == 0 || strategy.k > P)
                throw UsageError("strategy: nearest-k needs 1 <= k <= P, got k=" +
                                 std::to_string(strategy.k) + ", P=" + std::to_string(P));
            std::vector<std::size_t> idx(P);
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (cos[a] != cos[b]) return cos[a] > cos[b];
                return a < b;
            });
            idx.resize(strategy.k);
            std::sort(idx.begin(), idx.end());  // row-order accumulation: k=P matches Mean exactly
            std::vector<double> out(E, 0.0);
            for (std::size_t i : idx)
                for (std::size_t e = 0; e < E; ++e) out[e] += bank.at(i, e);
            for (double& v : out) v /= static_cast<double>(strategy.k);
            return out;
        }
        default: {  // similarity_weighted_mean
            std::vector<double> w(P);
            double mx = cos[0] / tau;
            for (std::size_t p = 0; p < P; ++p) {
                w[p] = cos[p] / tau;
                mx = std::max(mx, w[p]);
            }
            double z = 0.0;
            for (double& v : w) {
                v = std::exp(v - mx);
                z += v;
            }
            std::vector<double> out(E, 0.0);
            for (std::size_t p = 0; p < P; ++p) {
                const double wp = w[p] / z;
                for (std::size_t e = 0; e < E; ++e) out[e] += wp * bank.at(p, e);
            }
            return out;
        }
    }
}

// Inference rule: encode, retrieve the strategy's bank vector, generate the
// patient-specific classifier, classify.
inline std::vector<double> predict(PcpModel& model, std::span<const double> frame,
                                   const Strategy& strategy, double tau) {
    NoGradGuard ng;
    Rng unused(0);
    Matrix one(1, frame.size());
    std::copy(frame.begin(), frame.end(), one.data.begin());
    Tensor h = encode_batch(model.encoder, one, Mode::eval, unused);
    const Matrix bank = model.prototype_matrix();
    const std::vector<double> u = select_hypernet_input(h.data(), bank, strategy, tau);
    const Matrix omega = hypernet_generate(u, model);
    return classify(h.data(), omega);
}

// Batched inference over precomputed eval-mode representations.
inline Matrix predict_from_reps(const PcpModel& model, const Matrix& reps, const Strategy& strategy,
                                double tau) {
    const Matrix bank = model.prototype_matrix();
    Matrix out(reps.rows, model.num_classes);
    for (std::size_t i = 0; i < reps.rows; ++i) {
        std::span<const double> h(reps.row(i), reps.cols);
        const std::vector<double> u = select_hypernet_input(h, bank, strategy, tau);
        const Matrix omega = hypernet_generate(u, model);
        const std::vector<double> posterior = classify(h, omega);
        std::copy(posterior.begin(), posterior.end(), out.row(i));
    }
    return out;
}

}  // namespace pcp
