#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "pcp/matrix.hpp"

namespace pcp {

struct ProbeConfig {
    double l2 = 1e-3;
    std::size_t epochs = 200;
    double step0 = 0.1;  // step size step0 / sqrt(t)
};

// One-vs-rest weighted linear hinge classifiers (weight vector + bias per
// class), trained by deterministic full-batch subgradient descent.
struct LinearProbe {
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> w;  // [C, dim]
    std::vector<double> b;  // [C]
};

// Objective per class: l2/2 * |w|^2 + sum_i c_i * hinge_i / sum_i c_i, with
// hinge_i = max(0, 1 - y_i (w x_i + b)). The bias is unpenalized. Instance
// weights are importance weights from the coreset construction; duplicating
// an instance is exactly equivalent to doubling its weight. num_classes may
// exceed the classes present (absent classes keep a zero scorer); 0 derives
// it from the labels.
inline LinearProbe train_linear_probe(const Matrix& x, const std::vector<double>& instance_weights,
                                      const std::vector<std::size_t>& labels,
                                      const ProbeConfig& cfg = {}, std::size_t num_classes = 0) {
    const std::size_t n = x.rows, E = x.cols;
    if (labels.size() != n || instance_weights.size() != n)
        throw ShapeError("probe: rows, labels and weights must align");
    for (double wgt : instance_weights)
        if (!(wgt > 0.0)) throw UsageError("probe: instance weights must be positive");
    std::set<std::size_t> present(labels.begin(), labels.end());
    if (present.size() < 2) throw UsageError("probe: need at least 2 classes in the training set");
    const std::size_t C = num_classes == 0 ? *present.rbegin() + 1 : num_classes;
    if (*present.rbegin() >= C) throw UsageError("probe: label outside the declared class range");
    if (n < present.size()) throw UsageError("probe: fewer instances than classes");

    double weight_total = 0.0;
    for (double wgt : instance_weights) weight_total += wgt;

    LinearProbe probe;
    probe.dim = E;
    probe.num_classes = C;
    probe.w.assign(C * E, 0.0);
    probe.b.assign(C, 0.0);

    std::vector<double> grad(E);
    for (std::size_t c = 0; c < C; ++c) {
        if (!present.count(c)) continue;  // absent class keeps a zero scorer
        double* wc = probe.w.data() + c * E;
        double bc = 0.0;
        for (std::size_t t = 1; t <= cfg.epochs; ++t) {
            for (std::size_t e = 0; e < E; ++e) grad[e] = cfg.l2 * wc[e];
            double gb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double y = labels[i] == c ? 1.0 : -1.0;
                const double* xi = x.row(i);
                double margin = bc;
                for (std::size_t e = 0; e < E; ++e) margin += wc[e] * xi[e];
                if (y * margin < 1.0) {
                    const double s = -y * instance_weights[i] / weight_total;
                    for (std::size_t e = 0; e < E; ++e) grad[e] += s * xi[e];
                    gb += s;
                }
            }
            const double eta = cfg.step0 / std::sqrt(static_cast<double>(t));
            for (std::size_t e = 0; e < E; ++e) wc[e] -= eta * grad[e];
            bc -= eta * gb;
        }
        probe.b[c] = bc;
    }
    return probe;
}

// Raw margins w_c x + b_c per class; suitable as AUC scores.
inline Matrix probe_margins(const LinearProbe& probe, const Matrix& x) {
    if (x.cols != probe.dim)
        throw ShapeError("probe: feature dim " + std::to_string(x.cols) + " != trained dim " +
                         std::to_string(probe.dim));
    Matrix out(x.rows, probe.num_classes);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        for (std::size_t c = 0; c < probe.num_classes; ++c) {
            const double* wc = probe.w.data() + c * probe.dim;
            double m = probe.b[c];
            for (std::size_t e = 0; e < probe.dim; ++e) m += wc[e] * xi[e];
            out.at(i, c) = m;
        }
    }
    return out;
}

// Weighted hinge objective of one class, for oracle comparisons in tests.
inline double probe_objective(const LinearProbe& probe, std::size_t c, const Matrix& x,
                              const std::vector<double>& instance_weights,
                              const std::vector<std::size_t>& labels, double l2) {
    double weight_total = 0.0;
    for (double wgt : instance_weights) weight_total += wgt;
    const double* wc = probe.w.data() + c * probe.dim;
    double obj = 0.0;
    for (std::size_t e = 0; e < probe.dim; ++e) obj += 0.5 * l2 * wc[e] * wc[e];
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double y = labels[i] == c ? 1.0 : -1.0;
        double margin = probe.b[c];
        for (std::size_t e = 0; e < probe.dim; ++e) margin += wc[e] * x.at(i, e);
        hinge += instance_weights[i] * std::max(0.0, 1.0 - y * margin);
    }
    return obj + hinge / weight_total;
}

}  // namespace pcp
