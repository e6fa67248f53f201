#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "pcp/matrix.hpp"

namespace pcp {

// One-vs-rest ROC AUC for a single score column via the rank statistic;
// tied scores contribute half through midranks.
inline double binary_auc_ranked(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool p : positive) n_pos += p ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UsageError("auc: need both positives and negatives");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);  // ranks are 1-based
        for (std::size_t k = i; k <= j; ++k)
            if (positive[order[k]]) pos_rank_sum += midrank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// Macro-averaged one-vs-rest AUC over the classes present in `labels`.
// scores: [n, C] margins or posteriors.
inline double macro_auc(const Matrix& scores, const std::vector<std::size_t>& labels) {
    if (labels.size() != scores.rows)
        throw ShapeError("auc: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(scores.rows) + " rows");
    std::set<std::size_t> present(labels.begin(), labels.end());
    if (present.size() < 2) throw UsageError("auc: need at least 2 classes present");
    for (std::size_t c : present)
        if (c >= scores.cols)
            throw UsageError("auc: label " + std::to_string(c) + " has no score column");

    double total = 0.0;
    for (std::size_t c : present) {
        std::vector<double> col(scores.rows);
        std::vector<bool> pos(scores.rows);
        for (std::size_t i = 0; i < scores.rows; ++i) {
            col[i] = scores.at(i, c);
            pos[i] = labels[i] == c;
        }
        total += binary_auc_ranked(col, pos);
    }
    return total / static_cast<double>(present.size());
}

}  // namespace pcp
