#pragma once

#include <cmath>
#include <vector>

#include "pcp/matrix.hpp"
#include "pcp/ops.hpp"

namespace pcp {

// Batch contrastive loss: each representation is attracted to its owner's
// prototype against all P prototypes, through a log-sum-exp-stable softmax
// over temperature-scaled cosine similarities.
inline Tensor contrastive_loss(const Tensor& reps, const Tensor& prototypes,
                               const std::vector<std::size_t>& owner_rows, double tau,
                               Reduction reduction = Reduction::sum) {
    if (!(tau > 0.0)) throw UsageError("contrastive_loss: tau must be > 0");
    if (reps.ndim() != 2 || prototypes.ndim() != 2)
        throw ShapeError("contrastive_loss: expected [B,E] reps and [P,E] prototypes");
    for (std::size_t r : owner_rows)
        if (r >= prototypes.dim(0))
            throw UsageError("contrastive_loss: owner row " + std::to_string(r) +
                             " outside prototype bank of size " + std::to_string(prototypes.dim(0)));
    Tensor sims = scale(cosine_similarity(reps, prototypes), 1.0 / tau);
    return nll_loss(log_softmax(sims), owner_rows, reduction);
}

// Supervised loss on raw logits (the gradient route used in training).
inline Tensor supervised_loss(const Tensor& logits, const std::vector<std::size_t>& labels,
                              Reduction reduction = Reduction::sum) {
    return nll_loss(log_softmax(logits), labels, reduction);
}

inline Tensor combined_loss(const Tensor& contrastive, const Tensor& supervised) {
    return add(contrastive, supervised);
}

// -sum_i log p[i, y_i] over an already-normalized posterior matrix.
inline double supervised_loss_from_posteriors(const Matrix& posteriors,
                                              const std::vector<std::size_t>& labels,
                                              Reduction reduction = Reduction::sum) {
    if (labels.size() != posteriors.rows)
        throw ShapeError("supervised_loss: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(posteriors.rows) + " rows");
    double loss = 0.0;
    for (std::size_t i = 0; i < posteriors.rows; ++i) {
        if (labels[i] >= posteriors.cols)
            throw UsageError("supervised_loss: label " + std::to_string(labels[i]) + " out of range");
        loss -= std::log(posteriors.at(i, labels[i]));
    }
    if (reduction == Reduction::mean && posteriors.rows > 0)
        loss /= static_cast<double>(posteriors.rows);
    return loss;
}

}  // namespace pcp
