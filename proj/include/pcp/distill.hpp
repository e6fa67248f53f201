#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pcp/coreset.hpp"
#include "pcp/ecg.hpp"
#include "pcp/matrix.hpp"
#include "pcp/metrics.hpp"
#include "pcp/model.hpp"
#include "pcp/probe.hpp"
#include "pcp/rng.hpp"

namespace pcp {

enum class CoresetMethod { uniform, lightweight, pcps, full };
enum class FeatureSpace { raw, representation, pcps };

inline const char* method_name(CoresetMethod m) {
    switch (m) {
        case CoresetMethod::uniform: return "uniform";
        case CoresetMethod::lightweight: return "lightweight";
        case CoresetMethod::pcps: return "pcps";
        default: return "full";
    }
}

inline const char* space_name(FeatureSpace s) {
    switch (s) {
        case FeatureSpace::raw: return "raw";
        case FeatureSpace::representation: return "representation";
        default: return "pcps";
    }
}

struct DistillResult {
    std::string method;
    std::string space;
    double fraction = 1.0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    double auc = 0.0;
    double runtime_seconds = 0.0;
};

// Precomputed feature views shared by all grid cells of one model/dataset.
struct DistillContext {
    std::size_t num_classes = 0;
    Matrix train_raw;                  // [N, 2500]
    Matrix train_reps;                 // [N, E]
    std::vector<std::size_t> train_labels;
    Matrix val_raw;
    Matrix val_reps;
    std::vector<std::size_t> val_labels;
    Matrix prototypes;                 // [P, E]
    std::vector<std::size_t> prototype_labels;  // patient-level labels
};

inline DistillContext make_distill_context(PcpModel& model, const EcgDataset& train_split,
                                           const EcgDataset& val_split) {
    DistillContext ctx;
    ctx.num_classes = model.num_classes;
    ctx.train_raw = frames_matrix(train_split);
    ctx.val_raw = frames_matrix(val_split);
    ctx.train_reps = encode_dataset(model, ctx.train_raw);
    ctx.val_reps = encode_dataset(model, ctx.val_raw);
    ctx.train_labels = frame_labels(train_split);
    ctx.val_labels = frame_labels(val_split);
    ctx.prototypes = model.prototype_matrix();

    std::map<std::uint32_t, std::uint16_t> label_of;
    for (const EcgFrame& f : train_split.frames) label_of[f.patient_id] = f.label;
    for (std::uint32_t id : model.prototype_patient_ids) {
        const auto it = label_of.find(id);
        if (it == label_of.end())
            throw UsageError("distill: prototype patient " + std::to_string(id) +
                             " missing from the training split");
        ctx.prototype_labels.push_back(it->second);
    }
    return ctx;
}

// One grid cell: construct the coreset, train the probe, score the
// validation set in the same feature space, return the macro AUC.
//   uniform/lightweight: k = P instances from the chosen space (raw frames or
//     representations), importance-weighted.
//   pcps: the prototype bank itself with unit weights; k = ceil(fraction * P),
//     the subset drawn uniformly without replacement per seed.
//   full: every training representation, the reference row.
inline DistillResult distill_eval(const DistillContext& ctx, CoresetMethod method, FeatureSpace space,
                                  double fraction, std::uint64_t seed, const ProbeConfig& probe_cfg = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("distill: fraction must be in (0, 1]");
    if ((method == CoresetMethod::pcps) != (space == FeatureSpace::pcps))
        throw UsageError("distill: the pcps method and the pcps space imply each other");
    if (method == CoresetMethod::full && space != FeatureSpace::representation)
        throw UsageError("distill: the full reference uses the representation space");
    const std::size_t P = ctx.prototypes.rows;

    Matrix train_x;
    std::vector<double> weights;
    std::vector<std::size_t> labels;
    std::size_t k = 0;

    if (method == CoresetMethod::pcps) {
        k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(P)));
        k = std::max<std::size_t>(1, std::min(k, P));
        std::vector<std::size_t> rows(P);
        std::iota(rows.begin(), rows.end(), 0);
        if (k < P) {
            Rng rng = Rng::derive(seed, 0xFAC7, static_cast<std::uint64_t>(fraction * 1e6));
            rng.shuffle(rows);
            rows.resize(k);
            std::sort(rows.begin(), rows.end());
        }
        train_x = ctx.prototypes.take_rows(rows);
        weights.assign(k, 1.0);
        for (std::size_t r : rows) labels.push_back(ctx.prototype_labels[r]);
    } else if (method == CoresetMethod::full) {
        k = ctx.train_reps.rows;
        train_x = ctx.train_reps;
        weights.assign(k, 1.0);
        labels = ctx.train_labels;
    } else {
        const Matrix& source = space == FeatureSpace::raw ? ctx.train_raw : ctx.train_reps;
        k = P;
        CoresetResult cs = method == CoresetMethod::uniform
                               ? uniform_coreset(source.rows, k, seed)
                               : lightweight_coreset(source, k, seed);
        train_x = source.take_rows(cs.indices);
        weights = cs.weights;
        for (std::size_t i : cs.indices) labels.push_back(ctx.train_labels[i]);
    }

    const LinearProbe probe = train_linear_probe(train_x, weights, labels, probe_cfg, ctx.num_classes);
    const Matrix& val_x = space == FeatureSpace::raw ? ctx.val_raw : ctx.val_reps;
    const Matrix margins = probe_margins(probe, val_x);
    const double auc = macro_auc(margins, ctx.val_labels);

    DistillResult res;
    res.method = method_name(method);
    res.space = space_name(space);
    res.fraction = method == CoresetMethod::pcps ? fraction : 1.0;
    res.k = k;
    res.seed = seed;
    res.auc = auc;
    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace pcp
