#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcp/adam.hpp"
#include "pcp/ecg.hpp"
#include "pcp/losses.hpp"
#include "pcp/metrics.hpp"
#include "pcp/model.hpp"

namespace pcp {

struct TrainConfig {
    double tau = 0.1;
    std::size_t embed_dim = 128;
    std::size_t batch_size = 256;
    double learning_rate = 1e-4;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    Reduction reduction = Reduction::sum;
};

struct EpochMetrics {
    std::size_t epoch = 0;            // 1-based
    double contrastive_loss = 0.0;    // per-frame mean over the epoch
    double supervised_loss = 0.0;
    double train_auc = 0.0;           // macro AUC of the epoch's training posteriors
};

struct TrainResult {
    PcpModel model;
    std::vector<EpochMetrics> metrics;
};

inline void validate(const TrainConfig& cfg) {
    if (!(cfg.tau > 0.0)) throw UsageError("train: tau must be > 0");
    if (cfg.embed_dim == 0) throw UsageError("train: embed_dim must be >= 1");
    if (cfg.batch_size == 0) throw UsageError("train: batch_size must be >= 1");
    if (cfg.epochs == 0) throw UsageError("train: epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw UsageError("train: learning_rate must be > 0");
}

// End-to-end training: each step encodes a batch, generates per-instance
// classifier weights from the representations, and minimizes the combined
// contrastive + supervised loss with one joint Adam update over the encoder,
// the hypernetwork and the prototype bank.
inline TrainResult train_model(const EcgDataset& train_split, const TrainConfig& cfg) {
    validate(cfg);
    if (train_split.frames.empty()) throw UsageError("train: empty dataset");
    if (train_split.num_classes < 2) throw UsageError("train: need at least 2 classes");
    const auto patient_set = train_split.patients();
    if (patient_set.size() < 2) throw UsageError("train: need at least 2 patients");

    TrainResult result;
    result.model = init_model(kFrameLen, cfg.embed_dim, train_split.num_classes,
                              {patient_set.begin(), patient_set.end()}, cfg.seed);
    PcpModel& model = result.model;
    const std::size_t C = model.num_classes;

    const Matrix all_frames = frames_matrix(train_split);
    const std::vector<std::size_t> all_labels = frame_labels(train_split);
    std::vector<std::size_t> all_owner_rows(train_split.frames.size());
    for (std::size_t i = 0; i < train_split.frames.size(); ++i)
        all_owner_rows[i] = model.prototype_row(train_split.frames[i].patient_id);

    std::vector<Tensor> params = model.parameters();
    AdamState adam(params, cfg.learning_rate);
    Rng order_rng = Rng::derive(cfg.seed, 0x02D32);
    Rng dropout_rng = Rng::derive(cfg.seed, 0xD20);

    const std::size_t n = all_frames.rows;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_con = 0.0, epoch_sup = 0.0;
        Matrix epoch_scores(n, C);
        std::vector<std::size_t> epoch_labels(n);
        std::size_t scored = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, n - start);
            Matrix batch(b, all_frames.cols);
            std::vector<std::size_t> labels(b), owners(b);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t src = order[start + i];
                std::copy(all_frames.row(src), all_frames.row(src) + all_frames.cols, batch.row(i));
                labels[i] = all_labels[src];
                owners[i] = all_owner_rows[src];
            }

            Tensor reps = encode_batch(model.encoder, batch, Mode::train, dropout_rng);
            Tensor omegas = reshape(linear(reps, model.hyper_w, model.hyper_b),
                                    {b, model.embed_dim, C});
            Tensor logits = batch_vecmat(reps, omegas);
            Tensor l_sup = supervised_loss(logits, labels, cfg.reduction);
            Tensor l_con = contrastive_loss(reps, model.prototypes, owners, cfg.tau, cfg.reduction);
            Tensor loss = combined_loss(l_con, l_sup);
            backward(loss);
            adam_step(params, adam);
            for (Tensor& p : params) p.zero_grad();

            const double batch_scale = cfg.reduction == Reduction::sum ? 1.0 : static_cast<double>(b);
            epoch_con += l_con.item() * batch_scale;
            epoch_sup += l_sup.item() * batch_scale;

            // softmax of the training logits doubles as the epoch's score trace
            for (std::size_t i = 0; i < b; ++i) {
                const double* lrow = logits.ptr() + i * C;
                double mx = lrow[0];
                for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, lrow[c]);
                double z = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    epoch_scores.at(scored, c) = std::exp(lrow[c] - mx);
                    z += epoch_scores.at(scored, c);
                }
                for (std::size_t c = 0; c < C; ++c) epoch_scores.at(scored, c) /= z;
                epoch_labels[scored] = labels[i];
                ++scored;
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.contrastive_loss = epoch_con / static_cast<double>(n);
        m.supervised_loss = epoch_sup / static_cast<double>(n);
        m.train_auc = macro_auc(epoch_scores, epoch_labels);
        result.metrics.push_back(m);
    }
    return result;
}

}  // namespace pcp
