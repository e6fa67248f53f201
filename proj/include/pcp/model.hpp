#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pcp/ecg.hpp"
#include "pcp/matrix.hpp"
#include "pcp/ops.hpp"
#include "pcp/rng.hpp"
#include "pcp/tensor.hpp"

namespace pcp {

enum class Mode { train, eval };

inline constexpr std::size_t kConvKernel = 7;
inline constexpr std::size_t kConvStride = 3;
inline constexpr std::size_t kPoolWindow = 2;
inline constexpr double kDropoutRate = 0.1;
inline constexpr std::array<std::size_t, 4> kChannels = {1, 4, 16, 32};

// Static shape walk through the three conv blocks; rejects inputs that
// collapse to nothing. For a 2500-sample frame the flatten width is 320.
struct EncoderPlan {
    std::size_t input_len = 0;
    std::array<std::size_t, 3> conv_len{};
    std::array<std::size_t, 3> pool_len{};
    std::size_t flatten_width = 0;
};

inline EncoderPlan plan_encoder(std::size_t input_len) {
    EncoderPlan plan;
    plan.input_len = input_len;
    std::size_t len = input_len;
    for (int b = 0; b < 3; ++b) {
        if (len < kConvKernel)
            throw ShapeError("encoder: length " + std::to_string(len) + " entering conv block " +
                             std::to_string(b + 1) + " is shorter than the kernel");
        len = (len - kConvKernel) / kConvStride + 1;
        plan.conv_len[b] = len;
        len /= kPoolWindow;
        if (len == 0)
            throw ShapeError("encoder: conv block " + std::to_string(b + 1) +
                             " output too short for maxpool");
        plan.pool_len[b] = len;
    }
    plan.flatten_width = kChannels[3] * len;
    return plan;
}

struct ConvBlockParams {
    Tensor w;  // [Cout, Cin, K]
    Tensor b;  // [Cout]
    Tensor bn_gamma;
    Tensor bn_beta;
    std::vector<double> bn_running_mean;
    std::vector<double> bn_running_var;
};

// Table-style encoder: 3 x (conv1d k=7 s=3, batchnorm, relu, maxpool(2),
// dropout 0.1) with channels 1->4->16->32, then linear flatten->E and relu.
struct EncoderParams {
    std::array<ConvBlockParams, 3> blocks;
    Tensor fc_w;  // [flatten_width, E]
    Tensor fc_b;  // [E]
    EncoderPlan plan;
    std::size_t embed_dim = 0;
};

namespace detail {

inline Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng, double gain = 1.0) {
    const double bound = gain / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(-bound, bound);
    return Tensor(std::move(shape), std::move(v), /*requires_grad=*/true);
}

}  // namespace detail

inline EncoderParams init_encoder(std::size_t input_len, std::size_t embed_dim, Rng& rng) {
    if (embed_dim == 0) throw UsageError("encoder: embed_dim must be >= 1");
    EncoderParams enc;
    enc.plan = plan_encoder(input_len);
    enc.embed_dim = embed_dim;
    for (int b = 0; b < 3; ++b) {
        const std::size_t cin = kChannels[b], cout = kChannels[b + 1];
        ConvBlockParams& blk = enc.blocks[b];
        blk.w = detail::uniform_init({cout, cin, kConvKernel}, cin * kConvKernel, rng);
        blk.b = Tensor::zeros({cout}, true);
        blk.bn_gamma = Tensor::full({cout}, 1.0, true);
        blk.bn_beta = Tensor::zeros({cout}, true);
        blk.bn_running_mean.assign(cout, 0.0);
        blk.bn_running_var.assign(cout, 1.0);
    }
    // Small head init: representation norms start near the prototypes' unit
    // scale, and the few hundred optimizer steps of a desk-scale run can
    // dominate the initial weights.
    enc.fc_w = detail::uniform_init({enc.plan.flatten_width, embed_dim}, enc.plan.flatten_width, rng,
                                    /*gain=*/0.15);
    enc.fc_b = Tensor::zeros({embed_dim}, true);
    return enc;
}

// frames: [B, input_len] -> representations [B, E]. Dropout and batch
// statistics are active only in train mode; eval mode uses the running
// statistics and is deterministic.
inline Tensor encode_batch(EncoderParams& enc, const Matrix& frames, Mode mode, Rng& dropout_rng) {
    if (frames.cols != enc.plan.input_len)
        throw ShapeError("encode: frames have length " + std::to_string(frames.cols) +
                         ", encoder expects " + std::to_string(enc.plan.input_len));
    if (frames.rows == 0) throw UsageError("encode: empty batch");
    const bool training = mode == Mode::train;
    Tensor x({frames.rows, 1, frames.cols}, frames.data);
    for (int b = 0; b < 3; ++b) {
        ConvBlockParams& blk = enc.blocks[b];
        x = conv1d(x, blk.w, blk.b, kConvStride);
        x = batchnorm1d(x, blk.bn_gamma, blk.bn_beta, blk.bn_running_mean, blk.bn_running_var, training);
        x = relu(x);
        x = maxpool1d(x, kPoolWindow);
        x = dropout(x, kDropoutRate, training, dropout_rng);
    }
    x = flatten(x);
    return relu(linear(x, enc.fc_w, enc.fc_b));
}

// Encoder f, prototype bank V, hypernetwork g, all jointly trainable.
struct PcpModel {
    EncoderParams encoder;
    Tensor hyper_w;  // [E, E*C]
    Tensor hyper_b;  // [E*C]
    Tensor prototypes;  // [P, E], one row per training patient
    std::vector<std::uint32_t> prototype_patient_ids;  // ascending; row <-> patient bijection
    std::size_t embed_dim = 0;
    std::size_t num_classes = 0;

    std::size_t num_prototypes() const { return prototype_patient_ids.size(); }

    std::size_t prototype_row(std::uint32_t patient_id) const {
        const auto it = std::lower_bound(prototype_patient_ids.begin(), prototype_patient_ids.end(),
                                         patient_id);
        if (it == prototype_patient_ids.end() || *it != patient_id)
            throw UsageError("prototype bank: unknown patient " + std::to_string(patient_id));
        return static_cast<std::size_t>(it - prototype_patient_ids.begin());
    }

    std::vector<Tensor> parameters() {
        std::vector<Tensor> p;
        for (ConvBlockParams& blk : encoder.blocks) {
            p.push_back(blk.w);
            p.push_back(blk.b);
            p.push_back(blk.bn_gamma);
            p.push_back(blk.bn_beta);
        }
        p.push_back(encoder.fc_w);
        p.push_back(encoder.fc_b);
        p.push_back(hyper_w);
        p.push_back(hyper_b);
        p.push_back(prototypes);
        return p;
    }

    Matrix prototype_matrix() const {
        Matrix m(num_prototypes(), embed_dim);
        m.data = prototypes.data();
        return m;
    }
};

// Prototypes start at i.i.d. half-normal |N(0, 1/sqrt(E))|: unit expected
// norms keep early cosine similarities well conditioned, and non-negative
// coordinates put the bank inside the image cone of the ReLU-terminated
// encoder (a signed init caps the attainable cosine alignment well below 1
// when prototypes move slowly). No row can be identically zero (a.s.).
inline PcpModel init_model(std::size_t input_len, std::size_t embed_dim, std::size_t num_classes,
                           std::vector<std::uint32_t> train_patient_ids, std::uint64_t seed) {
    if (num_classes < 2) throw UsageError("model: need at least 2 classes");
    if (train_patient_ids.empty()) throw UsageError("model: need at least 1 training patient");
    std::sort(train_patient_ids.begin(), train_patient_ids.end());
    for (std::size_t i = 1; i < train_patient_ids.size(); ++i)
        if (train_patient_ids[i] == train_patient_ids[i - 1])
            throw UsageError("model: duplicate patient id in prototype bank");

    Rng rng = Rng::derive(seed, 0x10D31);
    PcpModel m;
    m.embed_dim = embed_dim;
    m.num_classes = num_classes;
    m.encoder = init_encoder(input_len, embed_dim, rng);
    // Generated classifiers start at unit scale: the supervised term can be
    // satisfied through the hypernetwork path instead of inflating
    // representation norms.
    m.hyper_w = detail::uniform_init({embed_dim, embed_dim * num_classes}, embed_dim, rng,
                                     /*gain=*/8.0);
    m.hyper_b = Tensor::zeros({embed_dim * num_classes}, true);

    const std::size_t P = train_patient_ids.size();
    const double sd = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    std::vector<double> v(P * embed_dim);
    for (double& x : v) x = std::abs(rng.normal(0.0, sd));
    m.prototypes = Tensor({P, embed_dim}, std::move(v), /*requires_grad=*/true);
    m.prototype_patient_ids = std::move(train_patient_ids);
    return m;
}

// Temperature-scaled cosine similarity; the value lies in [-1/tau, 1/tau].
inline double similarity(std::span<const double> h, std::span<const double> v, double tau) {
    if (h.size() != v.size())
        throw ShapeError("similarity: dimension mismatch " + std::to_string(h.size()) + " vs " +
                         std::to_string(v.size()));
    if (!(tau > 0.0)) throw UsageError("similarity: tau must be > 0");
    double dot = 0.0, nh = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        dot += h[i] * v[i];
        nh += h[i] * h[i];
        nv += v[i] * v[i];
    }
    if (nh == 0.0 || nv == 0.0) throw NumericError("similarity: zero-norm vector, cosine undefined");
    return dot / (std::sqrt(nh) * std::sqrt(nv)) / tau;
}

// omega = reshape(W u + b, E x C); the plain (inference) route.
inline Matrix hypernet_generate(std::span<const double> input, const PcpModel& model) {
    const std::size_t E = model.embed_dim, C = model.num_classes;
    if (input.size() != E)
        throw ShapeError("hypernet: input dimension " + std::to_string(input.size()) + " != E=" +
                         std::to_string(E));
    Matrix omega(E, C);
    const double* w = model.hyper_w.ptr();
    const double* b = model.hyper_b.ptr();
    for (std::size_t o = 0; o < E * C; ++o) omega.data[o] = b[o];
    for (std::size_t e = 0; e < E; ++e) {
        const double u = input[e];
        const double* wrow = w + e * E * C;
        for (std::size_t o = 0; o < E * C; ++o) omega.data[o] += u * wrow[o];
    }
    return omega;
}

// softmax(omega^T h): positive entries summing to one.
inline std::vector<double> classify(std::span<const double> h, const Matrix& omega) {
    const std::size_t E = omega.rows, C = omega.cols;
    if (h.size() != E)
        throw ShapeError("classify: representation dim " + std::to_string(h.size()) +
                         " != classifier rows " + std::to_string(E));
    std::vector<double> logits(C, 0.0);
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t c = 0; c < C; ++c) logits[c] += omega.at(e, c) * h[e];
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double z = 0.0;
    for (double& l : logits) {
        l = std::exp(l - mx);
        z += l;
    }
    for (double& l : logits) l /= z;
    return logits;
}

// Eval-mode representations of a whole frame set, computed in batches.
inline Matrix encode_dataset(PcpModel& model, const Matrix& frames, std::size_t batch = 256) {
    NoGradGuard ng;
    Rng unused(0);
    Matrix out(frames.rows, model.embed_dim);
    for (std::size_t start = 0; start < frames.rows; start += batch) {
        const std::size_t n = std::min(batch, frames.rows - start);
        Matrix chunk(n, frames.cols);
        std::copy(frames.data.begin() + static_cast<long>(start * frames.cols),
                  frames.data.begin() + static_cast<long>((start + n) * frames.cols),
                  chunk.data.begin());
        Tensor h = encode_batch(model.encoder, chunk, Mode::eval, unused);
        std::copy(h.data().begin(), h.data().end(),
                  out.data.begin() + static_cast<long>(start * model.embed_dim));
    }
    return out;
}

// Frames of a dataset as a [N, 2500] double matrix plus aligned labels.
inline Matrix frames_matrix(const EcgDataset& ds) {
    Matrix m(ds.frames.size(), kFrameLen);
    for (std::size_t i = 0; i < ds.frames.size(); ++i)
        for (std::size_t j = 0; j < kFrameLen; ++j)
            m.at(i, j) = static_cast<double>(ds.frames[i].samples[j]);
    return m;
}

inline std::vector<std::size_t> frame_labels(const EcgDataset& ds) {
    std::vector<std::size_t> labels(ds.frames.size());
    for (std::size_t i = 0; i < ds.frames.size(); ++i) labels[i] = ds.frames[i].label;
    return labels;
}

}  // namespace pcp
