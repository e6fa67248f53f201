#pragma once

#include <string>

#include "pcp/bytes.hpp"
#include "pcp/model.hpp"

namespace pcp {

// Model checkpoint format "PCPM", little-endian:
//   header: magic "PCPM", version u16, E u32, C u32, P u32
//   bank index: P * u32 patient ids (row order)
//   buffers (f64 each, declared order):
//     per conv block: w, b, bn_gamma, bn_beta, bn_running_mean, bn_running_var
//     fc_w, fc_b, hyper_w, hyper_b, prototypes
// Only full-length (2500-sample) encoders are serialized.
inline constexpr std::uint16_t kCheckpointFormatVersion = 1;

namespace detail {

inline void write_buffer(ByteWriter& w, const std::vector<double>& v) {
    for (double x : v) w.f64(x);
}

inline void read_buffer(ByteReader& r, std::vector<double>& v) {
    for (double& x : v) x = r.f64();
}

inline void read_tensor(ByteReader& r, Tensor& t) {
    for (double& x : t.data()) x = r.f64();
}

}  // namespace detail

inline void save_model(const PcpModel& model, const std::string& path) {
    if (model.encoder.plan.input_len != kFrameLen)
        throw UsageError("checkpoint: only encoders with input length " + std::to_string(kFrameLen) +
                         " are serialized");
    ByteWriter w;
    w.bytes("PCPM", 4);
    w.u16(kCheckpointFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.embed_dim));
    w.u32(static_cast<std::uint32_t>(model.num_classes));
    w.u32(static_cast<std::uint32_t>(model.num_prototypes()));
    for (std::uint32_t id : model.prototype_patient_ids) w.u32(id);
    for (const ConvBlockParams& blk : model.encoder.blocks) {
        detail::write_buffer(w, blk.w.data());
        detail::write_buffer(w, blk.b.data());
        detail::write_buffer(w, blk.bn_gamma.data());
        detail::write_buffer(w, blk.bn_beta.data());
        detail::write_buffer(w, blk.bn_running_mean);
        detail::write_buffer(w, blk.bn_running_var);
    }
    detail::write_buffer(w, model.encoder.fc_w.data());
    detail::write_buffer(w, model.encoder.fc_b.data());
    detail::write_buffer(w, model.hyper_w.data());
    detail::write_buffer(w, model.hyper_b.data());
    detail::write_buffer(w, model.prototypes.data());
    w.write_file(path);
}

inline PcpModel load_model(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("PCPM");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointFormatVersion)
        throw DataError("checkpoint '" + path + "': unsupported format version " +
                        std::to_string(version));
    const std::uint32_t E = r.u32();
    const std::uint32_t C = r.u32();
    const std::uint32_t P = r.u32();
    if (E == 0 || C < 2 || P == 0)
        throw DataError("checkpoint '" + path + "': implausible header (E=" + std::to_string(E) +
                        ", C=" + std::to_string(C) + ", P=" + std::to_string(P) + ")");
    std::vector<std::uint32_t> patient_ids(P);
    for (std::uint32_t& id : patient_ids) id = r.u32();
    for (std::size_t i = 1; i < patient_ids.size(); ++i)
        if (patient_ids[i] <= patient_ids[i - 1])
            throw DataError("checkpoint '" + path + "': bank patient ids not strictly ascending");

    PcpModel m = init_model(kFrameLen, E, C, patient_ids, /*seed=*/0);
    for (ConvBlockParams& blk : m.encoder.blocks) {
        detail::read_tensor(r, blk.w);
        detail::read_tensor(r, blk.b);
        detail::read_tensor(r, blk.bn_gamma);
        detail::read_tensor(r, blk.bn_beta);
        detail::read_buffer(r, blk.bn_running_mean);
        detail::read_buffer(r, blk.bn_running_var);
    }
    detail::read_tensor(r, m.encoder.fc_w);
    detail::read_tensor(r, m.encoder.fc_b);
    detail::read_tensor(r, m.hyper_w);
    detail::read_tensor(r, m.hyper_b);
    detail::read_tensor(r, m.prototypes);
    r.expect_end();
    return m;
}

}  // namespace pcp
