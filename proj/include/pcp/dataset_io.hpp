#pragma once

#include <string>

#include "pcp/bytes.hpp"
#include "pcp/csv.hpp"
#include "pcp/ecg.hpp"

namespace pcp {

// Binary dataset format "PCPD", little-endian:
//   header: magic "PCPD", version u16, num_frames u32, num_classes u16, frame_len u16
//   per frame: patient_id u32, lead_id u8, label u16, frame_len * f32
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

inline void save_dataset(const EcgDataset& ds, const std::string& path) {
    ByteWriter w;
    w.bytes("PCPD", 4);
    w.u16(kDatasetFormatVersion);
    w.u32(static_cast<std::uint32_t>(ds.frames.size()));
    w.u16(ds.num_classes);
    w.u16(static_cast<std::uint16_t>(kFrameLen));
    for (const EcgFrame& f : ds.frames) {
        w.u32(f.patient_id);
        w.u8(f.lead_id);
        w.u16(f.label);
        for (float s : f.samples) w.f32(s);
    }
    w.write_file(path);
}

inline EcgDataset load_dataset(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("PCPD");
    const std::uint16_t version = r.u16();
    if (version != kDatasetFormatVersion)
        throw DataError("dataset '" + path + "': unsupported format version " + std::to_string(version));
    const std::uint32_t num_frames = r.u32();
    EcgDataset ds;
    ds.num_classes = r.u16();
    const std::uint16_t frame_len = r.u16();
    if (frame_len != kFrameLen)
        throw DataError("dataset '" + path + "': header frame_len " + std::to_string(frame_len) +
                        " != " + std::to_string(kFrameLen));
    ds.frames.reserve(num_frames);
    for (std::uint32_t i = 0; i < num_frames; ++i) {
        EcgFrame f;
        f.patient_id = r.u32();
        f.lead_id = r.u8();
        f.label = r.u16();
        if (f.lead_id > 11)
            throw DataError("dataset '" + path + "': record " + std::to_string(i) + " has lead_id " +
                            std::to_string(f.lead_id) + " outside 0..11");
        if (ds.num_classes > 0 && f.label >= ds.num_classes)
            throw DataError("dataset '" + path + "': record " + std::to_string(i) + " has label " +
                            std::to_string(f.label) + " >= num_classes " + std::to_string(ds.num_classes));
        f.samples.resize(kFrameLen);
        for (float& s : f.samples) s = r.f32();
        ds.frames.push_back(std::move(f));
    }
    r.expect_end();
    ds.split_tag = SplitTag::unsplit;
    return ds;
}

// CSV export for external inspection: patient_id, lead_id, label, s0..s2499.
inline void export_dataset_csv(const EcgDataset& ds, const std::string& path) {
    CsvWriter csv(path);
    std::string header = "patient_id,lead_id,label";
    for (std::size_t i = 0; i < kFrameLen; ++i) header += ",s" + std::to_string(i);
    csv.line(header);
    for (const EcgFrame& f : ds.frames) {
        std::string row = std::to_string(f.patient_id) + "," + std::to_string(f.lead_id) + "," +
                          std::to_string(f.label);
        for (float s : f.samples) {
            row += ',';
            row += format_float(s);
        }
        csv.line(row);
    }
    csv.close();
}

}  // namespace pcp
