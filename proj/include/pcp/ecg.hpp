#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "pcp/errors.hpp"
#include "pcp/rng.hpp"

namespace pcp {

inline constexpr std::size_t kFrameLen = 2500;
inline constexpr double kSampleRateHz = 250.0;

enum class SplitTag : std::uint8_t { unsplit = 0, train = 1, validation = 2, test = 3 };

inline const char* split_name(SplitTag t) {
    switch (t) {
        case SplitTag::train: return "train";
        case SplitTag::validation: return "validation";
        case SplitTag::test: return "test";
        default: return "unsplit";
    }
}

// One amplitude-normalized 2500-sample single-lead window.
struct EcgFrame {
    std::vector<float> samples;  // in [0,1]; min==0 and max==1 for non-constant raws
    std::uint32_t patient_id = 0;
    std::uint8_t lead_id = 0;
    std::uint16_t label = 0;

    bool operator==(const EcgFrame& o) const {
        return patient_id == o.patient_id && lead_id == o.lead_id && label == o.label &&
               samples == o.samples;
    }
};

struct EcgDataset {
    std::vector<EcgFrame> frames;
    std::uint16_t num_classes = 0;
    SplitTag split_tag = SplitTag::unsplit;

    std::set<std::uint32_t> patients() const {
        std::set<std::uint32_t> ids;
        for (const EcgFrame& f : frames) ids.insert(f.patient_id);
        return ids;
    }

    bool operator==(const EcgDataset& o) const {
        return num_classes == o.num_classes && split_tag == o.split_tag && frames == o.frames;
    }
};

struct CohortConfig {
    std::uint32_t num_patients = 40;
    std::uint32_t frames_per_patient = 20;  // per lead
    std::uint16_t num_classes = 4;
    std::vector<std::uint8_t> leads = {0};
    double noise_level = 0.01;
    std::uint64_t seed = 7;
};

// Min-max normalization of one window into [0,1]. A constant window maps to
// all zeros (it carries no information and zero is reproducible).
inline std::vector<float> normalize_window(std::span<const double> raw) {
    if (raw.size() != kFrameLen)
        throw UsageError("normalize_window: expected " + std::to_string(kFrameLen) + " samples, got " +
                         std::to_string(raw.size()));
    double mn = raw[0], mx = raw[0];
    for (double v : raw) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    std::vector<float> out(raw.size());
    if (mx > mn) {
        const double span = mx - mn;
        for (std::size_t i = 0; i < raw.size(); ++i)
            out[i] = static_cast<float>((raw[i] - mn) / span);
    }
    return out;
}

// Consecutive non-overlapping 2500-sample windows; the remainder is dropped.
// Each window is min-max normalized independently.
inline std::vector<std::vector<float>> frame_and_normalize(std::span<const double> raw) {
    if (raw.size() < kFrameLen)
        throw DataError("frame_and_normalize: need at least " + std::to_string(kFrameLen) +
                        " samples, got " + std::to_string(raw.size()));
    std::vector<std::vector<float>> out;
    for (std::size_t start = 0; start + kFrameLen <= raw.size(); start += kFrameLen)
        out.push_back(normalize_window(raw.subspan(start, kFrameLen)));
    return out;
}

namespace detail {

// Per-patient signal parameters drawn once per patient.
struct PatientProfile {
    double bpm;
    double jitter;
    double a_p, a_qrs, a_t, q_dip, s_dip;
    double sig_p, sig_qrs, sig_t;
    double p_off, t_off, q_off, s_off;
    double wander_amp, wander_freq, wander_phase;
    // per configured lead: relative component gains (QRS, P, T)
    std::vector<std::array<double, 3>> lead_gain;
};

inline PatientProfile draw_patient_profile(const CohortConfig& cfg, std::uint32_t patient,
                                           std::uint16_t label) {
    Rng rng = Rng::derive(cfg.seed, 0xA11CE, patient);
    PatientProfile p{};
    // Each class is a rhythm family made of two disjoint heart-rate bands (a
    // slow and a fast variant), interleaved across classes. Rate neighborhoods
    // are class-pure, so nearby patients share a label, while no monotone
    // function of rate separates any class from the rest.
    const std::uint32_t C = cfg.num_classes;
    const std::uint32_t rank = patient / C;
    const std::uint32_t per_class = (cfg.num_patients + C - 1 - label) / C;
    const std::uint32_t mode = rank % 2;  // low-rate or high-rate variant
    const std::uint32_t in_mode = rank / 2;
    const std::uint32_t per_mode = std::max(1u, (per_class + 1 - mode) / 2);
    const double band_width = 120.0 / static_cast<double>(2 * C);
    const double band_lo = 45.0 + band_width * static_cast<double>(label + mode * C);
    const double slot = (static_cast<double>(in_mode) + 0.5) / static_cast<double>(per_mode);
    p.bpm = band_lo + band_width * (0.1 + 0.8 * slot) + rng.uniform(-0.5, 0.5);
    // Beat-interval variability is a patient trait, not a class trait.
    p.jitter = rng.bernoulli(0.2) ? rng.uniform(0.10, 0.20) : rng.uniform(0.004, 0.03);
    p.a_p = rng.uniform(0.08, 0.26);
    if (rng.bernoulli(0.2)) p.a_p *= 0.15;  // a few patients with suppressed P waves
    p.a_qrs = rng.uniform(0.8, 1.6);
    p.a_t = rng.uniform(0.15, 0.55);
    p.q_dip = rng.uniform(0.03, 0.24);
    p.s_dip = rng.uniform(0.05, 0.34);
    p.sig_p = rng.uniform(0.018, 0.034);
    p.sig_qrs = rng.uniform(0.008, 0.017);
    p.sig_t = rng.uniform(0.036, 0.070);
    p.p_off = rng.uniform(0.13, 0.21);
    p.t_off = rng.uniform(0.22, 0.38);
    p.q_off = 2.2 * p.sig_qrs;
    p.s_off = 2.2 * p.sig_qrs;
    p.wander_amp = rng.uniform(0.02, 0.08);
    p.wander_freq = rng.uniform(0.10, 0.38);
    p.wander_phase = rng.uniform(0.0, 6.283185307179586);
    p.lead_gain.resize(cfg.leads.size());
    for (auto& g : p.lead_gain)
        g = {rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4)};
    return p;
}

inline double gauss_bump(double x, double sigma) {
    const double z = x / sigma;
    return std::exp(-0.5 * z * z);
}

inline std::vector<double> synth_raw_frame(const CohortConfig& cfg, const PatientProfile& p,
                                           std::size_t lead_index, std::uint32_t patient,
                                           std::uint32_t frame_index) {
    const std::uint8_t lead = cfg.leads[lead_index];
    Rng rng = Rng::derive(cfg.seed, patient, (static_cast<std::uint64_t>(lead) << 32) | frame_index,
                          0xF4A3E);
    const double period = 60.0 / p.bpm;
    const double duration = static_cast<double>(kFrameLen) / kSampleRateHz;

    // Beat train with per-beat interval jitter and a per-frame phase offset
    // of up to a quarter period.
    std::vector<double> beats;
    double t = -rng.uniform01() * 0.10 * period - period;
    while (t < duration + period) {
        beats.push_back(t);
        double z = rng.normal();
        z = std::clamp(z, -2.5, 2.5);
        t += period * std::max(0.2, 1.0 + p.jitter * z);
    }

    const double wander_phase = p.wander_phase + rng.uniform(0.0, 0.5);
    const auto& gain = p.lead_gain[lead_index];

    std::vector<double> raw(kFrameLen, 0.0);
    for (std::size_t i = 0; i < kFrameLen; ++i) {
        const double ti = static_cast<double>(i) / kSampleRateHz;
        raw[i] = p.wander_amp *
                 std::sin(6.283185307179586 * p.wander_freq * ti + wander_phase);
    }
    for (double tb : beats) {
        const double lo = tb - 0.7, hi = tb + 0.7;
        const std::size_t i0 = static_cast<std::size_t>(std::max(0.0, std::ceil(lo * kSampleRateHz)));
        const std::size_t i1 =
            std::min(kFrameLen, static_cast<std::size_t>(std::max(0.0, hi * kSampleRateHz)));
        for (std::size_t i = i0; i < i1; ++i) {
            const double dt = static_cast<double>(i) / kSampleRateHz - tb;
            double qrs = p.a_qrs * gauss_bump(dt, p.sig_qrs) -
                         p.q_dip * gauss_bump(dt + p.q_off, p.sig_qrs * 0.7) -
                         p.s_dip * gauss_bump(dt - p.s_off, p.sig_qrs * 0.7);
            const double pw = p.a_p * gauss_bump(dt + p.p_off, p.sig_p);
            const double tw = p.a_t * gauss_bump(dt - p.t_off, p.sig_t);
            raw[i] += gain[0] * qrs + gain[1] * pw + gain[2] * tw;
        }
    }
    if (cfg.noise_level > 0.0)
        for (double& v : raw) v += cfg.noise_level * rng.normal();
    return raw;
}

}  // namespace detail

inline void validate(const CohortConfig& cfg) {
    if (cfg.num_patients == 0) throw UsageError("cohort: num_patients must be >= 1");
    if (cfg.num_classes == 0) throw UsageError("cohort: num_classes must be >= 1");
    if (cfg.num_patients < cfg.num_classes)
        throw UsageError("cohort: need at least one patient per class (" +
                         std::to_string(cfg.num_patients) + " patients, " +
                         std::to_string(cfg.num_classes) + " classes)");
    if (cfg.frames_per_patient == 0) throw UsageError("cohort: frames_per_patient must be >= 1");
    if (cfg.leads.empty()) throw UsageError("cohort: need at least one lead");
    std::set<std::uint8_t> seen;
    for (std::uint8_t l : cfg.leads) {
        if (l > 11) throw UsageError("cohort: lead ids must be in 0..11, got " + std::to_string(l));
        if (!seen.insert(l).second) throw UsageError("cohort: duplicate lead " + std::to_string(l));
    }
    if (!(cfg.noise_level >= 0.0)) throw UsageError("cohort: noise_level must be >= 0");
}

// Deterministic synthetic cohort. Each patient carries one arrhythmia class;
// the class selects a rhythm family (normal / slow / fast / irregular) and
// the patient draws a heart rate and Gaussian-bump P/QRS/T morphology within
// it. Each (patient, lead) stream is an independent single-channel instance
// sharing the patient id. Frames of one patient differ by beat phase,
// interval jitter and noise.
inline EcgDataset generate_synthetic_cohort(const CohortConfig& cfg) {
    validate(cfg);
    EcgDataset ds;
    ds.num_classes = cfg.num_classes;
    ds.split_tag = SplitTag::unsplit;
    ds.frames.reserve(static_cast<std::size_t>(cfg.num_patients) * cfg.leads.size() *
                      cfg.frames_per_patient);
    for (std::uint32_t p = 0; p < cfg.num_patients; ++p) {
        const std::uint16_t label = static_cast<std::uint16_t>(p % cfg.num_classes);
        const detail::PatientProfile profile = detail::draw_patient_profile(cfg, p, label);
        for (std::size_t li = 0; li < cfg.leads.size(); ++li) {
            for (std::uint32_t f = 0; f < cfg.frames_per_patient; ++f) {
                std::vector<double> raw = detail::synth_raw_frame(cfg, profile, li, p, f);
                EcgFrame frame;
                frame.samples = normalize_window(raw);
                frame.patient_id = p;
                frame.lead_id = cfg.leads[li];
                frame.label = label;
                ds.frames.push_back(std::move(frame));
            }
        }
    }
    return ds;
}

struct SplitRatios {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

// Patient-level split: patients are shuffled by seed and partitioned; every
// frame follows its patient. Validation/test counts are the rounded ratios,
// the remainder goes to train.
inline std::array<EcgDataset, 3> patient_split(const EcgDataset& dataset, SplitRatios ratios,
                                               std::uint64_t seed) {
    if (dataset.split_tag != SplitTag::unsplit)
        throw UsageError("patient_split: dataset is already a split");
    const double total = ratios.train + ratios.validation + ratios.test;
    if (std::abs(total - 1.0) > 1e-9) throw UsageError("patient_split: ratios must sum to 1");
    const std::set<std::uint32_t> patient_set = dataset.patients();
    std::vector<std::uint32_t> ids(patient_set.begin(), patient_set.end());
    if (ids.size() < 3) throw UsageError("patient_split: need at least 3 patients");

    Rng rng = Rng::derive(seed, 0x5011D);
    rng.shuffle(ids);
    const std::size_t P = ids.size();
    const std::size_t n_val = static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(P)));
    const std::size_t n_test = static_cast<std::size_t>(std::llround(ratios.test * static_cast<double>(P)));
    if (n_val + n_test >= P) throw UsageError("patient_split: ratios leave no training patients");
    const std::size_t n_train = P - n_val - n_test;

    std::unordered_map<std::uint32_t, int> bucket;
    for (std::size_t i = 0; i < P; ++i)
        bucket[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

    std::array<EcgDataset, 3> out;
    out[0].split_tag = SplitTag::train;
    out[1].split_tag = SplitTag::validation;
    out[2].split_tag = SplitTag::test;
    for (EcgDataset& d : out) d.num_classes = dataset.num_classes;
    for (const EcgFrame& f : dataset.frames) out[bucket.at(f.patient_id)].frames.push_back(f);
    return out;
}

}  // namespace pcp
