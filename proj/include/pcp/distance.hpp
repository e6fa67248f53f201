#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcp/csv.hpp"
#include "pcp/matrix.hpp"

namespace pcp {

enum class Metric { euclidean, cosine_distance };

inline const char* metric_name(Metric m) {
    return m == Metric::euclidean ? "euclidean" : "cosine_distance";
}

inline Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "cosine" || name == "cosine_distance") return Metric::cosine_distance;
    throw UsageError("metric: unknown metric '" + name + "' (expected euclidean or cosine)");
}

// A: [m, E], B: [n, E] -> [m, n]. Euclidean is the L2 norm of the row
// difference; cosine_distance is 1 - cos and lies in [0, 2].
inline Matrix pairwise_distances(const Matrix& a, const Matrix& b, Metric metric) {
    if (a.cols != b.cols)
        throw ShapeError("pairwise_distances: dimension mismatch " + std::to_string(a.cols) + " vs " +
                         std::to_string(b.cols));
    const std::size_t m = a.rows, n = b.rows, E = a.cols;
    Matrix out(m, n);
    if (metric == Metric::euclidean) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* ra = a.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double* rb = b.row(j);
                double s = 0.0;
                for (std::size_t e = 0; e < E; ++e) {
                    const double d = ra[e] - rb[e];
                    s += d * d;
                }
                out.at(i, j) = std::sqrt(s);
            }
        }
    } else {
        std::vector<double> na(m), nb(n);
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t e = 0; e < E; ++e) s += a.at(i, e) * a.at(i, e);
            if (s == 0.0) throw NumericError("pairwise_distances: zero-norm row " + std::to_string(i));
            na[i] = std::sqrt(s);
        }
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t e = 0; e < E; ++e) s += b.at(j, e) * b.at(j, e);
            if (s == 0.0)
                throw NumericError("pairwise_distances: zero-norm right row " + std::to_string(j));
            nb[j] = std::sqrt(s);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t e = 0; e < E; ++e) dot += a.at(i, e) * b.at(j, e);
                out.at(i, j) = 1.0 - dot / (na[i] * nb[j]);
            }
    }
    return out;
}

// Representations of one patient, used to group distances patient-by-patient.
struct PatientReps {
    std::uint32_t patient_id = 0;
    Matrix reps;  // [k, E], k >= 1
};

struct DistanceDistributions {
    std::vector<double> pcp_to_same;
    std::vector<double> pcp_to_different;
    std::vector<double> pcp_to_validation;
    Metric metric = Metric::euclidean;
};

// Distances from each prototype to (a) its own patient's training
// representations, (b) all other patients' training representations, and
// (c) every validation representation.
inline DistanceDistributions distance_distributions(const Matrix& bank,
                                                    const std::vector<std::uint32_t>& bank_patient_ids,
                                                    const std::vector<PatientReps>& train_reps,
                                                    const Matrix& validation_reps, Metric metric) {
    if (bank.rows != bank_patient_ids.size())
        throw ShapeError("distance_distributions: bank rows != patient ids");
    std::map<std::uint32_t, const Matrix*> by_patient;
    for (const PatientReps& pr : train_reps) {
        if (pr.reps.rows == 0)
            throw UsageError("distance_distributions: patient " + std::to_string(pr.patient_id) +
                             " has no representations");
        by_patient[pr.patient_id] = &pr.reps;
    }
    for (std::uint32_t id : bank_patient_ids)
        if (!by_patient.count(id))
            throw UsageError("distance_distributions: no training representations for patient " +
                             std::to_string(id));

    DistanceDistributions out;
    out.metric = metric;
    for (std::size_t p = 0; p < bank.rows; ++p) {
        Matrix proto(1, bank.cols);
        std::copy(bank.row(p), bank.row(p) + bank.cols, proto.data.begin());
        for (const PatientReps& pr : train_reps) {
            const Matrix d = pairwise_distances(proto, pr.reps, metric);
            auto& sink = pr.patient_id == bank_patient_ids[p] ? out.pcp_to_same : out.pcp_to_different;
            sink.insert(sink.end(), d.data.begin(), d.data.end());
        }
        if (validation_reps.rows > 0) {
            const Matrix d = pairwise_distances(proto, validation_reps, metric);
            out.pcp_to_validation.insert(out.pcp_to_validation.end(), d.data.begin(), d.data.end());
        }
    }
    return out;
}

struct DistanceMatrix {
    std::vector<std::uint32_t> row_patients;
    std::vector<std::uint32_t> col_patients;
    Matrix values;
    Metric metric = Metric::euclidean;
};

// Entry (p, q) is the mean of the underlying pairwise distances over all
// representation pairs of the two patients. Works for prototype banks (one
// row per patient) against grouped representations, and for bank-vs-bank
// comparisons across datasets.
inline DistanceMatrix patient_distance_matrix(const std::vector<PatientReps>& rows,
                                              const std::vector<PatientReps>& cols, Metric metric) {
    if (rows.empty() || cols.empty()) throw UsageError("patient_distance_matrix: empty group");
    DistanceMatrix out;
    out.metric = metric;
    out.values = Matrix(rows.size(), cols.size());
    for (const PatientReps& r : rows) {
        if (r.reps.rows == 0) throw UsageError("patient_distance_matrix: empty row group");
        out.row_patients.push_back(r.patient_id);
    }
    for (const PatientReps& c : cols) {
        if (c.reps.rows == 0) throw UsageError("patient_distance_matrix: empty column group");
        out.col_patients.push_back(c.patient_id);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const Matrix d = pairwise_distances(rows[i].reps, cols[j].reps, metric);
            double s = 0.0;
            for (double v : d.data) s += v;
            out.values.at(i, j) = s / static_cast<double>(d.data.size());
        }
    return out;
}

struct PatientPair {
    std::uint32_t row_patient = 0;
    std::uint32_t col_patient = 0;
    double distance = 0.0;
};

// Global argmin with deterministic row-major tie-break.
inline PatientPair most_similar_pair(const DistanceMatrix& m) {
    if (m.values.data.empty()) throw UsageError("most_similar_pair: empty matrix");
    std::size_t best = 0;
    for (std::size_t i = 1; i < m.values.data.size(); ++i)
        if (m.values.data[i] < m.values.data[best]) best = i;
    return {m.row_patients[best / m.values.cols], m.col_patients[best % m.values.cols],
            m.values.data[best]};
}

inline PatientPair least_similar_pair(const DistanceMatrix& m) {
    if (m.values.data.empty()) throw UsageError("least_similar_pair: empty matrix");
    std::size_t best = 0;
    for (std::size_t i = 1; i < m.values.data.size(); ++i)
        if (m.values.data[i] > m.values.data[best]) best = i;
    return {m.row_patients[best / m.values.cols], m.col_patients[best % m.values.cols],
            m.values.data[best]};
}

struct PrecisionPoint {
    double threshold = 0.0;
    std::optional<double> precision;  // absent when nothing is retrieved
    std::size_t pairs_retrieved = 0;
};

// Retrieves all pairs with distance strictly below the threshold and reports
// the fraction whose labels match. Zero retrieved pairs leave the precision
// undefined rather than 0 or 1.
inline PrecisionPoint precision_at_threshold(const DistanceMatrix& m,
                                             const std::map<std::uint32_t, std::uint16_t>& row_labels,
                                             const std::map<std::uint32_t, std::uint16_t>& col_labels,
                                             double threshold) {
    for (std::uint32_t id : m.row_patients)
        if (!row_labels.count(id))
            throw UsageError("precision: missing label for row patient " + std::to_string(id));
    for (std::uint32_t id : m.col_patients)
        if (!col_labels.count(id))
            throw UsageError("precision: missing label for column patient " + std::to_string(id));

    std::size_t retrieved = 0, matched = 0;
    for (std::size_t i = 0; i < m.values.rows; ++i)
        for (std::size_t j = 0; j < m.values.cols; ++j)
            if (m.values.at(i, j) < threshold) {
                ++retrieved;
                if (row_labels.at(m.row_patients[i]) == col_labels.at(m.col_patients[j])) ++matched;
            }
    PrecisionPoint point;
    point.threshold = threshold;
    point.pairs_retrieved = retrieved;
    if (retrieved > 0)
        point.precision = static_cast<double>(matched) / static_cast<double>(retrieved);
    return point;
}

inline std::vector<PrecisionPoint> precision_curve(const DistanceMatrix& m,
                                                   const std::map<std::uint32_t, std::uint16_t>& row_labels,
                                                   const std::map<std::uint32_t, std::uint16_t>& col_labels,
                                                   const std::vector<double>& thresholds) {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] < thresholds[i - 1]) throw UsageError("precision_curve: thresholds not sorted");
    std::vector<PrecisionPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) out.push_back(precision_at_threshold(m, row_labels, col_labels, t));
    return out;
}

// Evenly spaced thresholds over the observed range, with one final value
// beyond the maximum so the last point retrieves every pair.
inline std::vector<double> default_thresholds(const DistanceMatrix& m, std::size_t count = 25) {
    if (m.values.data.empty()) throw UsageError("default_thresholds: empty matrix");
    double lo = m.values.data[0], hi = m.values.data[0];
    for (double v : m.values.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out;
    const std::size_t steps = std::max<std::size_t>(count, 2) - 1;
    const double step = hi > lo ? (hi - lo) / static_cast<double>(steps) : 1.0;
    for (std::size_t i = 0; i <= steps; ++i) out.push_back(lo + step * static_cast<double>(i));
    out.push_back(hi + step);
    return out;
}

// --- CSV emitters -----------------------------------------------------------

inline void export_distributions_csv(const DistanceDistributions& d, const std::string& path) {
    CsvWriter csv(path);
    csv.line("group,value");
    for (double v : d.pcp_to_same) csv.line("pcp_to_same," + format_double(v));
    for (double v : d.pcp_to_different) csv.line("pcp_to_different," + format_double(v));
    for (double v : d.pcp_to_validation) csv.line("pcp_to_validation," + format_double(v));
    csv.close();
}

inline void export_distance_matrix_csv(const DistanceMatrix& m, const std::string& path) {
    CsvWriter csv(path);
    csv.line("row_patient,col_patient,distance");
    for (std::size_t i = 0; i < m.values.rows; ++i)
        for (std::size_t j = 0; j < m.values.cols; ++j)
            csv.line(std::to_string(m.row_patients[i]) + "," + std::to_string(m.col_patients[j]) + "," +
                     format_double(m.values.at(i, j)));
    csv.close();
}

inline void export_precision_curve_csv(const std::vector<PrecisionPoint>& curve,
                                       const std::string& path) {
    CsvWriter csv(path);
    csv.line("threshold,precision,count");
    for (const PrecisionPoint& p : curve)
        csv.line(format_double(p.threshold) + "," +
                 (p.precision ? format_double(*p.precision) : std::string()) + "," +
                 std::to_string(p.pairs_retrieved));
    csv.close();
}

}  // namespace pcp
