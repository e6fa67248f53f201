#pragma once

#include <cstddef>
#include <vector>

#include "pcp/errors.hpp"

namespace pcp {

// Dense row-major matrix of doubles for analysis code that does not need
// gradient tracking.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    Matrix take_rows(const std::vector<std::size_t>& idx) const {
        Matrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= rows) throw UsageError("take_rows: index out of range");
            for (std::size_t c = 0; c < cols; ++c) out.at(i, c) = at(idx[i], c);
        }
        return out;
    }
};

}  // namespace pcp
