#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcp {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand shapes incompatible with an op's shape formula.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A computation produced a non-finite value while numeric checks are on,
// or an input is numerically unusable (e.g. zero-norm vector under cosine).
class NumericError : public Error {
public:
    using Error::Error;
};

// API misuse: backward on a non-scalar, double backward without the
// accumulate flag, out-of-range labels, invalid configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

// Input data failed validation (bad header field, impossible record).
class DataError : public Error {
public:
    using Error::Error;
};

// A serialized file could not be decoded. Carries the byte offset at
// which decoding stopped.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

}  // namespace pcp
