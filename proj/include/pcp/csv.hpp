#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "pcp/errors.hpp"

namespace pcp {

// %.17g round-trips doubles exactly, so repeated runs emit identical bytes.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Enough digits to round-trip a float exactly.
inline std::string format_float(float v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

// Line-oriented CSV emitter. Callers are responsible for writing the header
// first; every file ends with a trailing newline.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw DataError("cannot open '" + path + "' for writing");
        path_ = path;
    }

    void line(const std::string& text) { out_ << text << '\n'; }

    void close() {
        out_.flush();
        if (!out_) throw DataError("short write to '" + path_ + "'");
        out_.close();
    }

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace pcp
