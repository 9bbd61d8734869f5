#pragma once

// CSV emission helpers.  All numeric output uses 17 significant digits so
// that reruns are byte-identical and round-trip exactly to double.

#include <cstdio>
#include <fstream>
#include <string>

#include "common.hpp"

namespace qsmc {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Compact label for embedding a time in a file name (law_t5.csv, law_t2.5.csv).
inline std::string time_label(double t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

inline std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no platform newline drift
    if (!out) throw configuration_error("cannot open output file: " + path);
    return out;
}

}  // namespace qsmc
