#pragma once

// Output formatting: 9 significant digits in human-facing reports, 17 in
// CSV (enough to round-trip a double), and atomic CSV emission so partial
// files never appear under a target path.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ltvc/expr.hpp"

namespace ltvc {

inline std::string format_real(double x, int significant_digits) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general,
                                   significant_digits);
    if (ec != std::errc()) throw error("number formatting failed");
    return std::string(buf, ptr);
}

inline std::string report_real(double x) { return format_real(x, 9); }
inline std::string csv_real(double x) { return format_real(x, 17); }

inline std::string render_csv(const std::string& header,
                              const std::vector<std::vector<double>>& rows) {
    std::string out = header;
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_real(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw error("cannot write file: " + tmp);
        f << content;
        if (!f.flush()) throw error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw error("rename failed: " + tmp + " -> " + path);
}

inline void write_csv_atomic(const std::string& path, const std::string& header,
                             const std::vector<std::vector<double>>& rows) {
    write_file_atomic(path, render_csv(header, rows));
}

}  // namespace ltvc
