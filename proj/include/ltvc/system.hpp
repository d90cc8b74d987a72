#pragma once

// The LTV system model a_n(t) y^(n) + ... + a_0(t) y = x on a closed time
// domain, its on-disk format, and validation of the a_n != 0 requirement.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ltvc/expr.hpp"
#include "ltvc/numerics.hpp"

namespace ltvc {

/// Malformed system file; `line` is 1-based.
struct file_format_error : error {
    file_format_error(const std::string& what, std::size_t line_)
        : error(what + " (line " + std::to_string(line_) + ")"), line(line_) {}
    std::size_t line;
};

struct LTVSystem {
    std::size_t order = 0;
    std::vector<Expr> coeffs;  // coeffs[i] multiplies y^(i); size order+1
    double t0 = 0.0;
    std::vector<double> ics;   // y^(i)(t0), i = 0..order-1; empty for scalars
    double domain_lo = 0.0;
    double domain_hi = 0.0;
    std::string name;

    [[nodiscard]] const Expr& a(std::size_t i) const {
        if (i >= coeffs.size()) throw error("coefficient index out of range");
        return coeffs[i];
    }
    [[nodiscard]] const Expr& leading() const { return coeffs[order]; }
    [[nodiscard]] bool in_domain(double t) const {
        double slack = 1e-9 * std::max(1.0, domain_hi - domain_lo);
        return t >= domain_lo - slack && t <= domain_hi + slack;
    }
    [[nodiscard]] bool is_scalar() const { return order == 0; }
    [[nodiscard]] std::string label() const { return name.empty() ? "system" : name; }
};

// Constants relating a commutative pair, per the pair's order signature.
struct FirstOrderConstants {
    double k1 = 0.0, k0 = 0.0;
};
struct SecondOrderConstants {
    double k2 = 0.0, k1 = 0.0, k0 = 0.0;
};
// Mixed-order pair: (k1, k0) plus the free constant that the second-order
// member's bracket must equal.
struct MixedConstants {
    double k1 = 0.0, k0 = 0.0, A0 = 0.0;
};
using PairConstants = std::variant<FirstOrderConstants, SecondOrderConstants, MixedConstants>;

struct ValidationReport {
    bool pass = true;
    double min_abs_leading = 0.0;
    std::vector<double> violation_points;  // t where a_n vanishes or changes sign
    std::size_t gridpoints = 0;
};

/// Check a_n != 0 over a uniform grid on the system's domain. A sign change
/// between adjacent nodes counts as a violation even when no node itself is
/// small: the intermediate-value root would otherwise slip through the grid.
inline ValidationReport validate_system(const LTVSystem& s, std::size_t gridpoints = 1000) {
    if (gridpoints < 2) throw error("validation needs at least two grid points");
    if (s.coeffs.size() != s.order + 1)
        throw error("system has " + std::to_string(s.coeffs.size()) + " coefficients for order " +
                    std::to_string(s.order));
    ValidationReport rep;
    rep.gridpoints = gridpoints;
    rep.min_abs_leading = std::numeric_limits<double>::infinity();
    auto grid = linspace(s.domain_lo, s.domain_hi, gridpoints);
    double prev = 0.0;
    bool have_prev = false;
    for (double t : grid) {
        double v;
        try {
            v = s.leading().eval(t);
        } catch (const eval_error&) {
            rep.violation_points.push_back(t);
            rep.pass = false;
            have_prev = false;
            continue;
        }
        rep.min_abs_leading = std::min(rep.min_abs_leading, std::abs(v));
        if (v == 0.0) {
            rep.violation_points.push_back(t);
            rep.pass = false;
        } else if (have_prev && std::signbit(v) != std::signbit(prev)) {
            rep.violation_points.push_back(t);
            rep.pass = false;
        }
        prev = v;
        have_prev = true;
    }
    return rep;
}

namespace detail {

inline std::string trim(std::string_view sv) {
    std::size_t b = sv.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    std::size_t e = sv.find_last_not_of(" \t\r");
    return std::string(sv.substr(b, e - b + 1));
}

inline double parse_real_token(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw file_format_error("malformed number \"" + tok + "\"", line);
    return v;
}

inline std::vector<double> parse_real_list(const std::string& tok, std::size_t line) {
    std::string t = trim(tok);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw file_format_error("expected [ ... ] list, got \"" + tok + "\"", line);
    std::string body = t.substr(1, t.size() - 2);
    std::vector<double> out;
    std::size_t pos = 0;
    if (trim(body).empty()) return out;
    while (pos <= body.size()) {
        std::size_t comma = body.find(',', pos);
        std::string item = trim(body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                            : comma - pos));
        if (item.empty()) throw file_format_error("empty list element", line);
        out.push_back(parse_real_token(item, line));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

/// Parse the line-oriented `key = value` system format. Required keys:
/// `order`, `coeff.<i>` (quoted expression, i = 0..order), `t0`,
/// `ic` (bracket list, length = order), `domain` (bracket pair, lo <= t0 <= hi).
/// `#` starts a comment. The result is validated (a_n nonzero on a
/// 1000-point grid) before it is returned.
inline LTVSystem parse_system_file(const std::string& text, const std::string& name = "") {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;  // key -> (value, line)
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw file_format_error("expected key = value, got \"" + t + "\"", lineno);
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw file_format_error("missing key before '='", lineno);
        if (kv.count(key)) throw file_format_error("duplicate key \"" + key + "\"", lineno);
        kv[key] = {value, lineno};
    }

    auto require = [&](const std::string& key) -> std::pair<std::string, std::size_t> {
        auto it = kv.find(key);
        if (it == kv.end()) throw file_format_error("missing key \"" + key + "\"", lineno);
        return it->second;
    };

    LTVSystem s;
    s.name = name;
    {
        auto [v, ln] = require("order");
        double ov = detail::parse_real_token(v, ln);
        if (ov < 0 || ov != std::floor(ov))
            throw file_format_error("order must be a non-negative integer", ln);
        s.order = static_cast<std::size_t>(ov);
    }
    for (std::size_t i = 0; i <= s.order; ++i) {
        auto [v, ln] = require("coeff." + std::to_string(i));
        if (v.size() < 2 || v.front() != '"' || v.back() != '"')
            throw file_format_error("coefficient must be a quoted expression", ln);
        try {
            s.coeffs.push_back(parse_expr(v.substr(1, v.size() - 2)));
        } catch (const parse_error& pe) {
            throw file_format_error(std::string("bad expression: ") + pe.what(), ln);
        }
    }
    for (const auto& [key, vl] : kv) {
        if (key.rfind("coeff.", 0) != 0) continue;
        std::size_t idx = 0;
        auto tail = key.substr(6);
        auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), idx);
        if (ec != std::errc() || p != tail.data() + tail.size())
            throw file_format_error("malformed coefficient key \"" + key + "\"", vl.second);
        if (idx > s.order)
            throw file_format_error("coefficient index " + std::to_string(idx) +
                                        " exceeds order " + std::to_string(s.order),
                                    vl.second);
    }
    {
        auto [v, ln] = require("t0");
        s.t0 = detail::parse_real_token(v, ln);
    }
    {
        auto [v, ln] = require("ic");
        s.ics = detail::parse_real_list(v, ln);
        if (s.ics.size() != s.order)
            throw file_format_error("ic list has " + std::to_string(s.ics.size()) +
                                        " entries; order " + std::to_string(s.order) + " needs " +
                                        std::to_string(s.order),
                                    ln);
    }
    {
        auto [v, ln] = require("domain");
        auto d = detail::parse_real_list(v, ln);
        if (d.size() != 2 || !(d[0] < d[1]))
            throw file_format_error("domain must be [lo, hi] with lo < hi", ln);
        s.domain_lo = d[0];
        s.domain_hi = d[1];
        if (s.t0 < s.domain_lo || s.t0 > s.domain_hi)
            throw file_format_error("t0 outside domain", ln);
    }

    auto rep = validate_system(s, 1000);
    if (!rep.pass) {
        std::string what = "leading coefficient vanishes on the domain (near t=" +
                           std::to_string(rep.violation_points.front()) + ")";
        throw error(s.label() + ": " + what);
    }
    return s;
}

inline LTVSystem load_system(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw error("cannot open system file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem.erase(0, slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos && dot > 0) stem.erase(dot);
    return parse_system_file(buf.str(), stem);
}

inline std::string render_system_file(const LTVSystem& s) {
    std::ostringstream out;
    out << "order = " << s.order << "\n";
    for (std::size_t i = s.order + 1; i-- > 0;)
        out << "coeff." << i << " = \"" << s.coeffs[i].str() << "\"\n";
    out << "t0 = " << detail::format_double(s.t0) << "\n";
    out << "ic = [";
    for (std::size_t i = 0; i < s.ics.size(); ++i)
        out << (i ? ", " : "") << detail::format_double(s.ics[i]);
    out << "]\n";
    out << "domain = [" << detail::format_double(s.domain_lo) << ", "
        << detail::format_double(s.domain_hi) << "]\n";
    return out.str();
}

/// Write atomically: temp file in the same directory, then rename.
inline void write_system(const LTVSystem& s, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw error("cannot write file: " + tmp);
        f << render_system_file(s);
        if (!f.flush()) throw error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw error("rename failed: " + tmp + " -> " + path);
}

}  // namespace ltvc
