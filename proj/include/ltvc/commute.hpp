#pragma once

// Algebraic commutativity of a system pair. Two systems commute exactly when
// one's coefficients are a constant-coefficient combination of the other's;
// extraction inverts those combinations on a grid and measures how constant
// the would-be constants actually are. Synthesis builds a partner from given
// constants symbolically. The unrelaxed check adds the initial-condition
// conditions (equal nonzero initial states and k0 = 1 - k1).

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ltvc/expr.hpp"
#include "ltvc/impulse.hpp"
#include "ltvc/numerics.hpp"
#include "ltvc/reporting.hpp"
#include "ltvc/system.hpp"

namespace ltvc {

enum class Verdict { commutative, not_commutative, inconclusive };

enum class UnrelaxedStatus { not_applicable, commutative, not_commutative };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::commutative: return "commutative";
        case Verdict::not_commutative: return "not-commutative";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline const char* to_string(UnrelaxedStatus v) {
    switch (v) {
        case UnrelaxedStatus::not_applicable: return "not-applicable";
        case UnrelaxedStatus::commutative: return "commutative";
        case UnrelaxedStatus::not_commutative: return "not-commutative";
    }
    return "?";
}

struct CommutativityReport {
    std::string first_name, second_name;
    std::string kind;  // order signature: "1-1", "2-1", "1-2", "2-2"
    Verdict verdict = Verdict::inconclusive;
    std::optional<PairConstants> constants;
    // (name, max deviation of the would-be constant over the grid, relative
    // to max(1, |mean|)).
    std::vector<std::pair<std::string, double>> residuals;
    UnrelaxedStatus unrelaxed = UnrelaxedStatus::not_applicable;
    double initial_state_residual = std::numeric_limits<double>::quiet_NaN();
    double initial_slope_residual = std::numeric_limits<double>::quiet_NaN();
    double constant_sum_residual = std::numeric_limits<double>::quiet_NaN();
    std::size_t grid_points = 0;
    double tol = 0.0;
    std::string note;

    [[nodiscard]] double max_residual() const {
        double m = 0.0;
        for (const auto& [n, r] : residuals) m = std::max(m, r);
        return m;
    }
};

namespace detail {

struct ConstStream {
    double mean = 0.0;
    double residual = 0.0;  // max |v - mean| / max(1, |mean|)
};

template <class F>
ConstStream constancy(F&& f, const std::vector<double>& grid) {
    double sum = 0.0;
    std::vector<double> vals;
    vals.reserve(grid.size());
    for (double t : grid) {
        double v = f(t);
        if (!std::isfinite(v)) throw error("non-finite value while extracting constants");
        vals.push_back(v);
        sum += v;
    }
    ConstStream out;
    out.mean = sum / static_cast<double>(vals.size());
    double dev = 0.0;
    for (double v : vals) dev = std::max(dev, std::abs(v - out.mean));
    out.residual = dev / std::max(1.0, std::abs(out.mean));
    return out;
}

inline void check_extraction_grid(const LTVSystem& A, const LTVSystem& B,
                                  const std::vector<double>& grid) {
    if (grid.size() < 2) throw error("extraction grid needs at least two points");
    require_in_domain(A, grid.front(), "grid start");
    require_in_domain(A, grid.back(), "grid end");
    require_in_domain(B, grid.front(), "grid start");
    require_in_domain(B, grid.back(), "grid end");
}

inline void require_positive_on(const LTVSystem& s, const Expr& e, const std::vector<double>& grid,
                                const char* what) {
    for (double t : grid)
        if (!(e.eval(t) > 0.0))
            throw error(s.label() + ": " + what + " must be positive on the domain (fails at t=" +
                        std::to_string(t) + ")");
}

inline LTVSystem make_partner(const LTVSystem& src, std::size_t order, std::vector<Expr> coeffs) {
    LTVSystem out;
    out.order = order;
    out.coeffs = std::move(coeffs);
    out.t0 = src.t0;
    out.ics.assign(order, 0.0);  // synthesized partners are relaxed
    out.domain_lo = src.domain_lo;
    out.domain_hi = src.domain_hi;
    out.name = src.label() + "-partner";
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Second-order eligibility bracket
// ---------------------------------------------------------------------------

/// a0 - (4 a1^2 + 3 da2^2 - 8 a1 da2 + 8 da1 a2 - 4 a2 dda2) / (16 a2).
/// A second-order system has non-scalar commutative pairs exactly when this
/// expression is constant on the domain; its value is the pair's free
/// constant.
inline Expr second_order_bracket(const LTVSystem& A) {
    if (A.order != 2) throw error(A.label() + ": bracket requires order 2");
    const Expr& a2 = A.a(2);
    const Expr& a1 = A.a(1);
    const Expr& a0 = A.a(0);
    Expr da2 = a2.derivative();
    Expr dda2 = da2.derivative();
    Expr da1 = a1.derivative();
    Expr num = Expr(4) * a1 * a1 + Expr(3) * da2 * da2 - Expr(8) * a1 * da2 +
               Expr(8) * da1 * a2 - Expr(4) * a2 * dda2;
    return a0 - num / (Expr(16) * a2);
}

struct BracketConstancy {
    double mean = 0.0;
    double residual = 0.0;
};

inline BracketConstancy bracket_constancy(const LTVSystem& A, const std::vector<double>& grid) {
    Expr br = second_order_bracket(A);
    auto cs = detail::constancy([&](double t) { return br.eval(t); }, grid);
    return {cs.mean, cs.residual};
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// Invert b1 = k1 a1, b0 = k1 a0 + k0 on the grid. Constants are grid means;
/// residuals are max deviations. Commutative iff every residual < tol and
/// the leading constant is nonzero.
inline CommutativityReport extract_first_order_constants(const LTVSystem& A, const LTVSystem& B,
                                                         const std::vector<double>& grid,
                                                         double tol = 1e-8) {
    if (A.order != 1 || B.order != 1)
        throw error("first-order extraction requires two order-1 systems");
    detail::check_extraction_grid(A, B, grid);
    CommutativityReport rep;
    rep.first_name = A.label();
    rep.second_name = B.label();
    rep.kind = "1-1";
    rep.grid_points = grid.size();
    rep.tol = tol;

    auto k1s = detail::constancy([&](double t) { return B.a(1).eval(t) / A.a(1).eval(t); }, grid);
    double k1 = k1s.mean;
    auto k0s = detail::constancy([&](double t) { return B.a(0).eval(t) - k1 * A.a(0).eval(t); },
                                 grid);
    double k0 = k0s.mean;
    rep.constants = FirstOrderConstants{k1, k0};
    rep.residuals = {{"k1", k1s.residual}, {"k0", k0s.residual}};
    if (std::abs(k1) <= tol) {
        rep.verdict = Verdict::inconclusive;
        rep.note = "leading constant is numerically zero; not a genuine first-order pair";
    } else {
        rep.verdict = rep.max_residual() < tol ? Verdict::commutative : Verdict::not_commutative;
    }
    return rep;
}

/// Dispatch extraction on the (order A, order B) signature; orders must be
/// 1 or 2. Mixed signatures use the square-root coefficient relations, the
/// 2-2 signature the full three-constant relation.
inline CommutativityReport extract_pair_constants(const LTVSystem& A, const LTVSystem& B,
                                                  const std::vector<double>& grid,
                                                  double tol = 1e-8) {
    if (A.order == 1 && B.order == 1) return extract_first_order_constants(A, B, grid, tol);
    detail::check_extraction_grid(A, B, grid);
    CommutativityReport rep;
    rep.first_name = A.label();
    rep.second_name = B.label();
    rep.grid_points = grid.size();
    rep.tol = tol;

    if (A.order == 2 && B.order == 1) {
        rep.kind = "2-1";
        detail::require_positive_on(A, A.a(2), grid, "leading coefficient");
        Expr da2 = A.a(2).derivative();
        auto k1s = detail::constancy(
            [&](double t) { return B.a(1).eval(t) / std::sqrt(A.a(2).eval(t)); }, grid);
        double k1 = k1s.mean;
        auto k0s = detail::constancy(
            [&](double t) {
                double s = std::sqrt(A.a(2).eval(t));
                double mid = (2.0 * A.a(1).eval(t) - da2.eval(t)) / (4.0 * s);
                return B.a(0).eval(t) - k1 * mid;
            },
            grid);
        auto br = bracket_constancy(A, grid);
        rep.constants = MixedConstants{k1, k0s.mean, br.mean};
        rep.residuals = {{"k1", k1s.residual}, {"k0", k0s.residual}, {"A0", br.residual}};
        if (std::abs(k1) <= tol) {
            rep.verdict = Verdict::inconclusive;
            rep.note = "leading constant is numerically zero; partner degenerates to a scalar";
        } else {
            rep.verdict =
                rep.max_residual() < tol ? Verdict::commutative : Verdict::not_commutative;
        }
        return rep;
    }

    if (A.order == 1 && B.order == 2) {
        rep.kind = "1-2";
        detail::require_positive_on(B, B.a(2), grid, "leading coefficient");
        Expr df1 = A.a(1).derivative();
        Expr df0 = A.a(0).derivative();
        // l1 enters every relation squared, so its sign is unobservable;
        // the positive root is canonical.
        auto l1sq = detail::constancy(
            [&](double t) {
                double f1 = A.a(1).eval(t);
                return f1 * f1 / B.a(2).eval(t);
            },
            grid);
        if (!(l1sq.mean > 0.0))
            throw error(B.label() + ": leading coefficient must be positive for a mixed pair");
        double l1 = std::sqrt(l1sq.mean);
        auto l0s = detail::constancy(
            [&](double t) {
                double f1 = A.a(1).eval(t);
                return (2.0 * A.a(0).eval(t) + df1.eval(t) -
                        B.a(1).eval(t) * l1 * l1 / f1) /
                       2.0;
            },
            grid);
        double l0 = l0s.mean;
        auto c0s = detail::constancy(
            [&](double t) {
                double d = (A.a(0).eval(t) - l0) / l1;
                return B.a(0).eval(t) - d * d - A.a(1).eval(t) * df0.eval(t) / (l1 * l1);
            },
            grid);
        rep.constants = MixedConstants{l1, l0, c0s.mean};
        rep.residuals = {{"l1", l1sq.residual}, {"l0", l0s.residual}, {"C0", c0s.residual}};
        rep.verdict = rep.max_residual() < tol ? Verdict::commutative : Verdict::not_commutative;
        return rep;
    }

    if (A.order == 2 && B.order == 2) {
        rep.kind = "2-2";
        detail::require_positive_on(A, A.a(2), grid, "leading coefficient");
        detail::require_positive_on(B, B.a(2), grid, "leading coefficient");
        Expr da2 = A.a(2).derivative();
        auto k2s = detail::constancy([&](double t) { return B.a(2).eval(t) / A.a(2).eval(t); },
                                     grid);
        double k2 = k2s.mean;
        auto k1s = detail::constancy(
            [&](double t) {
                return (B.a(1).eval(t) - k2 * A.a(1).eval(t)) / std::sqrt(A.a(2).eval(t));
            },
            grid);
        double k1 = k1s.mean;
        auto k0s = detail::constancy(
            [&](double t) {
                double s = std::sqrt(A.a(2).eval(t));
                double mid = (2.0 * A.a(1).eval(t) - da2.eval(t)) / (4.0 * s);
                return B.a(0).eval(t) - k2 * A.a(0).eval(t) - k1 * mid;
            },
            grid);
        rep.constants = SecondOrderConstants{k2, k1, k0s.mean};
        rep.residuals = {{"k2", k2s.residual}, {"k1", k1s.residual}, {"k0", k0s.residual}};
        bool brackets_ok = true;
        if (std::abs(k1) > tol) {
            // A scaled-plus-shift partner (k1 = 0) commutes with any A; a
            // genuine three-constant partner needs both brackets constant.
            auto brA = bracket_constancy(A, grid);
            auto brB = bracket_constancy(B, grid);
            rep.residuals.emplace_back("A_bracket", brA.residual);
            rep.residuals.emplace_back("B_bracket", brB.residual);
            brackets_ok = brA.residual < tol && brB.residual < tol;
        }
        if (!(k2 > 0.0)) {
            rep.verdict = Verdict::inconclusive;
            rep.note = "leading constant must be positive for a second-order pair";
        } else {
            bool consts_ok = k2s.residual < tol && k1s.residual < tol && k0s.residual < tol;
            rep.verdict = consts_ok && brackets_ok ? Verdict::commutative
                                                   : Verdict::not_commutative;
        }
        return rep;
    }

    throw error("extraction supports orders 1 and 2 only (got " + std::to_string(A.order) + "-" +
                std::to_string(B.order) + ")");
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// B with b1 = k1 a1, b0 = k1 a0 + k0; the canonical first-order partner.
inline LTVSystem synthesize_first_order_pair(const LTVSystem& A, double k1, double k0) {
    if (A.order != 1) throw error(A.label() + ": first-order synthesis requires order 1");
    if (k1 == 0.0)
        throw error("k1 = 0 degenerates the partner to a scalar; scalar systems are modeled "
                    "separately");
    Expr b1 = Expr(k1) * A.a(1);
    Expr b0 = Expr(k1) * A.a(0) + Expr(k0);
    return detail::make_partner(A, 1, {b0, b1});
}

namespace detail {

inline void require_eligible_second_order(const LTVSystem& A, double tol) {
    auto grid = linspace(A.domain_lo, A.domain_hi, 257);
    require_positive_on(A, A.a(2), grid, "leading coefficient");
    auto br = bracket_constancy(A, grid);
    if (br.residual >= tol)
        throw error(A.label() + ": eligibility bracket is not constant on the domain (residual " +
                    report_real(br.residual) + "); no non-scalar commutative pair exists");
}

}  // namespace detail

/// First-order partner of an eligible second-order system:
/// b1 = sqrt(a2) k1, b0 = k1 (2 a1 - da2) / (4 sqrt(a2)) + k0.
inline LTVSystem synthesize_first_from_second(const LTVSystem& A, double k1, double k0,
                                              double eligibility_tol = 1e-8) {
    if (A.order != 2) throw error(A.label() + ": source must have order 2");
    if (k1 == 0.0)
        throw error("k1 = 0 degenerates the partner to a scalar; scalar systems are modeled "
                    "separately");
    detail::require_eligible_second_order(A, eligibility_tol);
    Expr root = sqrt(A.a(2));
    Expr b1 = root * Expr(k1);
    Expr b0 = (Expr(2) * A.a(1) - A.a(2).derivative()) / (Expr(4) * root) * Expr(k1) + Expr(k0);
    return detail::make_partner(A, 1, {b0, b1});
}

/// Second-order partner of an eligible second-order system:
/// b2 = k2 a2, b1 = k2 a1 + k1 sqrt(a2),
/// b0 = k2 a0 + k1 (2 a1 - da2) / (4 sqrt(a2)) + k0.
inline LTVSystem synthesize_second_order_pair(const LTVSystem& A, double k2, double k1, double k0,
                                              double eligibility_tol = 1e-8) {
    if (A.order != 2) throw error(A.label() + ": source must have order 2");
    if (k2 == 0.0) throw error("k2 = 0 drops the partner's order; use first-from-second");
    if (k1 != 0.0) {
        detail::require_eligible_second_order(A, eligibility_tol);
    } else {
        auto grid = linspace(A.domain_lo, A.domain_hi, 257);
        detail::require_positive_on(A, A.a(2), grid, "leading coefficient");
    }
    Expr root = sqrt(A.a(2));
    Expr b2 = Expr(k2) * A.a(2);
    Expr b1 = Expr(k2) * A.a(1) + Expr(k1) * root;
    Expr b0 = Expr(k2) * A.a(0) +
              Expr(k1) * (Expr(2) * A.a(1) - A.a(2).derivative()) / (Expr(4) * root) + Expr(k0);
    return detail::make_partner(A, 2, {b0, b1, b2});
}

/// Second-order partner of a first-order system:
/// c2 = b1^2 / l1^2, c1 = b1 (2 b0 - 2 l0 + db1) / l1^2,
/// c0 = C0 + ((b0 - l0) / l1)^2 + b1 db0 / l1^2.
inline LTVSystem synthesize_second_from_first(const LTVSystem& B, double l1, double l0, double C0) {
    if (B.order != 1) throw error(B.label() + ": source must have order 1");
    if (l1 == 0.0) throw error("l1 must be nonzero");
    const Expr& b1 = B.a(1);
    const Expr& b0 = B.a(0);
    double l1sq = l1 * l1;
    Expr c2 = b1 * b1 / Expr(l1sq);
    Expr c1 = b1 * (Expr(2) * b0 - Expr(2.0 * l0) + b1.derivative()) / Expr(l1sq);
    Expr c0 = Expr(C0) + pow((b0 - Expr(l0)) / Expr(l1), 2.0) + b1 * b0.derivative() / Expr(l1sq);
    return detail::make_partner(B, 2, {c0, c1, c2});
}

// ---------------------------------------------------------------------------
// Unrelaxed conditions
// ---------------------------------------------------------------------------

/// Augment an extraction report with the initial-condition conditions for a
/// first-order pair: equal nonzero initial states, k0 = 1 - k1, and matching
/// initial output slope under a unit input. The criterion involves no times
/// other than t0 and holds or fails identically wherever t0 sits in the
/// domain.
inline CommutativityReport check_unrelaxed(const LTVSystem& A, const LTVSystem& B,
                                           CommutativityReport rep) {
    if (A.order != 1 || B.order != 1 || !rep.constants ||
        !std::holds_alternative<FirstOrderConstants>(*rep.constants)) {
        rep.unrelaxed = UnrelaxedStatus::not_applicable;
        if (rep.note.empty())
            rep.note = "unrelaxed conditions apply to first-order pairs only";
        return rep;
    }
    double ya = A.ics.at(0);
    double yb = B.ics.at(0);
    rep.initial_state_residual = std::abs(ya - yb) / std::max(1.0, std::abs(ya));
    if (ya == 0.0 && yb == 0.0) {
        rep.unrelaxed = UnrelaxedStatus::not_applicable;
        rep.note = "both systems are relaxed; the relaxed verdict stands";
        return rep;
    }
    auto [k1, k0] = std::get<FirstOrderConstants>(*rep.constants);
    rep.constant_sum_residual = std::abs(k0 - (1.0 - k1));
    double t0 = A.t0;
    rep.initial_slope_residual =
        std::abs((1.0 - A.a(0).eval(t0)) / A.a(1).eval(t0) -
                 (1.0 - B.a(0).eval(t0)) / B.a(1).eval(t0));
    bool ics_match = ya != 0.0 && yb != 0.0 && rep.initial_state_residual < rep.tol;
    bool ok = ics_match && rep.constant_sum_residual < rep.tol &&
              rep.initial_slope_residual < rep.tol && rep.verdict == Verdict::commutative;
    rep.unrelaxed = ok ? UnrelaxedStatus::commutative : UnrelaxedStatus::not_commutative;
    return rep;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline std::string render_constants(const PairConstants& pc) {
    std::string out;
    if (const auto* f = std::get_if<FirstOrderConstants>(&pc)) {
        out = "k1 = " + report_real(f->k1) + "\nk0 = " + report_real(f->k0) + "\n";
    } else if (const auto* s = std::get_if<SecondOrderConstants>(&pc)) {
        out = "k2 = " + report_real(s->k2) + "\nk1 = " + report_real(s->k1) +
              "\nk0 = " + report_real(s->k0) + "\n";
    } else if (const auto* m = std::get_if<MixedConstants>(&pc)) {
        out = "k1 = " + report_real(m->k1) + "\nk0 = " + report_real(m->k0) +
              "\nfree_constant = " + report_real(m->A0) + "\n";
    }
    return out;
}

/// Human-readable summary followed by a machine-readable key=value block.
inline std::string render_report(const CommutativityReport& rep) {
    std::string out;
    out += "pair: " + rep.first_name + " with " + rep.second_name + " (orders " + rep.kind +
           ")\n";
    out += "verdict: " + std::string(to_string(rep.verdict)) + "\n";
    if (rep.constants) {
        out += "constants:\n";
        std::string block = render_constants(*rep.constants);
        std::size_t pos = 0;
        while (pos < block.size()) {
            std::size_t nl = block.find('\n', pos);
            out += "  " + block.substr(pos, nl - pos) + "\n";
            pos = nl + 1;
        }
    }
    out += "constancy residuals (max deviation over " + std::to_string(rep.grid_points) +
           " grid points, tol " + report_real(rep.tol) + "):\n";
    for (const auto& [name, r] : rep.residuals)
        out += "  " + name + ": " + report_real(r) + "\n";
    out += "unrelaxed verdict: " + std::string(to_string(rep.unrelaxed)) + "\n";
    if (!std::isnan(rep.initial_state_residual))
        out += "  initial-state residual: " + report_real(rep.initial_state_residual) + "\n";
    if (!std::isnan(rep.constant_sum_residual))
        out += "  constant-sum residual |k0-(1-k1)|: " + report_real(rep.constant_sum_residual) +
               "\n";
    if (!std::isnan(rep.initial_slope_residual))
        out += "  initial-slope residual: " + report_real(rep.initial_slope_residual) + "\n";
    if (!rep.note.empty()) out += "note: " + rep.note + "\n";

    out += "---\n";
    out += "verdict = " + std::string(to_string(rep.verdict)) + "\n";
    out += "kind = " + rep.kind + "\n";
    if (rep.constants) out += render_constants(*rep.constants);
    for (const auto& [name, r] : rep.residuals)
        out += "residual." + name + " = " + report_real(r) + "\n";
    out += "unrelaxed = " + std::string(to_string(rep.unrelaxed)) + "\n";
    return out;
}

}  // namespace ltvc
