#pragma once

// Cascade composition. h_AB is computed by driving the second system's ODE
// with the first system's impulse response: identical to the composition
// integral but one quadrature cheaper, and it reuses dense output. A literal
// nested-quadrature path is kept for cross-validation. Scalar (order-0)
// operands divide the partner's kernel by a0 at the impulse time or at the
// observation time, depending on which side of the cascade they sit.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ltvc/expr.hpp"
#include "ltvc/impulse.hpp"
#include "ltvc/numerics.hpp"
#include "ltvc/system.hpp"

namespace ltvc {

struct CascadeResult {
    std::string first_name, second_name;
    double t0 = 0.0;
    std::vector<double> grid;
    std::vector<double> h;
    double tol = 0.0;
};

enum class ScalarPosition { first, second };

namespace detail {

inline void check_cascade_grid(const std::vector<double>& grid, double t0) {
    if (grid.size() < 2) throw error("cascade grid needs at least two points");
    if (grid.front() != t0) throw error("cascade grid must start at t0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw error("cascade grid must be strictly increasing");
}

inline void check_grid_in_domain(const LTVSystem& s, const std::vector<double>& grid) {
    require_in_domain(s, grid.front(), "grid start");
    require_in_domain(s, grid.back(), "grid end");
}

}  // namespace detail

/// h of (first, then second) over the grid, impulse applied at t0.
inline CascadeResult cascade_impulse(const LTVSystem& first, const LTVSystem& second, double t0,
                                     const std::vector<double>& grid, double tol = 1e-9) {
    if (first.order == 0 || second.order == 0)
        throw error("scalar operand in cascade: use scalar_cascade");
    detail::check_cascade_grid(grid, t0);
    detail::check_grid_in_domain(first, grid);
    detail::check_grid_in_domain(second, grid);

    auto kernel = impulse_response(first, t0, grid.back(), tol);
    std::vector<double> rest(second.order, 0.0);
    auto driven = solve_linear_ode(
        second.coeffs, [&](double t) { return kernel.traj.eval(t, 0); }, t0, grid.back(), rest,
        tol);

    CascadeResult r;
    r.first_name = first.label();
    r.second_name = second.label();
    r.t0 = t0;
    r.grid = grid;
    r.tol = tol;
    r.h.reserve(grid.size());
    for (double t : grid) {
        double v = driven.eval(t, 0);
        if (!std::isfinite(v)) throw error("cascade response not finite at t=" + std::to_string(t));
        r.h.push_back(v);
    }
    return r;
}

/// The composition integral evaluated literally:
/// h(t) = int_{t0}^{t} h_second(t, g) * h_first(g, t0) dg.
/// Cross-validation only; one inner kernel evaluation per quadrature node.
inline double cascade_point_direct(const LTVSystem& first, const LTVSystem& second, double t0,
                                   double t, double tol = 1e-8) {
    if (first.order == 0 || second.order == 0)
        throw error("scalar operand in cascade: use scalar_cascade");
    if (t < t0) throw error("cascade evaluation requires t >= t0");
    if (t == t0) return 0.0;
    auto kernel_first = impulse_response(first, t0, t, tol * 1e-2);
    auto f = [&](double g) {
        return impulse_point(second, g, t, tol * 1e-2) * kernel_first.traj.eval(g, 0);
    };
    return integrate_adaptive(f, t0, t, tol).value;
}

/// Cascade of a scalar with a dynamic system. Scalar first divides by
/// a0(t0); scalar second divides by a0(t). A time-varying scalar therefore
/// fails to commute and the gap is the kernel times the weight difference.
inline CascadeResult scalar_cascade(const LTVSystem& scalar, const LTVSystem& other,
                                    ScalarPosition position, double t0,
                                    const std::vector<double>& grid, double tol = 1e-9) {
    if (scalar.order != 0) throw error(scalar.label() + ": scalar operand must have order 0");
    if (other.order == 0)
        throw error("both operands scalar: use scalar_pair_cascade");
    detail::check_cascade_grid(grid, t0);
    detail::check_grid_in_domain(scalar, grid);
    detail::check_grid_in_domain(other, grid);

    auto kernel = impulse_response(other, t0, grid.back(), tol);
    CascadeResult r;
    r.first_name = position == ScalarPosition::first ? scalar.label() : other.label();
    r.second_name = position == ScalarPosition::first ? other.label() : scalar.label();
    r.t0 = t0;
    r.grid = grid;
    r.tol = tol;
    r.h.reserve(grid.size());
    for (double t : grid) {
        double w = position == ScalarPosition::first ? scalar.a(0).eval(t0) : scalar.a(0).eval(t);
        if (w == 0.0) throw error(scalar.label() + ": a0 vanishes at t=" + std::to_string(t));
        r.h.push_back(kernel.traj.eval(t, 0) / w);
    }
    return r;
}

/// Two scalars in cascade stay a weighted delta; order never matters.
inline ScalarImpulse scalar_pair_cascade(const LTVSystem& s1, const LTVSystem& s2, double t0) {
    auto w1 = scalar_impulse(s1, t0);
    auto w2 = scalar_impulse(s2, t0);
    return ScalarImpulse{w1.weight * w2.weight, t0};
}

/// max over the grid of |h_AB - h_BA|. Dispatches on order signature so
/// scalar operands are compared through their two cascade placements.
inline double commutativity_defect(const LTVSystem& A, const LTVSystem& B, double t0,
                                   const std::vector<double>& grid, double tol = 1e-9) {
    if (A.order == 0 && B.order == 0) return 0.0;  // weights multiply commutatively
    std::vector<double> hab, hba;
    if (A.order == 0 || B.order == 0) {
        const LTVSystem& sc = A.order == 0 ? A : B;
        const LTVSystem& dyn = A.order == 0 ? B : A;
        hab = scalar_cascade(sc, dyn, ScalarPosition::first, t0, grid, tol).h;
        hba = scalar_cascade(sc, dyn, ScalarPosition::second, t0, grid, tol).h;
    } else {
        hab = cascade_impulse(A, B, t0, grid, tol).h;
        hba = cascade_impulse(B, A, t0, grid, tol).h;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) d = std::max(d, std::abs(hab[i] - hba[i]));
    return d;
}

/// Pointwise integrand defect
///   Delta(t0, tau, t) = h_B(t,tau) h_A(tau,t0) - h_A(t,tau) h_B(tau,t0).
/// Not generally zero even for commutative pairs; only its integral vanishes.
inline double delta_integrand(const LTVSystem& A, const LTVSystem& B, double t0, double tau,
                              double t, double tol = 1e-10) {
    if (!(t0 <= tau && tau <= t))
        throw error("delta integrand requires t0 <= tau <= t");
    double hb_t_tau = impulse_point(B, tau, t, tol);
    double ha_tau_t0 = impulse_point(A, t0, tau, tol);
    double ha_t_tau = impulse_point(A, tau, t, tol);
    double hb_tau_t0 = impulse_point(B, t0, tau, tol);
    return hb_t_tau * ha_tau_t0 - ha_t_tau * hb_tau_t0;
}

/// int_{t0}^{t} Delta(t0, tau, t) dtau: zero exactly when AB and BA share
/// their impulse response at (t, t0).
inline double delta_integral(const LTVSystem& A, const LTVSystem& B, double t0, double t,
                             double tol = 1e-10) {
    if (t == t0) return 0.0;
    return integrate_adaptive(
               [&](double tau) { return delta_integrand(A, B, t0, tau, t, tol * 1e-2); }, t0, t,
               tol)
        .value;
}

/// Output of the two-stage connection (first then second) where each stage
/// starts from its own stored initial conditions at the shared t0 and the
/// first stage is driven by `input`. Component 0 of the result is the output.
inline Trajectory simulate_cascade_with_ics(const LTVSystem& first, const LTVSystem& second,
                                            const std::function<double(double)>& input,
                                            const std::vector<double>& grid, double tol = 1e-9) {
    if (first.order == 0 || second.order == 0)
        throw error("scalar stage in simulate_cascade_with_ics is not supported");
    if (first.t0 != second.t0)
        throw error("mismatched t0 between cascade stages: " + std::to_string(first.t0) + " vs " +
                    std::to_string(second.t0));
    detail::check_cascade_grid(grid, first.t0);
    detail::check_grid_in_domain(first, grid);
    detail::check_grid_in_domain(second, grid);
    auto stage1 = solve_linear_ode(first.coeffs, input, first.t0, grid.back(), first.ics, tol);
    return solve_linear_ode(
        second.coeffs, [&](double t) { return stage1.eval(t, 0); }, second.t0, grid.back(),
        second.ics, tol);
}

struct ConditionalTransitivityReport {
    double max_delta_ab = 0.0;
    double max_delta_bc = 0.0;
    double max_delta_ac = 0.0;
    bool premises_hold = false;   // Delta(A,B) and Delta(B,C) pointwise ~ 0
    bool conclusion_holds = false;  // then Delta(A,C) pointwise ~ 0
    double premise_tol = 0.0;
    double conclusion_tol = 0.0;
};

/// Pointwise-vanishing chain check: the premises are *reported*, never
/// assumed, because the pointwise form only survives for special pairs
/// (the integral form is the general law).
inline ConditionalTransitivityReport conditional_transitivity(
    const LTVSystem& A, const LTVSystem& B, const LTVSystem& C, double t0,
    const std::vector<double>& t_grid, std::size_t tau_points = 9, double premise_tol = 1e-9,
    double conclusion_tol = 1e-8, double tol = 1e-10) {
    ConditionalTransitivityReport rep;
    rep.premise_tol = premise_tol;
    rep.conclusion_tol = conclusion_tol;
    for (double t : t_grid) {
        if (t <= t0) continue;
        for (double tau : linspace(t0, t, tau_points)) {
            rep.max_delta_ab =
                std::max(rep.max_delta_ab, std::abs(delta_integrand(A, B, t0, tau, t, tol)));
            rep.max_delta_bc =
                std::max(rep.max_delta_bc, std::abs(delta_integrand(B, C, t0, tau, t, tol)));
            rep.max_delta_ac =
                std::max(rep.max_delta_ac, std::abs(delta_integrand(A, C, t0, tau, t, tol)));
        }
    }
    rep.premises_hold = rep.max_delta_ab < premise_tol && rep.max_delta_bc < premise_tol;
    rep.conclusion_holds = rep.max_delta_ac < conclusion_tol;
    return rep;
}

}  // namespace ltvc
