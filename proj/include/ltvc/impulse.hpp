#pragma once

// Impulse responses h(t, tau). General order: solve the homogeneous ODE with
// the jump initial state y^(i)(tau)=0 for i<n-1, y^(n-1)(tau)=1/a_n(tau),
// which realizes a unit impulse exactly. First order additionally has the
// closed form h(t,tau) = (1/a1(tau)) exp(int_tau^t -a0/a1), used both as an
// independent cross-check and as the cheap evaluator for kernel grids.
// Scalar (order-0) systems are weighted deltas and never touch Trajectory.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ltvc/expr.hpp"
#include "ltvc/numerics.hpp"
#include "ltvc/system.hpp"

namespace ltvc {

struct ImpulseResponse {
    LTVSystem system;
    double tau = 0.0;
    Trajectory traj;       // component 0 is h(., tau)
    std::string method;    // "ode" | "closed-form"
    double tol = 0.0;

    [[nodiscard]] double eval(double t) const { return traj.eval(t, 0); }
};

/// Weighted delta at tau: the impulse response of y = x / a0(t).
struct ScalarImpulse {
    double weight = 0.0;  // 1/a0(tau), finite and nonzero
    double tau = 0.0;
};

namespace detail {

inline void require_in_domain(const LTVSystem& s, double t, const char* what) {
    if (!s.in_domain(t))
        throw error(s.label() + ": " + what + " t=" + std::to_string(t) +
                    " outside domain [" + std::to_string(s.domain_lo) + ", " +
                    std::to_string(s.domain_hi) + "]");
}

inline std::vector<double> impulse_jump_state(const LTVSystem& s, double tau) {
    double lead = s.leading().eval(tau);
    if (lead == 0.0) throw error(s.label() + ": leading coefficient vanishes at impulse time");
    std::vector<double> y0(s.order, 0.0);
    y0[s.order - 1] = 1.0 / lead;
    return y0;
}

}  // namespace detail

/// h(., tau) on [tau, t_end] via the homogeneous ODE with the jump state.
inline ImpulseResponse impulse_response(const LTVSystem& s, double tau, double t_end,
                                        double tol = 1e-9) {
    if (s.order == 0)
        throw error(s.label() + ": scalar system has a weighted-delta impulse response; "
                    "use scalar_impulse");
    detail::require_in_domain(s, tau, "impulse time");
    detail::require_in_domain(s, t_end, "end time");
    auto y0 = detail::impulse_jump_state(s, tau);
    auto traj = solve_linear_ode(s.coeffs, [](double) { return 0.0; }, tau, t_end, y0, tol);
    return ImpulseResponse{s, tau, std::move(traj), "ode", tol};
}

/// First-order closed form: (1/a1(tau)) * exp(int_tau^t -a0/a1 dg).
/// The exponent is always computed as one definite integral.
inline double first_order_closed_form(const LTVSystem& s, double tau, double t,
                                      double tol = 1e-12) {
    if (s.order != 1) throw error(s.label() + ": closed form requires order 1");
    detail::require_in_domain(s, tau, "impulse time");
    detail::require_in_domain(s, t, "evaluation time");
    double a1_tau = s.a(1).eval(tau);
    if (a1_tau == 0.0) throw error(s.label() + ": a1 vanishes at impulse time");
    auto q = integrate_adaptive(
        [&](double g) { return -s.a(0).eval(g) / s.a(1).eval(g); }, tau, t, tol);
    return std::exp(q.value) / a1_tau;
}

/// Same closed form materialized as a dense Trajectory: the exponent is
/// accumulated panel by panel and the stored derivative is the exact
/// h' = -(a0/a1) h, so the Hermite interpolant inherits closed-form accuracy.
inline ImpulseResponse closed_form_impulse_response(const LTVSystem& s, double tau, double t_end,
                                                    double tol = 1e-12, std::size_t points = 257) {
    if (s.order != 1) throw error(s.label() + ": closed form requires order 1");
    detail::require_in_domain(s, tau, "impulse time");
    detail::require_in_domain(s, t_end, "end time");
    double a1_tau = s.a(1).eval(tau);
    if (a1_tau == 0.0) throw error(s.label() + ": a1 vanishes at impulse time");
    auto integrand = [&](double g) { return -s.a(0).eval(g) / s.a(1).eval(g); };

    auto slope = [&](double t, double h) { return integrand(t) * h; };
    double h0 = 1.0 / a1_tau;
    Trajectory traj(1, tau, {h0}, {slope(tau, h0)});
    if (t_end != tau) {
        auto ts = linspace(tau, t_end, points);
        double expo = 0.0;
        double panel_tol = tol / static_cast<double>(points);
        for (std::size_t i = 1; i < ts.size(); ++i) {
            expo += integrate_adaptive(integrand, ts[i - 1], ts[i], panel_tol).value;
            double h = std::exp(expo) / a1_tau;
            traj.push(ts[i], {h}, {slope(ts[i], h)});
        }
    }
    return ImpulseResponse{s, tau, std::move(traj), "closed-form", tol};
}

/// g(t) - g(t0) = (k0/k1) * int_{t0}^{t} dg / a1(g): the definite-difference
/// form of the gauge relating the kernels of a commutative pair.
inline double gauge_function(const Expr& a1, double k1, double k0, double t0, double t,
                             double tol = 1e-12) {
    if (k1 == 0.0) throw error("gauge function requires k1 != 0");
    if (k0 == 0.0) return 0.0;
    auto q = integrate_adaptive([&](double g) { return 1.0 / a1.eval(g); }, t0, t, tol);
    return (k0 / k1) * q.value;
}

/// Impulse response of a scalar system: weight 1/a0(tau) on a delta at tau.
inline ScalarImpulse scalar_impulse(const LTVSystem& s, double tau) {
    if (s.order != 0) throw error(s.label() + ": scalar impulse requires order 0");
    detail::require_in_domain(s, tau, "impulse time");
    double a0 = s.a(0).eval(tau);
    if (a0 == 0.0 || !std::isfinite(a0))
        throw error(s.label() + ": a0 must be finite and nonzero at tau");
    return ScalarImpulse{1.0 / a0, tau};
}

/// Point evaluation of h(t, tau) picking the cheapest exact path for the
/// order: closed form for first-order systems, ODE solve otherwise.
inline double impulse_point(const LTVSystem& s, double tau, double t, double tol = 1e-10) {
    if (s.order == 1) return first_order_closed_form(s, tau, t, tol * 1e-2);
    if (t == tau) {
        auto y0 = detail::impulse_jump_state(s, tau);
        return y0[0];
    }
    return impulse_response(s, tau, t, tol).eval(t);
}

}  // namespace ltvc
