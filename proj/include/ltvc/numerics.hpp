#pragma once

// Numerical workhorses: adaptive Simpson quadrature, a Dormand-Prince 5(4)
// initial-value solver with dense output, and a driver that puts a linear
// time-varying ODE a_n y^(n) + ... + a_0 y = u into first-order form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ltvc/expr.hpp"

namespace ltvc {

struct numerics_error : error {
    using error::error;
};

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;  // sum of per-panel Richardson estimates
};

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

struct QuadState {
    double value = 0.0;
    double error_estimate = 0.0;
    bool exhausted = false;
    double worst_a = 0.0, worst_b = 0.0, worst_delta = 0.0;
};

template <class F>
void adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb, double m, double fm,
                          double whole, double tol, double tol_floor, int depth, QuadState& out) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    if (!std::isfinite(flm)) throw numerics_error("integrand not finite at t=" + std::to_string(lm));
    if (!std::isfinite(frm)) throw numerics_error("integrand not finite at t=" + std::to_string(rm));
    double left = simpson(a, fa, m, fm, flm);
    double right = simpson(m, fm, b, fb, frm);
    double delta = left + right - whole;
    // Both halves agree with the parent panel to 15*tol: Richardson
    // extrapolation then bounds the error of (left+right+delta/15) by ~tol.
    if (std::abs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.error_estimate += std::abs(delta) / 15.0;
        return;
    }
    if (depth <= 0) {
        out.value += left + right + delta / 15.0;
        out.error_estimate += std::abs(delta) / 15.0;
        if (std::abs(delta) > std::abs(out.worst_delta)) {
            out.worst_a = a;
            out.worst_b = b;
            out.worst_delta = delta;
        }
        out.exhausted = true;
        return;
    }
    double half = std::max(0.5 * tol, tol_floor);
    adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, half, tol_floor, depth - 1, out);
    adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, half, tol_floor, depth - 1, out);
}

}  // namespace detail

/// Integrate f over [a, b] (a > b allowed; the usual sign flip applies).
/// The tolerance is absolute. Throws if panels still disagree after the
/// maximum subdivision depth, reporting the worst panel's location.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double tol = 1e-12) {
    if (a == b) return {0.0, 0.0};
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
        throw numerics_error("integrand not finite on [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]");
    double whole = detail::simpson(a, fa, b, fb, fm);
    // Per-level tolerance halving stops at round-off scale so deep recursion
    // is not asked to beat machine precision.
    double tol_floor = 1e-17 * (std::abs(whole) + 1.0);
    detail::QuadState st;
    detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, tol_floor, 48, st);
    if (st.exhausted)
        throw numerics_error("quadrature did not converge; worst panel [" +
                             std::to_string(st.worst_a) + ", " + std::to_string(st.worst_b) +
                             "] residual " + std::to_string(st.worst_delta));
    return {sign * st.value, st.error_estimate};
}

inline QuadratureResult integrate_expr(const Expr& e, double a, double b, double tol = 1e-12) {
    return integrate_adaptive([&](double t) { return e.eval(t); }, a, b, tol);
}

// ---------------------------------------------------------------------------
// Initial-value solver
// ---------------------------------------------------------------------------

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;

/// Dense solution of an IVP on [t_begin, t_end] (either direction).
/// Stores accepted steps with their derivatives; evaluation between nodes is
/// cubic Hermite interpolation. The solver runs its controller a decade
/// tighter than the requested tolerance so the interpolant, not the steps,
/// stays the accuracy bottleneck.
class Trajectory {
public:
    Trajectory(std::size_t dim, double t0, std::vector<double> y0, std::vector<double> dy0)
        : dim_(dim) {
        times_.push_back(t0);
        states_ = std::move(y0);
        derivs_ = std::move(dy0);
    }

    void push(double t, const std::vector<double>& y, const std::vector<double>& dy) {
        // Interior invariant: sample times strictly monotone in march direction.
        if (times_.size() > 1) {
            bool fwd = times_[1] > times_[0];
            if ((fwd && t <= times_.back()) || (!fwd && t >= times_.back()))
                throw numerics_error("non-monotone trajectory sample");
        }
        times_.push_back(t);
        states_.insert(states_.end(), y.begin(), y.end());
        derivs_.insert(derivs_.end(), dy.begin(), dy.end());
    }

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] double t_begin() const { return times_.front(); }
    [[nodiscard]] double t_end() const { return times_.back(); }
    [[nodiscard]] std::size_t steps() const { return times_.size() - 1; }

    /// Component `i` of the solution at time t. Values at stored sample
    /// times are returned exactly; t may exceed the ends by ~1e-9*span to
    /// absorb round-off from callers that reconstruct grid points.
    [[nodiscard]] double eval(double t, std::size_t i = 0) const {
        if (i >= dim_) throw numerics_error("trajectory component out of range");
        auto [k, u, h] = locate(t);
        const double y0 = states_[k * dim_ + i], y1 = states_[(k + 1) * dim_ + i];
        if (u == 0.0) return y0;
        if (u == 1.0) return y1;
        const double d0 = derivs_[k * dim_ + i], d1 = derivs_[(k + 1) * dim_ + i];
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0 +
               (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * h * d1;
    }

    /// Time derivative of component `i` at t (derivative of the interpolant).
    [[nodiscard]] double eval_derivative(double t, std::size_t i = 0) const {
        if (i >= dim_) throw numerics_error("trajectory component out of range");
        auto [k, u, h] = locate(t);
        const double y0 = states_[k * dim_ + i], y1 = states_[(k + 1) * dim_ + i];
        const double d0 = derivs_[k * dim_ + i], d1 = derivs_[(k + 1) * dim_ + i];
        const double u2 = u * u;
        return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * h * d0 +
                (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * h * d1) / h;
    }

    [[nodiscard]] const std::vector<double>& sample_times() const { return times_; }

private:
    // Returns (step index, normalized offset, step width).
    [[nodiscard]] std::tuple<std::size_t, double, double> locate(double t) const {
        const bool fwd = times_.back() >= times_.front();
        const double lo = fwd ? times_.front() : times_.back();
        const double hi = fwd ? times_.back() : times_.front();
        const double slack = 1e-9 * std::max(1.0, hi - lo);
        if (t < lo - slack || t > hi + slack)
            throw numerics_error("trajectory evaluated at t=" + std::to_string(t) +
                                 " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        const double tc = std::clamp(t, lo, hi);
        std::size_t k;
        if (fwd) {
            auto it = std::upper_bound(times_.begin(), times_.end(), tc);
            k = static_cast<std::size_t>(std::distance(times_.begin(), it));
        } else {
            auto it = std::upper_bound(times_.begin(), times_.end(), tc, std::greater<>());
            k = static_cast<std::size_t>(std::distance(times_.begin(), it));
        }
        k = std::clamp<std::size_t>(k, 1, times_.size() - 1) - 1;
        const double h = times_[k + 1] - times_[k];
        double u = (tc - times_[k]) / h;
        if (tc == times_[k]) u = 0.0;
        if (tc == times_[k + 1]) u = 1.0;
        return {k, u, h};
    }

    std::size_t dim_;
    std::vector<double> times_;
    std::vector<double> states_;  // step-major, component-minor
    std::vector<double> derivs_;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double dp_c[7] = {0., 1. / 5, 3. / 10, 4. / 5, 8. / 9, 1., 1.};
inline constexpr double dp_a[7][6] = {
    {},
    {1. / 5},
    {3. / 40, 9. / 40},
    {44. / 45, -56. / 15, 32. / 9},
    {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
    {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
    {35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84},
};
// Row 7 of a equals the 5th-order weights (FSAL); e = b5 - b4.
inline constexpr double dp_e[7] = {71. / 57600, 0., -71. / 16695, 71. / 1920,
                                   -17253. / 339200, 22. / 525, -1. / 40};

}  // namespace detail

/// Integrate dy/dt = rhs(t, y) from t0 to t1 (either direction) with the
/// Dormand-Prince embedded 5(4) pair; mixed error control with
/// atol = rtol = tol per component.
inline Trajectory solve_ivp(const OdeRhs& rhs, double t0, double t1, std::vector<double> y0,
                            double tol = 1e-9, std::size_t max_steps = 2000000) {
    const std::size_t n = y0.size();
    if (n == 0) throw numerics_error("empty state vector");
    if (!(tol > 0)) throw numerics_error("tolerance must be positive");
    const double ctol = std::max(tol / 10.0, 5e-15);
    std::vector<double> k[7];
    for (auto& v : k) v.assign(n, 0.0);
    std::vector<double> y = std::move(y0), ytmp(n), ynew(n);

    rhs(t0, y, k[0]);
    for (double v : k[0])
        if (!std::isfinite(v)) throw numerics_error("ODE right-hand side not finite at start");
    Trajectory traj(n, t0, y, k[0]);
    if (t1 == t0) return traj;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    double h = dir * std::min(0.01 * span, 0.1);
    double t = t0;
    std::size_t steps = 0;

    while (dir * (t1 - t) > 0) {
        if (++steps > max_steps) throw numerics_error("ODE solver exceeded max step count");
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
            throw numerics_error("ODE step size underflow at t=" + std::to_string(t));
        if (dir * (t + h - t1) > 0) h = t1 - t;

        for (int s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += detail::dp_a[s][j] * k[j][i];
                ytmp[i] = y[i] + h * acc;
            }
            rhs(t + detail::dp_c[s] * h, ytmp, k[s]);
        }
        // Stage 7 was evaluated at the 5th-order result itself: ytmp is
        // y_{n+1} and k[6] its derivative.
        ynew = ytmp;

        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            double ei = 0.0;
            for (int s = 0; s < 7; ++s) ei += detail::dp_e[s] * k[s][i];
            ei *= h;
            double scale = ctol + ctol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(ei) / scale);
            if (!std::isfinite(ynew[i])) finite = false;
        }

        if (finite && err <= 1.0) {
            t += h;
            y = ynew;
            k[0] = k[6];  // FSAL reuse
            traj.push(t, y, k[0]);
        }
        double factor = finite ? 0.9 * std::pow(std::max(err, 1e-10), -0.2) : 0.1;
        h *= std::clamp(factor, 0.1, 5.0);
    }
    return traj;
}

/// Solve a_n(t) y^(n) + ... + a_1(t) y' + a_0(t) y = u(t) as a first-order
/// system in the state (y, y', ..., y^(n-1)). `coeffs[i]` multiplies y^(i).
/// Throws if the leading coefficient is effectively zero anywhere the solver
/// evaluates it.
inline Trajectory solve_linear_ode(const std::vector<Expr>& coeffs,
                                   const std::function<double(double)>& input, double t0, double t1,
                                   const std::vector<double>& initial_state, double tol = 1e-9) {
    if (coeffs.size() < 2) throw numerics_error("need order >= 1 (at least two coefficients)");
    const std::size_t order = coeffs.size() - 1;
    if (initial_state.size() != order)
        throw numerics_error("initial state must have " + std::to_string(order) + " components");

    OdeRhs rhs = [&coeffs, &input, order](double t, const std::vector<double>& y,
                                          std::vector<double>& dy) {
        double lead = coeffs[order].eval(t);
        double scale = 0.0;
        for (std::size_t i = 0; i < order; ++i) scale = std::max(scale, std::abs(coeffs[i].eval(t)));
        if (std::abs(lead) < 1e-12 * std::max(1.0, scale))
            throw numerics_error("leading coefficient vanishes at t=" + std::to_string(t));
        for (std::size_t i = 0; i + 1 < order; ++i) dy[i] = y[i + 1];
        double acc = input(t);
        for (std::size_t i = 0; i < order; ++i) acc -= coeffs[i].eval(t) * y[i];
        dy[order - 1] = acc / lead;
    };
    return solve_ivp(rhs, t0, t1, initial_state, tol);
}

/// n evenly spaced points including both ends.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw numerics_error("linspace needs at least two points");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

}  // namespace ltvc
