#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "ltvc/expr.hpp"
#include "ltvc/impulse.hpp"
#include "ltvc/numerics.hpp"

using namespace ltvc;
using Catch::Approx;

TEST_CASE("adaptive quadrature on reference integrals") {
    auto unit = integrate_adaptive([](double) { return 1.0; }, 0.0, 1.0, 1e-10);
    CHECK(unit.value == Approx(1.0).margin(1e-12));

    // antiderivative 2*sqrt(tau+1)
    auto root = integrate_adaptive([](double tau) { return std::pow(tau + 1.0, -0.5); }, 0.0, 2.0,
                                   1e-10);
    CHECK(root.value == Approx(2.0 * (std::sqrt(3.0) - 1.0)).margin(1e-9));
    CHECK(root.value == Approx(1.4641016151).margin(1e-9));

    SECTION("empty and reversed intervals") {
        CHECK(integrate_adaptive([](double) { return 7.0; }, 3.0, 3.0, 1e-10).value == 0.0);
        auto fwd = integrate_adaptive([](double x) { return x * x; }, 0.0, 2.0, 1e-12).value;
        auto rev = integrate_adaptive([](double x) { return x * x; }, 2.0, 0.0, 1e-12).value;
        CHECK(rev == Approx(-fwd).epsilon(1e-13));
    }
}

TEST_CASE("gauge-weighted integral identity") {
    // int_{t0}^{t} e^{g(tau)}/a1(tau) dtau = (k1/k0)(e^{g(t)} - e^{g(t0)})
    // for a1 = t+1, k1 = 2, k0 = 1 (g normalized to g(t0) = 0)
    Expr a1 = parse_expr("t + 1");
    double k1 = 2.0, k0 = 1.0;
    auto lhs = integrate_adaptive(
        [&](double tau) {
            return std::exp(gauge_function(a1, k1, k0, 0.0, tau)) / a1.eval(tau);
        },
        0.0, 1.0, 1e-10);
    double rhs = (k1 / k0) * (std::exp(gauge_function(a1, k1, k0, 0.0, 1.0)) - 1.0);
    CHECK(lhs.value == Approx(rhs).margin(1e-8));
    CHECK(rhs == Approx(2.0 * (std::sqrt(2.0) - 1.0)).margin(1e-10));
}

TEST_CASE("quadrature reports the worst panel when it cannot converge") {
    // a jump at an irrational point is never resolved by midpoint splitting
    double split = 1.0 / std::sqrt(2.0);
    auto step = [split](double x) { return x < split ? 0.0 : 1.0; };
    try {
        integrate_adaptive(step, 0.0, 1.0, 1e-12);
        FAIL("expected a convergence failure");
    } catch (const numerics_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("did not converge") != std::string::npos);
        CHECK(msg.find("panel") != std::string::npos);
    }
    CHECK_THROWS_AS(integrate_adaptive([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-10),
                    error);
}

TEST_CASE("linear ODE solver hits the reference solutions") {
    SECTION("exponential decay") {
        std::vector<Expr> coeffs = {Expr(1.0), Expr(1.0)};  // y' + y = 0
        auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 1.0, {1.0}, 1e-9);
        CHECK(traj.eval(1.0) == Approx(std::exp(-1.0)).margin(1e-8));
    }
    SECTION("time-varying decay") {
        // (t+1) y' + (t+2) y = 0, y(0)=1  ->  y = e^{-t}/(t+1)
        std::vector<Expr> coeffs = {parse_expr("t + 2"), parse_expr("t + 1")};
        auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 1.0, {1.0}, 1e-9);
        CHECK(traj.eval(1.0) == Approx(0.1839397206).margin(1e-7));
    }
    SECTION("harmonic oscillator") {
        std::vector<Expr> coeffs = {Expr(1.0), Expr(0.0), Expr(1.0)};  // y'' + y = 0
        auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 2.0, {0.0, 1.0},
                                     1e-9);
        CHECK(traj.eval(1.5707963267948966) == Approx(1.0).margin(1e-7));
    }
}

// Adaptive step control bounds the error by the tolerance scale; it does not
// make the error pointwise monotone in tol (accept/reject noise moves it a
// few times tol either way between adjacent rungs). So the ladder asserts the
// two consequences that are actually stable: every rung stays inside a 10x
// envelope, and riding the ladder all the way down never ends up worse.
TEST_CASE("tightening the tolerance tightens the reference error") {
    auto run_decay = [](double tol) {
        std::vector<Expr> coeffs = {Expr(1.0), Expr(1.0)};
        auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 1.0, {1.0}, tol);
        return std::abs(traj.eval(1.0) - std::exp(-1.0));
    };
    auto run_varying = [](double tol) {
        std::vector<Expr> coeffs = {parse_expr("t + 2"), parse_expr("t + 1")};
        auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 1.0, {1.0}, tol);
        return std::abs(traj.eval(1.0) - std::exp(-1.0) / 2.0);
    };
    auto run_oscillator = [](double tol) {
        std::vector<Expr> coeffs = {Expr(1.0), Expr(0.0), Expr(1.0)};
        auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 2.0, {0.0, 1.0},
                                     tol);
        return std::abs(traj.eval(1.5707963267948966) - 1.0);
    };
    std::vector<std::function<double(double)>> runs = {run_decay, run_varying, run_oscillator};
    for (const auto& run : runs) {
        double first = run(1e-5);
        double last = first;
        for (double tol = 1e-5; tol >= 1e-9; tol *= 0.5) {
            double err = run(tol);
            INFO("tol=" << tol << " err=" << err);
            CHECK(err <= 10.0 * tol);
            last = err;
        }
        CHECK(last <= first);
    }
}

TEST_CASE("dense output stays within a decade of the tolerance") {
    double tol = 1e-9;
    std::vector<Expr> coeffs = {Expr(1.0), Expr(1.0)};
    auto traj = solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 2.0, {1.0}, tol);
    double worst = 0.0;
    for (double t : linspace(0.0, 2.0, 1000))
        worst = std::max(worst, std::abs(traj.eval(t) - std::exp(-t)));
    CHECK(worst < 10.0 * tol);
}

TEST_CASE("trajectory invariants") {
    Trajectory traj(1, 0.0, {1.0}, {-1.0});
    traj.push(0.5, {0.6065}, {-0.6065});
    traj.push(1.0, {0.3679}, {-0.3679});

    SECTION("sample times strictly increase") {
        CHECK_THROWS_AS(traj.push(1.0, {0.2}, {-0.2}), numerics_error);
        CHECK_THROWS_AS(traj.push(0.75, {0.2}, {-0.2}), numerics_error);
    }
    SECTION("evaluation at a sample time is exact") {
        CHECK(traj.eval(0.5) == 0.6065);
        CHECK(traj.eval(0.0) == 1.0);
        CHECK(traj.eval(1.0) == 0.3679);
    }
    SECTION("interpolation stays inside the sampled span") {
        double mid = traj.eval(0.25);
        CHECK(mid > 0.6065);
        CHECK(mid < 1.0);
    }
}

TEST_CASE("leading coefficient guard") {
    // t*y' + y = 0 has a vanishing leading coefficient at t = 0
    std::vector<Expr> coeffs = {Expr(1.0), Expr::time()};
    CHECK_THROWS_AS(
        solve_linear_ode(coeffs, [](double) { return 0.0; }, 0.0, 1.0, {1.0}, 1e-9),
        numerics_error);
}
