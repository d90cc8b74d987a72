#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ltvc/transitivity.hpp"
#include "test_support.hpp"

using namespace ltvc;
using Catch::Approx;

namespace {

LTVSystem eligible_second_order() {
    return ts::make_system(2, {"1", "3*(t + 1)", "(t + 1)^2"}, 0.0, {0.0, 0.0}, 0.0, 5.0, "S");
}

LTVSystem unit_first_order() {
    // (t+1) y' + y
    return ts::make_system(1, {"1", "t + 1"}, 0.0, {0.0}, 0.0, 5.0, "F");
}

double field(const ChainReport& rep, const std::string& name) {
    REQUIRE(rep.predicted_ac.has_value());
    for (const auto& [n, v] : detail::constant_fields(*rep.predicted_ac))
        if (n == name) return v;
    FAIL("no predicted field " + name);
    return 0.0;
}

}  // namespace

TEST_CASE("constant composition rules") {
    auto ff = compose_first_order_constants(2.0, 1.0, -0.5, 3.5);
    CHECK(ff.k1 == Approx(-1.0));
    CHECK(ff.k0 == Approx(3.0));

    // associativity of the first-order rule
    auto left = compose_first_order_constants(
        compose_first_order_constants(2.0, 1.0, -0.5, 3.5).k1,
        compose_first_order_constants(2.0, 1.0, -0.5, 3.5).k0, 3.0, -2.0);
    auto right = compose_first_order_constants(
        2.0, 1.0, compose_first_order_constants(-0.5, 3.5, 3.0, -2.0).k1,
        compose_first_order_constants(-0.5, 3.5, 3.0, -2.0).k0);
    CHECK(left.k1 == Approx(right.k1));
    CHECK(left.k0 == Approx(right.k0));

    auto mm = compose_mixed_constants(1.0, 0.0, 0.0, 2.0, 1.0, 0.0);
    CHECK(mm.k2 == Approx(0.25));
    CHECK(mm.k1 == Approx(-0.5));
    CHECK(mm.k0 == Approx(0.25));

    CHECK_THROWS_AS(compose_first_order_constants(0.0, 1.0, 2.0, 0.0), error);
    CHECK_THROWS_AS(compose_mixed_constants(1.0, 0.0, 0.0, 0.0, 1.0, 0.0), error);
}

TEST_CASE("first-order chain verifies algebraically") {
    auto grid = linspace(0.0, 5.0, 101);
    auto rep = verify_chain(ts::demo_a(), ts::demo_b(), ts::demo_c(), grid, 1e-6, 1e-10);
    CHECK(rep.transitive);
    CHECK(rep.path == "algebraic 1-1-1");
    CHECK(field(rep, "k1") == Approx(-1.0).margin(1e-9));
    CHECK(field(rep, "k0") == Approx(3.0).margin(1e-9));
    for (const auto& [name, r] : rep.prediction_residuals) {
        INFO(name);
        CHECK(r < 1e-8);
    }
    CHECK(rep.defect_ab < 1e-6);
    CHECK(rep.defect_bc < 1e-6);
    CHECK(rep.defect_ac < 1e-6);

    auto text = render_chain_report(rep);
    CHECK(text.find("algebraic 1-1-1") != std::string::npos);
    CHECK(text.find("same input-output map") != std::string::npos);

    // breaking the middle link kills transitivity
    auto bad = ts::make_system(1, {"2.5*t + 5", "2*(t + 1)"}, 0.0, {0.0}, -0.9, 10.0, "Bslope");
    auto rep2 = verify_chain(ts::demo_a(), bad, ts::demo_c(), grid, 1e-6, 1e-10);
    CHECK_FALSE(rep2.transitive);
}

TEST_CASE("chains through a second-order head compose mixed constants") {
    auto grid = linspace(0.0, 5.0, 61);
    auto S = eligible_second_order();

    // 2-1-1
    auto B = synthesize_first_from_second(S, 1.0, 2.0);
    auto C = synthesize_first_order_pair(B, 2.0, -1.0);
    auto rep = verify_chain(S, B, C, grid, 1e-6, 1e-10);
    CHECK(rep.transitive);
    CHECK(rep.path == "algebraic 2-1-1");
    CHECK(field(rep, "k1") == Approx(2.0).margin(1e-8));
    CHECK(field(rep, "k0") == Approx(3.0).margin(1e-8));
    CHECK(field(rep, "free_constant") == Approx(0.0).margin(1e-8));

    // 2-1-2: the composed pair is second order with squared constants
    auto B2 = synthesize_first_from_second(S, 1.0, 0.0);
    auto C2 = synthesize_second_from_first(B2, 2.0, 1.0, 0.0);
    auto rep2 = verify_chain(S, B2, C2, grid, 1e-6, 1e-10);
    CHECK(rep2.transitive);
    CHECK(rep2.path == "algebraic 2-1-2");
    CHECK(field(rep2, "k2") == Approx(0.25).margin(1e-8));
    CHECK(field(rep2, "k1") == Approx(-0.5).margin(1e-8));
    CHECK(field(rep2, "k0") == Approx(0.25).margin(1e-8));

    // the predicted constants synthesize C2's coefficients exactly
    auto direct = synthesize_second_order_pair(S, 0.25, -0.5, 0.25);
    for (std::size_t i = 0; i <= 2; ++i)
        for (double t : linspace(0.0, 5.0, 41))
            CHECK(direct.a(i).eval(t) == Approx(C2.a(i).eval(t)).margin(1e-10));
}

TEST_CASE("chains with a first-order head reach both tail orders") {
    auto grid = linspace(0.0, 5.0, 61);
    auto A = unit_first_order();

    // 1-1-2
    auto B = synthesize_first_order_pair(A, 1.7, -0.8);
    auto C = synthesize_second_from_first(B, 1.2, 0.4, 0.6);
    auto rep = verify_chain(A, B, C, grid, 1e-6, 1e-10);
    CHECK(rep.transitive);
    CHECK(rep.path == "algebraic 1-1-2");
    CHECK(field(rep, "k1") == Approx(1.2 / 1.7).margin(1e-8));
    CHECK(field(rep, "k0") == Approx((0.4 + 0.8) / 1.7).margin(1e-8));
    CHECK(field(rep, "free_constant") == Approx(0.6).margin(1e-8));

    // 1-2-1
    auto B2 = synthesize_second_from_first(A, 2.0, 1.0, 0.0);
    auto C2 = synthesize_first_from_second(B2, 1.3, -0.4);
    auto rep2 = verify_chain(A, B2, C2, grid, 1e-6, 1e-10);
    CHECK(rep2.transitive);
    CHECK(rep2.path == "algebraic 1-2-1");
    CHECK(field(rep2, "k1") == Approx(0.65).margin(1e-8));
    CHECK(field(rep2, "k0") == Approx(-1.05).margin(1e-8));

    // 2-2-1
    auto S = eligible_second_order();
    auto B3 = synthesize_second_order_pair(S, 2.0, 0.6, -0.3);
    auto C3 = synthesize_first_from_second(B3, 1.1, 0.2);
    auto rep3 = verify_chain(S, B3, C3, grid, 1e-6, 1e-10);
    CHECK(rep3.transitive);
    CHECK(rep3.path == "algebraic 2-2-1");
    double r = std::sqrt(2.0);
    CHECK(field(rep3, "k1") == Approx(r * 1.1).margin(1e-8));
    CHECK(field(rep3, "k0") == Approx(0.2 + 0.6 * 1.1 / (2.0 * r)).margin(1e-8));
}

TEST_CASE("an all-second-order chain is checked against the defect") {
    auto grid = linspace(0.0, 3.0, 31);
    auto A = ts::make_system(2, {"5", "2", "1"}, 0.0, {0.0, 0.0}, 0.0, 5.0, "lti");
    auto B = synthesize_second_order_pair(A, 2.0, 1.0, -0.5);
    auto C = synthesize_second_order_pair(B, 1.5, -0.7, 0.2);
    auto rep = verify_chain(A, B, C, grid, 1e-6, 1e-10);
    CHECK(rep.path == "algebraic 2-2-2");
    CHECK(rep.note.find("defect check is authoritative") != std::string::npos);
    CHECK(rep.transitive);
    double r = std::sqrt(2.0);
    CHECK(field(rep, "k2") == Approx(3.0).margin(1e-8));
    CHECK(field(rep, "k1") == Approx(1.5 - 0.7 * r).margin(1e-8));
    CHECK(field(rep, "k0") == Approx(-0.75 + 0.2 - 0.7 / (2.0 * r)).margin(1e-8));
}

TEST_CASE("higher orders fall back to numerical defects") {
    auto grid = linspace(0.0, 3.0, 31);
    // (D+1), (D+1)^2, (D+1)^3: constant coefficients always commute
    auto A = ts::make_system(1, {"1", "1"}, 0.0, {0.0}, 0.0, 5.0, "p1");
    auto B = ts::make_system(2, {"1", "2", "1"}, 0.0, {0.0, 0.0}, 0.0, 5.0, "p2");
    auto C = ts::make_system(3, {"1", "3", "3", "1"}, 0.0, {0.0, 0.0, 0.0}, 0.0, 5.0, "p3");
    auto rep = verify_chain(A, B, C, grid, 1e-6, 1e-10);
    CHECK(rep.path == "numerical-only");
    CHECK(rep.transitive);
    CHECK_FALSE(rep.predicted_ac.has_value());
    CHECK(rep.ab.note == "numerical-only");
}

TEST_CASE("the chain verdict does not depend on reading direction") {
    auto grid = linspace(0.0, 5.0, 61);
    auto fwd = verify_chain(ts::demo_a(), ts::demo_b(), ts::demo_c(), grid, 1e-6, 1e-10);
    auto rev = verify_chain(ts::demo_c(), ts::demo_b(), ts::demo_a(), grid, 1e-6, 1e-10);
    CHECK(fwd.transitive == rev.transitive);
}
