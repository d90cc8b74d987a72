#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "ltvc/expr.hpp"

using ltvc::Expr;
using ltvc::parse_expr;
using Catch::Approx;

namespace {

double central_difference(const Expr& e, double t, double h = 1e-5) {
    return (e.eval(t + h) - e.eval(t - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("parse handles the grammar basics") {
    auto e = parse_expr("(t+1)");
    CHECK(e.eval(0.0) == 1.0);
    CHECK(e.eval(1.0) == 2.0);

    CHECK(parse_expr("(t+1)^2").eval(1.0) == 4.0);
    CHECK(parse_expr("t+2").eval(0.0) == 2.0);
    CHECK(parse_expr("exp(0-t)").eval(1.0) == Approx(0.367879441).epsilon(1e-9));

    // precedence and associativity
    CHECK(parse_expr("2+3*4").eval(0.0) == 14.0);
    CHECK(parse_expr("2*3^2").eval(0.0) == 18.0);
    CHECK(parse_expr("10-4-3").eval(0.0) == 3.0);
    CHECK(parse_expr("12/4/3").eval(0.0) == 1.0);
    // unary minus binds tighter than ^, so -t^2 is (-t)^2
    CHECK(parse_expr("-t^2").eval(3.0) == 9.0);
    CHECK(parse_expr("0-t^2").eval(3.0) == -9.0);
}

TEST_CASE("equivalent forms evaluate equal at random points") {
    auto lhs = parse_expr("2*(t+1)");
    auto rhs = parse_expr("(2*t)+2");
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> pick(-50.0, 50.0);
    for (int i = 0; i < 100; ++i) {
        double t = pick(rng);
        CHECK(lhs.eval(t) == Approx(rhs.eval(t)).epsilon(1e-14));
    }
}

TEST_CASE("evaluation is deterministic") {
    auto e = parse_expr("sin(t)*exp(t/3) + sqrt(t+2)^3");
    for (double t : {0.0, 0.5, 1.7, 4.0}) {
        double a = e.eval(t);
        double b = e.eval(t);
        CHECK(a == b);
    }
}

TEST_CASE("pretty-print round trip preserves evaluation") {
    std::vector<std::string> corpus = {
        "t + 1",
        "(t+1)^2",
        "-(t + 1)",
        "2*t + 5",
        "1 - t",
        "(2*(3*(t+1)) - 2*(t+1))/(4*sqrt((t+1)^2))",
        "exp(-t)*sin(2*t) + cos(t)/(t+3)",
        "ln(t+2)^2 - sqrt(t+1)*t",
        "t^-0.5 + t^0.5",
        "-t^2 + 3",
    };
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pick(0.1, 5.0);
    for (const auto& text : corpus) {
        auto e = parse_expr(text);
        auto round = parse_expr(e.str());
        for (int i = 0; i < 25; ++i) {
            double t = pick(rng);
            INFO(text << "  printed as  " << e.str());
            CHECK(round.eval(t) == Approx(e.eval(t)).epsilon(1e-14));
        }
    }
}

TEST_CASE("derivatives match the spot examples") {
    auto d1 = parse_expr("(t+1)^2").derivative();
    for (double t : {0.0, 0.5, 2.0, 7.0}) CHECK(d1.eval(t) == Approx(2.0 * (t + 1.0)));

    auto d2 = parse_expr("3*(t+1)").derivative();
    CHECK(d2.is_constant());
    CHECK(d2.eval(0.0) == 3.0);

    auto d3 = parse_expr("5").derivative();
    CHECK(d3.is_constant());
    CHECK(d3.eval(1.0) == 0.0);
}

TEST_CASE("derivative of every production agrees with central differences") {
    // one expression per grammar production, kept away from singularities
    std::vector<std::string> corpus = {
        "t + sin(t)",            // add
        "t - cos(t)",            // sub
        "t*sin(t)",              // mul
        "sin(t)/(t+2)",          // div
        "(t+1)^3",               // integer power
        "(t+1)^0.5",             // fractional power
        "(t+1)^-2",              // negative power
        "-(t^2)",                // negation
        "exp(t/2)",              // exp
        "ln(t+1)",               // ln
        "sqrt(t+1)",             // sqrt
        "sin(2*t+1)",            // sin
        "cos(t^2)",              // cos
        "exp(sin(t))*ln(t+2)",   // composition
    };
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> pick(0.2, 4.0);
    for (const auto& text : corpus) {
        auto e = parse_expr(text);
        auto d = e.derivative();
        for (int i = 0; i < 50; ++i) {
            double t = pick(rng);
            double sym = d.eval(t);
            double num = central_difference(e, t);
            INFO(text << " at t=" << t);
            CHECK(sym == Approx(num).epsilon(1e-6).margin(1e-9));
        }
    }
}

TEST_CASE("parse errors carry byte offsets") {
    using ltvc::parse_error;
    CHECK_THROWS_AS(parse_expr("t +"), parse_error);
    CHECK_THROWS_AS(parse_expr("(t+1"), parse_error);
    CHECK_THROWS_AS(parse_expr("x + 1"), parse_error);
    CHECK_THROWS_AS(parse_expr("t^t"), parse_error);
    CHECK_THROWS_AS(parse_expr(""), parse_error);
    CHECK_THROWS_AS(parse_expr("sin()"), parse_error);
    CHECK_THROWS_AS(parse_expr("2 ** 3"), parse_error);

    try {
        parse_expr("t + @");
        FAIL("expected a parse error");
    } catch (const parse_error& e) {
        CHECK(e.offset == 4);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("evaluation domain errors name the offending subexpression") {
    using ltvc::eval_error;
    CHECK_THROWS_AS(parse_expr("1/t").eval(0.0), eval_error);
    CHECK_THROWS_AS(parse_expr("ln(t)").eval(-1.0), eval_error);
    CHECK_THROWS_AS(parse_expr("sqrt(t)").eval(-4.0), eval_error);
    CHECK_THROWS_AS(parse_expr("t^-1").eval(0.0), eval_error);
    CHECK_THROWS_AS(parse_expr("t^0.5").eval(-1.0), eval_error);

    try {
        (void)parse_expr("1/(t-2)").eval(2.0);
        FAIL("expected an eval error");
    } catch (const eval_error& e) {
        CHECK(std::string(e.what()).find("t-2") != std::string::npos);
    }
}

TEST_CASE("constant folding keeps synthesized coefficients tidy") {
    Expr t = Expr::time();
    CHECK((Expr(2.0) + Expr(3.0)).is_constant());
    CHECK((t * Expr(0.0)).is_constant());
    CHECK((t * Expr(0.0)).eval(5.0) == 0.0);
    CHECK((Expr(0.0) / (t + Expr(1.0))).is_constant());
    CHECK((t + Expr(0.0)).str() == "t");
    CHECK((t * Expr(1.0)).str() == "t");
    CHECK(pow(t, 1.0).str() == "t");
    CHECK(pow(t, 0.0).is_constant());
}
