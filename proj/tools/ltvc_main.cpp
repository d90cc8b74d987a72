// Command-line front door: load systems, check commutativity, compute
// impulse and cascade responses, synthesize partners, verify chains, and
// reproduce the worked three-system example.
//
// Exit codes: 0 = positive verdict / success, 1 = negative verdict,
// 2 = usage or input error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ltvc/cascade.hpp"
#include "ltvc/commute.hpp"
#include "ltvc/expr.hpp"
#include "ltvc/impulse.hpp"
#include "ltvc/numerics.hpp"
#include "ltvc/reporting.hpp"
#include "ltvc/system.hpp"
#include "ltvc/transitivity.hpp"

namespace {

using namespace ltvc;

double shared_t0(const LTVSystem& a, const LTVSystem& b) {
    if (a.t0 != b.t0)
        throw error("systems disagree on t0 (" + report_real(a.t0) + " vs " + report_real(b.t0) +
                    ")");
    return a.t0;
}

double default_t_end(std::initializer_list<const LTVSystem*> systems) {
    double hi = std::numeric_limits<double>::infinity();
    for (const auto* s : systems) hi = std::min(hi, s->domain_hi);
    return hi;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        write_file_atomic(out_path, text);
}

// ----------------------------------------------------------------- check --

int run_check(const std::string& path_a, const std::string& path_b, double tol, std::size_t points,
              double t_end_opt) {
    auto A = load_system(path_a);
    auto B = load_system(path_b);
    double t0 = shared_t0(A, B);
    double t_end = std::isnan(t_end_opt) ? default_t_end({&A, &B}) : t_end_opt;
    if (!(t_end > t0)) throw error("evaluation window is empty");
    auto grid = linspace(t0, t_end, points);

    if (A.order == 0 && B.order == 0) {
        std::cout << "pair: " << A.label() << ", " << B.label() << "\n"
                  << "verdict: commutative\n"
                  << "note: two scalars always commute; the cascade is the product of weights\n";
        return 0;
    }

    if (A.order == 0 || B.order == 0 || A.order > 2 || B.order > 2) {
        double defect = commutativity_defect(A, B, t0, grid, std::min(tol, 1e-9));
        bool ok = defect < std::max(tol, 1e-9);
        std::cout << "pair: " << A.label() << ", " << B.label() << "\n"
                  << "verdict: " << (ok ? "commutative" : "not-commutative") << "\n"
                  << "max |h_ab - h_ba| over the grid: " << report_real(defect) << "\n"
                  << "note: no algebraic test for this order signature; verdict is numerical-only\n";
        return ok ? 0 : 1;
    }

    auto rep = extract_pair_constants(A, B, grid, tol);
    if (A.order == 1 && B.order == 1) rep = check_unrelaxed(A, B, std::move(rep));
    std::cout << render_report(rep);
    return rep.verdict == Verdict::commutative ? 0 : 1;
}

// --------------------------------------------------------------- impulse --

int run_impulse(const std::string& path, double tau_opt, double t_end_opt, std::size_t points,
                double tol, const std::string& method, const std::string& out_path) {
    auto s = load_system(path);
    if (s.order == 0)
        throw error(s.label() +
                    ": a scalar has no impulse-response trajectory; its response is the weighted "
                    "impulse 1/a0(tau) itself");
    double tau = std::isnan(tau_opt) ? s.t0 : tau_opt;
    double t_end = std::isnan(t_end_opt) ? s.domain_hi : t_end_opt;
    if (!(t_end > tau)) throw error("evaluation window is empty");
    if (method == "closed-form" && s.order != 1)
        throw error("closed-form method requires an order-1 system");

    auto grid = linspace(tau, t_end, points);
    ImpulseResponse resp = method == "closed-form" ? closed_form_impulse_response(s, tau, t_end, tol)
                                                   : impulse_response(s, tau, t_end, tol);
    std::vector<std::vector<double>> rows;
    rows.reserve(grid.size());
    for (double t : grid) rows.push_back({tau, t, resp.traj.eval(t)});
    std::string csv = render_csv("tau,t,h", rows);
    emit(csv, out_path);
    if (!out_path.empty())
        std::cout << "wrote " << rows.size() << " rows (" << resp.method << ") to " << out_path
                  << "\n";
    return 0;
}

// --------------------------------------------------------------- cascade --

int run_cascade(const std::string& path_a, const std::string& path_b, double t_end_opt,
                std::size_t points, double tol, const std::string& out_path) {
    auto A = load_system(path_a);
    auto B = load_system(path_b);
    double t0 = shared_t0(A, B);
    if (A.order == 0 && B.order == 0) {
        auto w = scalar_pair_cascade(A, B, t0);
        if (!out_path.empty())
            throw error("two scalars cascade to a weighted impulse, not a grid response; "
                        "no CSV to write");
        std::cout << "cascade of two scalars: weighted impulse at t0 with weight "
                  << report_real(w.weight) << "\n";
        return 0;
    }
    double t_end = std::isnan(t_end_opt) ? default_t_end({&A, &B}) : t_end_opt;
    if (!(t_end > t0)) throw error("evaluation window is empty");
    auto grid = linspace(t0, t_end, points);

    std::vector<double> h_ab, h_ba;
    if (A.order == 0) {
        h_ab = scalar_cascade(A, B, ScalarPosition::first, t0, grid, tol).h;
        h_ba = scalar_cascade(A, B, ScalarPosition::second, t0, grid, tol).h;
    } else if (B.order == 0) {
        h_ab = scalar_cascade(B, A, ScalarPosition::second, t0, grid, tol).h;
        h_ba = scalar_cascade(B, A, ScalarPosition::first, t0, grid, tol).h;
    } else {
        h_ab = cascade_impulse(A, B, t0, grid, tol).h;
        h_ba = cascade_impulse(B, A, t0, grid, tol).h;
    }

    double max_defect = 0.0;
    std::vector<std::vector<double>> rows;
    rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double d = std::abs(h_ab[i] - h_ba[i]);
        max_defect = std::max(max_defect, d);
        rows.push_back({t0, grid[i], h_ab[i], h_ba[i], d});
    }
    std::string csv = render_csv("t0,t,h_ab,h_ba,defect", rows);
    if (out_path.empty())
        std::cout << csv;
    else
        write_file_atomic(out_path, csv);
    std::cout << "max defect over the grid: " << report_real(max_defect) << "\n";
    return 0;
}

// ----------------------------------------------------------------- synth --

int run_synth(const std::string& mode, const std::string& src_path, std::optional<double> k2,
              std::optional<double> k1, std::optional<double> k0, std::optional<double> l1,
              std::optional<double> l0, std::optional<double> c0, const std::string& out_path) {
    auto src = load_system(src_path);
    auto need = [&](const std::optional<double>& v, const char* flag) -> double {
        if (!v) throw error(std::string("mode '") + mode + "' requires " + flag);
        return *v;
    };
    LTVSystem out;
    if (mode == "first-order") {
        out = synthesize_first_order_pair(src, need(k1, "--k1"), need(k0, "--k0"));
    } else if (mode == "first-from-second") {
        out = synthesize_first_from_second(src, need(k1, "--k1"), need(k0, "--k0"));
    } else if (mode == "second-order") {
        out = synthesize_second_order_pair(src, need(k2, "--k2"), need(k1, "--k1"),
                                           need(k0, "--k0"));
    } else if (mode == "second-from-first") {
        out = synthesize_second_from_first(src, need(l1, "--l1"), need(l0, "--l0"),
                                           need(c0, "--c0"));
    } else {
        throw error("unknown synthesis mode: " + mode);
    }
    write_system(out, out_path);
    std::cout << "wrote order-" << out.order << " partner of " << src.label() << " to " << out_path
              << "\n";
    for (std::size_t i = out.order + 1; i-- > 0;)
        std::cout << "  coeff." << i << " = " << out.a(i).str() << "\n";
    return 0;
}

// ---------------------------------------------------------- transitivity --

int run_transitivity(const std::string& pa, const std::string& pb, const std::string& pc,
                     double t_end_opt, std::size_t points, double tol, double solver_tol) {
    auto A = load_system(pa);
    auto B = load_system(pb);
    auto C = load_system(pc);
    double t0 = shared_t0(A, B);
    shared_t0(A, C);
    double t_end = std::isnan(t_end_opt) ? default_t_end({&A, &B, &C}) : t_end_opt;
    if (!(t_end > t0)) throw error("evaluation window is empty");
    auto grid = linspace(t0, t_end, points);
    auto rep = verify_chain(A, B, C, grid, tol, solver_tol);
    std::cout << render_chain_report(rep);
    return rep.transitive ? 0 : 1;
}

// ------------------------------------------------------------------ demo --

LTVSystem make_demo_system(const std::string& name, const std::string& c1, const std::string& c0) {
    LTVSystem s;
    s.order = 1;
    s.coeffs = {parse_expr(c0), parse_expr(c1)};
    s.t0 = 0.0;
    s.ics = {0.0};
    s.domain_lo = -0.9;
    s.domain_hi = 10.0;
    s.name = name;
    return s;
}

int run_demo(const std::string& out_path) {
    // the worked trio: B = 2A + 1 and C = -0.5B + 3.5 in pair-constant terms
    auto A = make_demo_system("A", "t + 1", "t + 2");
    auto B = make_demo_system("B", "2*(t + 1)", "2*t + 5");
    auto C = make_demo_system("C", "-(t + 1)", "1 - t");

    std::ostringstream rep;
    bool ok = true;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            rep << "UNEXPECTED: " << what << "\n";
        }
    };

    rep << "worked example: three first-order systems, t0 = 0, domain [-0.9, 10]\n\n";
    rep << "  A: (t+1) y' + (t+2) y = x\n";
    rep << "  B: 2*(t+1) y' + (2*t+5) y = x\n";
    rep << "  C: -(t+1) y' + (1-t) y = x\n\n";

    auto grid = linspace(0.0, 5.0, 101);
    auto rab = extract_pair_constants(A, B, grid);
    auto rbc = extract_pair_constants(B, C, grid);
    auto rac = extract_pair_constants(A, C, grid);
    const auto* fab = std::get_if<FirstOrderConstants>(&*rab.constants);
    const auto* fbc = std::get_if<FirstOrderConstants>(&*rbc.constants);
    const auto* fac = std::get_if<FirstOrderConstants>(&*rac.constants);
    expect(fab && std::abs(fab->k1 - 2.0) < 1e-9 && std::abs(fab->k0 - 1.0) < 1e-9,
           "(A,B) constants should be (2, 1)");
    expect(fbc && std::abs(fbc->k1 + 0.5) < 1e-9 && std::abs(fbc->k0 - 3.5) < 1e-9,
           "(B,C) constants should be (-0.5, 3.5)");
    expect(fac && std::abs(fac->k1 + 1.0) < 1e-9 && std::abs(fac->k0 - 3.0) < 1e-9,
           "(A,C) constants should be (-1, 3)");
    rep << "pair constants:\n";
    if (fab) rep << "  (A,B): k1 = " << report_real(fab->k1) << ", k0 = " << report_real(fab->k0)
                 << "\n";
    if (fbc) rep << "  (B,C): k1 = " << report_real(fbc->k1) << ", k0 = " << report_real(fbc->k0)
                 << "\n";
    if (fab && fbc) {
        auto comp = compose_first_order_constants(fab->k1, fab->k0, fbc->k1, fbc->k0);
        rep << "  (A,C) composed:  k1 = " << report_real(comp.k1)
            << ", k0 = " << report_real(comp.k0) << "\n";
    }
    if (fac) rep << "  (A,C) extracted: k1 = " << report_real(fac->k1)
                 << ", k0 = " << report_real(fac->k0) << "\n";
    rep << "\n";

    double hA = first_order_closed_form(A, 0.0, 1.0);
    double hB = first_order_closed_form(B, 0.0, 1.0);
    double hC = first_order_closed_form(C, 0.0, 1.0);
    expect(std::abs(hA - std::exp(-1.0) / 2.0) < 1e-9, "h_A(1,0) should equal e^-1/2");
    expect(std::abs(hC + 4.0 * std::exp(-1.0)) < 1e-9, "h_C(1,0) should equal -4e^-1");
    rep << "impulse responses (impulse at tau = 0):\n";
    rep << "  h_A(1,0) = " << report_real(hA) << "\n";
    rep << "  h_B(1,0) = " << report_real(hB) << "\n";
    rep << "  h_C(1,0) = " << report_real(hC) << "\n\n";

    auto cab = cascade_impulse(A, B, 0.0, grid, 1e-11);
    auto cba = cascade_impulse(B, A, 0.0, grid, 1e-11);
    auto cac = cascade_impulse(A, C, 0.0, grid, 1e-11);
    auto cca = cascade_impulse(C, A, 0.0, grid, 1e-11);
    double dab = 0.0, dac = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dab = std::max(dab, std::abs(cab.h[i] - cba.h[i]));
        dac = std::max(dac, std::abs(cac.h[i] - cca.h[i]));
    }
    double hab1 = cab.h[20];  // t = 1 on the 101-point [0,5] grid
    double hac1 = cac.h[20];
    double hab1_ref = std::exp(-1.0) / 2.0 * (1.0 - std::pow(2.0, -0.5));
    double hac1_ref = -7.0 * std::exp(-1.0) / 6.0;
    expect(std::abs(hab1 - hab1_ref) < 1e-8, "h_AB(1,0) should match its closed form");
    expect(std::abs(hac1 - hac1_ref) < 1e-8, "h_AC(1,0) should match its closed form");
    expect(dab < 1e-6, "(A,B) cascade defect should vanish");
    expect(dac < 1e-6, "(A,C) cascade defect should vanish");
    rep << "cascades from t0 = 0 over [0, 5]:\n";
    rep << "  h_AB(1,0) = " << report_real(hab1) << "\n";
    rep << "  h_BA(1,0) = " << report_real(cba.h[20]) << "\n";
    rep << "  max |h_AB - h_BA| = " << report_real(dab) << "\n";
    rep << "  h_AC(1,0) = " << report_real(hac1) << "\n";
    rep << "  max |h_AC - h_CA| = " << report_real(dac) << "\n\n";

    double worst_delta = 0.0;
    for (double tau : linspace(0.0, 2.0, 101))
        worst_delta = std::max(worst_delta, std::abs(delta_integrand(A, B, 0.0, tau, 2.0)));
    double integral = delta_integral(A, B, 0.0, 2.0);
    expect(worst_delta > 1e-3, "pointwise integrand should be visibly nonzero");
    expect(std::abs(integral) < 1e-8, "integrated defect should vanish");
    rep << "pointwise vs integrated (t0 = 0, t = 2):\n";
    rep << "  max_tau |Delta(0,tau,2)| = " << report_real(worst_delta)
        << "  (the integrand does not vanish)\n";
    rep << "  |int_0^2 Delta dtau|     = " << report_real(std::abs(integral))
        << "  (the integral does)\n\n";

    auto chain = verify_chain(A, B, C, grid, 1e-6, 1e-10);
    expect(chain.transitive, "the A-B-C chain should be transitive");
    rep << "chain verdict: " << (chain.transitive ? "transitive" : "not transitive") << "\n";
    if (chain.transitive)
        rep << "all six cascade orderings of A, B, C realize the same input-output map\n";

    emit(rep.str(), out_path);
    if (!out_path.empty()) std::cout << "wrote report to " << out_path << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear time-varying systems: commutativity, cascades, transitivity"};
    app.require_subcommand(1);

    std::string path_a, path_b, path_c, out_path, method = "ode", mode, topic;
    double tol_check = 1e-8, tol_num = 1e-9, tol_chain = 1e-6, solver_tol = 1e-9;
    double tau = std::nan(""), t_end = std::nan("");
    std::size_t points = 101;
    std::optional<double> k2, k1, k0, l1, l0, c0;

    auto* check = app.add_subcommand("check", "decide whether two systems commute");
    check->add_option("A", path_a, "first system file")->required()->check(CLI::ExistingFile);
    check->add_option("B", path_b, "second system file")->required()->check(CLI::ExistingFile);
    check->add_option("--tol", tol_check, "constancy tolerance")->capture_default_str();
    check->add_option("--points", points, "grid points")->capture_default_str();
    check->add_option("--t-end", t_end, "end of the evaluation window (default: domain end)");

    auto* impulse = app.add_subcommand("impulse", "impulse response as CSV (tau,t,h)");
    impulse->add_option("SYSTEM", path_a, "system file")->required()->check(CLI::ExistingFile);
    impulse->add_option("--tau", tau, "impulse time (default: t0)");
    impulse->add_option("--t-end", t_end, "end of the evaluation window (default: domain end)");
    impulse->add_option("--points", points, "grid points")->capture_default_str();
    impulse->add_option("--tol", tol_num, "solver tolerance")->capture_default_str();
    impulse->add_option("--method", method, "ode | closed-form")
        ->check(CLI::IsMember({"ode", "closed-form"}))
        ->capture_default_str();
    impulse->add_option("--out", out_path, "CSV output path (default: stdout)");

    auto* cascade = app.add_subcommand("cascade",
                                       "both cascade orders as CSV (t0,t,h_ab,h_ba,defect)");
    cascade->add_option("A", path_a, "first system file")->required()->check(CLI::ExistingFile);
    cascade->add_option("B", path_b, "second system file")->required()->check(CLI::ExistingFile);
    cascade->add_option("--t-end", t_end, "end of the evaluation window (default: domain end)");
    cascade->add_option("--points", points, "grid points")->capture_default_str();
    cascade->add_option("--tol", tol_num, "solver tolerance")->capture_default_str();
    cascade->add_option("--out", out_path, "CSV output path (default: stdout)");

    auto* synth = app.add_subcommand("synth", "synthesize a commutative partner system");
    synth->add_option("MODE", mode,
                      "first-order | first-from-second | second-order | second-from-first")
        ->required()
        ->check(CLI::IsMember(
            {"first-order", "first-from-second", "second-order", "second-from-first"}));
    synth->add_option("SOURCE", path_a, "source system file")->required()->check(CLI::ExistingFile);
    synth->add_option("--k2", k2, "second-order leading constant");
    synth->add_option("--k1", k1, "leading constant");
    synth->add_option("--k0", k0, "additive constant");
    synth->add_option("--l1", l1, "leading constant (second-from-first)");
    synth->add_option("--l0", l0, "additive constant (second-from-first)");
    synth->add_option("--c0", c0, "free constant (second-from-first)");
    synth->add_option("--out", out_path, "output system file")->required();

    auto* trans = app.add_subcommand("transitivity", "verify an A-B-C chain");
    trans->add_option("A", path_a, "first system file")->required()->check(CLI::ExistingFile);
    trans->add_option("B", path_b, "middle system file")->required()->check(CLI::ExistingFile);
    trans->add_option("C", path_c, "third system file")->required()->check(CLI::ExistingFile);
    trans->add_option("--t-end", t_end, "end of the evaluation window (default: domain end)");
    trans->add_option("--points", points, "grid points")->capture_default_str();
    trans->add_option("--tol", tol_chain, "verdict tolerance")->capture_default_str();
    trans->add_option("--solver-tol", solver_tol, "ODE solver tolerance")->capture_default_str();

    auto* demo = app.add_subcommand("demo", "reproduce the worked three-system example");
    demo->add_option("TOPIC", topic, "example to run")
        ->required()
        ->check(CLI::IsMember({"section6"}));
    demo->add_option("--out", out_path, "report output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(check)) return run_check(path_a, path_b, tol_check, points, t_end);
        if (app.got_subcommand(impulse))
            return run_impulse(path_a, tau, t_end, points, tol_num, method, out_path);
        if (app.got_subcommand(cascade))
            return run_cascade(path_a, path_b, t_end, points, tol_num, out_path);
        if (app.got_subcommand(synth))
            return run_synth(mode, path_a, k2, k1, k0, l1, l0, c0, out_path);
        if (app.got_subcommand(trans))
            return run_transitivity(path_a, path_b, path_c, t_end, points, tol_chain, solver_tol);
        if (app.got_subcommand(demo)) return run_demo(out_path);
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const file_format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
