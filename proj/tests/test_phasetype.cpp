#include "doctest.h"
#include "oracles.hpp"

#include "renewalkit/phasetype.hpp"

#include <cmath>

using namespace rk;

namespace {

// Bounded-Lipschitz distance between two point masses at x and y: the optimal test function is
// a tent with slope L on [x, y] and height capped by 1 - L; the optimum is 2d/(2+d).
double bl_points(double d) { return 2.0 * d / (2.0 + d); }

}  // namespace

TEST_CASE("bounded-Lipschitz distance between point masses") {
    for (double d : {0.05, 0.5, 1.0, 3.0}) {
        const double got = bl_distance(point_target(1.0), point_target(1.0 + d), 4000);
        CHECK(got == doctest::Approx(bl_points(d)).epsilon(2e-3));
    }
    CHECK(bl_distance(point_target(2.0), point_target(2.0)) == doctest::Approx(0.0));
}

TEST_CASE("bounded-Lipschitz distance on grids is exact for small problems") {
    // Two atoms vs one atom; brute-force over a fine family of test functions is replaced by the
    // closed form for mu = delta_0, nu = delta_h on a grid with spacing h: 2h/(2+h).
    GridMeasure a{0.25, Vec::Zero(5)}, b{0.25, Vec::Zero(5)};
    a.w(0) = 1.0;
    b.w(2) = 1.0;
    CHECK(bl_distance(a, b) == doctest::Approx(bl_points(0.5)).epsilon(1e-12));
    // mass difference: |phi| <= 1 dominates
    GridMeasure c{0.25, Vec::Zero(5)};
    c.w(0) = 0.5;
    CHECK(bl_distance(a, c) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Erlang density and cdf") {
    for (int m : {0, 1, 4}) {
        CHECK(erlang_density(2.0, m, 0.7) == doctest::Approx(oracle::erlang_pdf(2.0, m, 0.7)).epsilon(1e-13));
        // cdf by midpoint quadrature of the oracle density
        double s = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) s += oracle::erlang_pdf(2.0, m, (i + 0.5) * 1.5 / n) * 1.5 / n;
        CHECK(erlang_cdf(2.0, m, 1.5) == doctest::Approx(s).epsilon(1e-7));
    }
}

TEST_CASE("exact Erlang target is represented with distance 0") {
    const ErlangFit f = fit_erlang_mixture(erlang_target(3.0, 2), 0.01);
    CHECK(f.exact);
    CHECK(f.distance == 0.0);
    CHECK(f.rate == 3.0);
    REQUIRE(f.branches.size() == 1);
    CHECK(f.branches[0].m == 2);
}

TEST_CASE("uniform[1,2] fit reaches 0.05") {
    const TargetMeasure u = uniform_target(1.0, 2.0);
    const ErlangFit f = fit_erlang_mixture(u, 0.05);
    CHECK(f.attained);
    CHECK(f.distance <= 0.05);
    // independent evaluation of the distance on a different grid resolution
    CHECK(bl_distance(mixture_measure(f), u, 8000) <= 0.05);
}

TEST_CASE("point mass fit concentrates") {
    const ErlangFit f = fit_erlang_mixture(point_target(1.0), 0.1);
    CHECK(f.attained);
    double mean = 0.0, var = 0.0;
    for (const auto& b : f.branches) {
        mean += b.q * (b.m + 1) / f.rate;
        var += b.q * (b.m + 1) / (f.rate * f.rate);
    }
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
    // BL to a point mass is close to E|X - 1|, so the spread is of order eps
    CHECK(std::sqrt(var) <= 2 * 0.1);
}

TEST_CASE("property: distance shrinks as M doubles") {
    const TargetMeasure u = uniform_target(1.0, 2.0);
    const double s = u.quantile(0.999);
    double prev = 1e9;
    for (int M = 4; M <= 128; M *= 2) {
        ErlangFit f = erlang_cells(u, M, s);
        const double d = bl_distance(mixture_measure(f), u);
        CHECK(d <= prev * 1.1);
        prev = d;
    }
}

TEST_CASE("single chain builds gamma_{2,3}") {
    PhaseTypeModel m;
    m.M = 2;
    m.rate = 2.0;
    m.compartments = {"A", "B"};
    m.pairs.push_back({"A", "B", 1.0, {{1.0, 3}}, 0.0});
    const BuiltNetwork b = build_network(m);
    const CompartmentSystem sys = b.system();
    CHECK(one_entrance_ok(sys));
    // entrance, root, 2 chain nodes, plus B
    CHECK(b.network.size() == 5);
    const TimeGrid g = make_grid(15.0, 1e-3);
    const ScalarKernelSet sk = compute_scalar_kernels(sys, g);
    double err = 0.0;
    for (int i = 0; i < g.nodes(); ++i) err = std::max(err, std::abs(sk.Phi(0, 1)(i) - oracle::erlang_pdf(2.0, 3, g.t(i))));
    CHECK(err <= 1e-8);
}

TEST_CASE("bifurcating graph for two branches") {
    PhaseTypeModel m;
    m.M = 3;
    m.rate = 3.0;
    m.compartments = {"A", "B"};
    m.pairs.push_back({"A", "B", 1.0, {{0.5, 1}, {0.5, 4}}, 0.0});
    const BuiltNetwork b = build_network(m);
    const TimeGrid g = make_grid(15.0, 1e-3);
    const ScalarKernelSet sk = compute_scalar_kernels(b.system(), g);
    double err = 0.0;
    for (int i = 0; i < g.nodes(); ++i) {
        const double ref = 0.5 * oracle::erlang_pdf(3.0, 1, g.t(i)) + 0.5 * oracle::erlang_pdf(3.0, 4, g.t(i));
        err = std::max(err, std::abs(sk.Phi(0, 1)(i) - ref));
    }
    CHECK(err <= 1e-8);
    // z has two successors
    const int z = b.network.index("z:A>B");
    int out = 0;
    for (int i = 0; i < b.network.size(); ++i)
        if (i != z && b.network.A(i, z) > 0.0) ++out;
    CHECK(out == 2);
}

TEST_CASE("zero mass pair has no root state") {
    PhaseTypeModel m;
    m.M = 1;
    m.rate = 1.0;
    m.compartments = {"A", "B", "C"};
    m.pairs.push_back({"A", "B", 1.0, {{1.0, 1}}, 0.0});
    m.pairs.push_back({"A", "C", 0.0, {{1.0, 1}}, 0.0});
    const BuiltNetwork b = build_network(m);
    CHECK_THROWS_AS(b.network.index("z:A>C"), InputError);
    const ScalarKernelSet sk = compute_scalar_kernels(b.system(), make_grid(5.0, 1e-2));
    CHECK(sk.Phi(0, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("verify approximation: exact Erlang and uniform targets") {
    const std::vector<PairTarget> exact{{"A", "B", erlang_target(4.0, 2, 0.6)}};
    const PhaseTypeModel me = fit_phase_type({"A", "B"}, exact, 0.01);
    const ApproxReport re = verify_approximation(exact, build_network(me), make_grid(10.0, 1e-3));
    CHECK(re.rows[0].distance <= 2e-3);
    CHECK(re.max_mass_error <= 1e-6);

    const std::vector<PairTarget> uni{{"A", "B", uniform_target(1.0, 2.0)}};
    const PhaseTypeModel mu = fit_phase_type({"A", "B"}, uni, 0.05);
    CHECK(mu.attained);
    const ApproxReport ru = verify_approximation(uni, build_network(mu), make_grid(5.0, 1e-3));
    CHECK(ru.total_distance <= 0.05);
    CHECK(ru.max_mass_error <= 1e-6);
}

TEST_CASE("phase-type input validation") {
    CHECK_THROWS_AS(uniform_target(2.0, 1.0), InputError);
    CHECK_THROWS_AS(fit_phase_type({"A", "B"}, {{"A", "A", point_target(1.0)}}, 0.1), InputError);
    CHECK_THROWS_AS(fit_phase_type({"A", "B"}, {{"A", "X", point_target(1.0)}}, 0.1), InputError);
    CHECK_THROWS_AS(fit_phase_type({"A", "B", "C"}, {{"A", "B", point_target(1.0, 0.7)}, {"A", "C", point_target(2.0, 0.7)}}, 0.1),
                    InputError);
}
