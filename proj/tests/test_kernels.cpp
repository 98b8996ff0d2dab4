#include "doctest.h"
#include "oracles.hpp"

#include "renewalkit/kernels.hpp"
#include "renewalkit/random_models.hpp"

#include <cmath>

using namespace rk;

namespace {

CompartmentSystem two_state_sys() {
    return decompose(validate_network({"1", "2"}, {{"1", "2", 1.0}, {"2", "1", 1.0}}), {{"1"}, {"2"}});
}
CompartmentSystem chain_sys() {
    return decompose(validate_network({"1", "2", "3"}, {{"1", "2", 1.0}, {"2", "3", 1.0}}), {{"1", "2"}, {"3"}});
}

double sup_diff(const Series& s, const TimeGrid& g, double (*f)(double)) {
    double m = 0.0;
    for (int i = 0; i < g.nodes(); ++i) m = std::max(m, std::abs(s(i) - f(g.t(i))));
    return m;
}

double expo(double t) { return std::exp(-t); }
double erl2(double t) { return t * std::exp(-t); }

}  // namespace

TEST_CASE("expm closed forms") {
    CHECK((expm(Mat::Zero(3, 3)) - Mat::Identity(3, 3)).norm() == 0.0);
    Mat M(2, 2);
    M << -1, 0, 1, -1;
    for (double t : {0.1, 1.0, 3.7}) {
        const Mat E = expm(M, t);
        CHECK(E(0, 0) == doctest::Approx(std::exp(-t)).epsilon(1e-13));
        CHECK(E(1, 0) == doctest::Approx(t * std::exp(-t)).epsilon(1e-13));
        CHECK(std::abs(E(0, 1)) < 1e-15);
    }
}

TEST_CASE("expm against the Taylor oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        Mat B = oracle::random_generator(rng, 5);
        B.diagonal().array() -= 0.3;  // a leaky generator block
        const Mat E = expm(B, 0.7);
        const Mat T = oracle::taylor_expm(B, 0.7);
        CHECK((E - T).cwiseAbs().maxCoeff() < 1e-12);
    }
    // large norm exercises the squaring phase
    Mat B = oracle::random_generator(rng, 4) * 20.0;
    const Mat T = oracle::taylor_expm(B / 64.0, 1.0, 60);
    Mat P = T;
    for (int k = 0; k < 6; ++k) P = P * P;
    CHECK((expm(B) - P).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("expm input validation") {
    CHECK_THROWS_AS(expm(Mat::Zero(2, 3)), InputError);
    Mat bad = Mat::Zero(2, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(expm(bad), InputError);
}

TEST_CASE("uniformized propagator matches expm on a large Metzler block") {
    std::mt19937_64 rng(2);
    Mat B = oracle::random_generator(rng, 120, 0.05);
    B.diagonal().array() -= 0.5;
    const BlockPropagator prop(B, 0.01);
    CHECK_FALSE(prop.is_dense());
    Vec v = Vec::Ones(120);
    Vec w = v;
    prop.apply(v);
    w = expm(B, 0.01) * w;
    CHECK((v - w).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("two-state kernels are exponentials") {
    const TimeGrid g = make_grid(10.0, 1e-2);
    const KernelSet ks = compute_kernels(two_state_sys(), g);
    CHECK(sup_diff(ks.g(0, 1).entry(0, 0, g.nodes()), g, expo) < 1e-13);
    CHECK(sup_diff(ks.g(1, 0).entry(0, 0, g.nodes()), g, expo) < 1e-13);
    CHECK(sup_diff(ks.K[0].entry(0, 0, g.nodes()), g, expo) < 1e-13);
    CHECK(conservation_defect(ks) < 1e-12);
}

TEST_CASE("chain kernels: Erlang-2 exit from {1,2}") {
    const TimeGrid g = make_grid(10.0, 1e-2);
    const auto sys = chain_sys();
    const KernelSet ks = compute_kernels(sys, g);
    // column of the first state summed over rows
    Series s = Series::Zero(g.nodes());
    for (int i = 0; i < 2; ++i) s += ks.K[0].entry(i, 0, g.nodes());
    CHECK(sup_diff(s, g, erl2) < 1e-13);
    // compartment {3} has no exits
    CHECK((ks.K[1].zero() || ks.K[1].data.cwiseAbs().maxCoeff() == 0.0));
}

TEST_CASE("forcing examples") {
    const TimeGrid g = make_grid(5.0, 1e-2);
    const Forcing z = compute_forcing(two_state_sys(), g, Vec::Zero(2));
    for (const auto& m : z.S0) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& m : z.J0) CHECK(m.cwiseAbs().maxCoeff() == 0.0);

    Vec n0(2);
    n0 << 1, 0;
    const Forcing f = compute_forcing(two_state_sys(), g, n0);
    CHECK(sup_diff(f.S0[1].col(0), g, expo) < 1e-13);
    CHECK(sup_diff(f.J0[0].col(0), g, expo) < 1e-13);

    Vec c0(3);
    c0 << 1, 0, 0;
    const Forcing fc = compute_forcing(chain_sys(), g, c0);
    CHECK(sup_diff(fc.J0[0].rowwise().sum(), g, erl2) < 1e-13);
}

TEST_CASE("scalar reduction examples") {
    const TimeGrid g = make_grid(40.0, 1e-3);
    const ScalarKernelSet sk = reduce_one_entrance(compute_kernels(two_state_sys(), g), two_state_sys());
    CHECK(sup_diff(sk.Phi(0, 1), g, expo) < 1e-13);
    CHECK(sk.p(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    const auto rows = kernel_mass_report(sk);
    CHECK(rows[0].status == "conservative");
    CHECK(std::abs(rows[0].mass - 1.0) <= 1e-6);

    // entrance-only propagation gives the same kernels
    const ScalarKernelSet sk2 = compute_scalar_kernels(two_state_sys(), g);
    CHECK((sk.Phi(0, 1) - sk2.Phi(0, 1)).cwiseAbs().maxCoeff() < 1e-13);

    const TimeGrid g2 = make_grid(20.0, 1e-3);
    const auto c = chain_sys();
    const ScalarKernelSet skc = compute_scalar_kernels(c, g2);
    CHECK(sup_diff(skc.Phi(0, 1), g2, erl2) < 1e-12);
    const auto rc = kernel_mass_report(skc);
    CHECK(rc[1].status == "sink");
    CHECK(rc[1].mass == 0.0);
}

TEST_CASE("internal sink is flagged as leaky") {
    // 1 -> 2 absorbing inside {1,2}; 1 -> 3 leaves
    const auto net = validate_network({"1", "2", "3"}, {{"1", "2", 1.0}, {"1", "3", 1.0}, {"3", "1", 1.0}});
    const auto sys = decompose(net, {{"1", "2"}, {"3"}});
    const ScalarKernelSet sk = compute_scalar_kernels(sys, make_grid(40.0, 1e-3));
    CHECK(sk.internal_sink[0]);
    CHECK(sk.mass(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(kernel_mass_report(sk)[0].status == "leaky");
}

TEST_CASE("exact kernel masses") {
    // leaky compartment: half the mass is trapped in state 2
    const auto net = validate_network({"1", "2", "3"}, {{"1", "2", 1.0}, {"1", "3", 1.0}, {"3", "1", 1.0}});
    const Mat p = exact_kernel_masses(decompose(net, {{"1", "2"}, {"3"}}));
    CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p(1, 0) == doctest::Approx(1.0).epsilon(1e-14));

    // singleton compartments: p_{ab} = A_ba / |A_aa|
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const Mat A = oracle::random_generator(rng, 6, 0.5);
        const Mat q = exact_kernel_masses(singleton_partition(network_from_matrix({"a", "b", "c", "d", "e", "f"}, A)));
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                if (a != b) CHECK(q(a, b) == doctest::Approx(A(b, a) / -A(a, a)).epsilon(1e-12));
    }
}

TEST_CASE("property: exact masses match converged quadrature") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const RandomSystem rs = random_system(rng, 6, 3, 0.5);
        if (!one_entrance_ok(rs.sys)) continue;
        const Mat p = exact_kernel_masses(rs.sys);
        const ScalarKernelSet sk = compute_scalar_kernels(rs.sys, make_grid(std::ceil(suggest_tmax(rs.sys).t_max), 1e-3));
        CHECK((sk.p - p).cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("truncated horizon") {
    const ScalarKernelSet sk = compute_scalar_kernels(two_state_sys(), make_grid(1.0, 1e-3));
    CHECK(sk.mass(0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));
    CHECK(kernel_mass_report(sk)[0].status == "truncated");
}

TEST_CASE("suggested horizon comes from the slowest block eigenvalue") {
    const HorizonSuggestion h = suggest_tmax(two_state_sys());
    CHECK(h.slowest_rate[0] == doctest::Approx(1.0));
    CHECK(h.t_max == doctest::Approx(-std::log(1e-8)).epsilon(1e-9));
}

TEST_CASE("property: conservation, nonnegativity, integrated kernel identity") {
    std::mt19937_64 rng(8);
    const TimeGrid g = make_grid(6.0, 1e-2);
    for (int trial = 0; trial < 10; ++trial) {
        const RandomSystem rs = random_system(rng, 6, 3, 0.4);
        const KernelSet ks = compute_kernels(rs.sys, g);
        CHECK(conservation_defect(ks) < 1e-12);
        for (const auto& m : ks.K)
            if (!m.zero()) CHECK(m.data.minCoeff() >= 0.0);
        for (const auto& m : ks.G)
            if (!m.zero()) CHECK(m.data.minCoeff() >= 0.0);
        for (int a = 0; a < rs.sys.count(); ++a) {
            const int na = rs.sys.size(a);
            if (ks.K[a].zero()) continue;
            // e^T int_0^T K = e^T (I - e^{T A_aa}); oracle side via Taylor series on small steps
            Mat P = Mat::Identity(na, na);
            const Mat step = oracle::taylor_expm(rs.sys.block(a, a), 0.1);
            for (int k = 0; k < 60; ++k) P = step * P;
            for (int j = 0; j < na; ++j) {
                Series col = Series::Zero(g.nodes());
                for (int i = 0; i < na; ++i) col += ks.K[a].entry(i, j, g.nodes());
                const double lhs = trapz(col, g.dt);
                const double rhs = 1.0 - P.col(j).sum();
                CHECK(std::abs(lhs - rhs) < 1e-4);
            }
        }
    }
}

TEST_CASE("property: masses converge at second order") {
    const auto c = chain_sys();
    const double exact = 1.0 - 7.0 * std::exp(-6.0);  // int_0^6 t e^{-t}
    const double e1 = std::abs(compute_scalar_kernels(c, make_grid(6.0, 0.02)).p(0, 1) - exact);
    const double e2 = std::abs(compute_scalar_kernels(c, make_grid(6.0, 0.01)).p(0, 1) - exact);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}
