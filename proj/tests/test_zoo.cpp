#include "doctest.h"
#include "oracles.hpp"

#include "renewalkit/zoo.hpp"

#include <cmath>
#include <random>

using namespace rk;

TEST_CASE("Hopfield reference parameters") {
    const HopfieldParams p = hopfield_fig4(false), q = hopfield_fig4(true);
    CHECK(p.alpha == doctest::Approx(0.01));
    CHECK(p.beta == doctest::Approx(1e-4));
    CHECK(p.Q == doctest::Approx(1e4));
    CHECK(p.lambda == doctest::Approx(2e-4));
    CHECK(p.xi() == doctest::Approx(2.0));
    CHECK(q.xi() == doctest::Approx(8.0));
    CHECK(hopfield_theta(p, q) == doctest::Approx(0.25));
}

TEST_CASE("Hopfield response: quadrature and Laplace agree") {
    const HopfieldResponse r = hopfield_response(hopfield_fig4(false));
    CHECK(std::abs(r.P_quadrature - r.P_laplace) <= 1e-6);
    CHECK(r.P_laplace == doctest::Approx(0.025).epsilon(0.15));
    CHECK(r.phi.minCoeff() >= 0.0);
}

TEST_CASE("Hopfield response against a direct ODE oracle") {
    // Moderate parameters so RK4 on the 5-state network is cheap.
    HopfieldParams p;
    p.k = 1.0;
    p.alpha = 0.5;
    p.beta = 0.3;
    p.Q = 2.0;
    p.mu = 0.2;
    p.lambda = 0.4;
    p.E1 = std::log(2.0);
    p.E2 = std::log(3.0);
    const HopfieldResponse r = hopfield_response(p, 0.01, 60.0);
    const ReactionNetwork net = hopfield_network(p);
    Vec n0 = Vec::Zero(net.size());
    n0(net.index("C")) = 1.0;
    const Mat traj = oracle::rk4_linear(net.A, n0, 0.01, r.grid.nodes(), 4);
    const int P = net.index("P");
    // int phi = amount produced
    CHECK(r.P_quadrature == doctest::Approx(traj(r.grid.n, P)).epsilon(1e-4));
}

TEST_CASE("Hopfield discrimination at the reference parameters") {
    const HopfieldDiscrimination d = hopfield_discrimination(hopfield_fig4(false), hopfield_fig4(true));
    const double th2 = d.theta * d.theta;
    CHECK(d.ratio_laplace >= th2);
    CHECK(std::abs(d.ratio_laplace - th2) <= 0.15 * th2);
    CHECK(d.ratio_formula == doctest::Approx(d.ratio_laplace).epsilon(1e-9));
    CHECK(d.single_step_ratio == doctest::Approx(d.theta).epsilon(0.1));
}

TEST_CASE("property: discrimination ratio is at least theta^2") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> L(-3.0, 0.0), E(0.0, 2.0);
    int checked = 0;
    for (int draw = 0; draw < 100; ++draw) {
        HopfieldParams p;
        p.k = std::pow(10.0, L(rng) + 1.0);
        p.alpha = std::pow(10.0, L(rng));
        p.beta = std::pow(10.0, L(rng));
        p.Q = std::pow(10.0, -L(rng));
        p.mu = std::pow(10.0, L(rng));
        p.lambda = std::pow(10.0, L(rng));
        p.E1 = E(rng);
        p.E2 = p.E1 + E(rng);
        HopfieldParams bar = p;
        const double shift = E(rng) + 0.1;  // wrong substrate binds weaker
        bar.E1 += shift;
        bar.E2 += shift;
        const HopfieldDiscrimination d = hopfield_discrimination(p, bar);
        CHECK(d.ratio_laplace >= d.theta * d.theta * (1.0 - 1e-12));
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("polymer front moves at speed 1/mu") {
    const TimeGrid g = make_grid(200.0, 0.01);
    Series psi(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) psi(i) = 4.0 * g.t(i) * std::exp(-2.0 * g.t(i));
    const PolymerFront f = polymer_front(psi, g, 260);
    CHECK(f.mean == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(f.speed == doctest::Approx(1.0).epsilon(0.05));
    CHECK(f.plateau == doctest::Approx(1.0).epsilon(0.05));
    CHECK_FALSE(f.boundary_reached);
}

TEST_CASE("adaptation closed form") {
    const TimeGrid g = make_grid(40.0, 1e-3);
    const AdaptationResponse r = adaptation_response(1.0, 3.0, g, [](double) { return 3.0; });
    CHECK(r.phi(0) == doctest::Approx(3.0));
    CHECK(std::abs(r.integral) <= 1e-6);
    // s = b leaves X at 1
    CHECK((r.X.array() - 1.0).abs().maxCoeff() <= 1e-12);
    // oracle: phi(t) = (b, 0) e^{tA} e_1 with A = [[-b, a], [-1, 0]]
    Mat A(2, 2);
    A << -3.0, 1.0, -1.0, 0.0;
    double err = 0.0;
    for (double t : {0.0, 0.5, 1.0, 2.5, 5.0}) {
        Mat P = oracle::taylor_expm(A, t / 8.0, 40);
        for (int k = 0; k < 3; ++k) P = P * P;
        err = std::max(err, std::abs(r.phi(static_cast<int>(std::lround(t / g.dt))) - 3.0 * P(0, 0)));
    }
    CHECK(err <= 1e-12);
}

TEST_CASE("adaptation: convolution form matches the receptor ODE") {
    // xi' = aY - b xi - b + s, Y' = -xi, X = 1 + xi, started at rest
    const double a = 2.0, b = 3.0;
    auto s = [](double t) { return 6.0 + std::sin(t); };
    const TimeGrid g = make_grid(10.0, 1e-3);
    const AdaptationResponse r = adaptation_response(a, b, g, s);
    double xi = 0.0, Y = 0.0, err = 0.0;
    const int sub = 4;
    const double h = g.dt / sub;
    auto f = [&](double t, double x, double y, double& dx, double& dy) {
        dx = a * y - b * x - b + s(t);
        dy = -x;
    };
    for (int i = 0; i < g.n; ++i) {
        for (int k = 0; k < sub; ++k) {
            const double t = g.t(i) + k * h;
            double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
            f(t, xi, Y, k1x, k1y);
            f(t + h / 2, xi + h / 2 * k1x, Y + h / 2 * k1y, k2x, k2y);
            f(t + h / 2, xi + h / 2 * k2x, Y + h / 2 * k2y, k3x, k3y);
            f(t + h, xi + h * k3x, Y + h * k3y, k4x, k4y);
            xi += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
            Y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
        }
        err = std::max(err, std::abs(r.X(i + 1) - (1.0 + xi)));
    }
    CHECK(err <= 1e-5);
}

TEST_CASE("adaptation step response at a=2, b=3") {
    const TimeGrid g = make_grid(40.0, 1e-3);
    const AdaptationResponse r = adaptation_response(2.0, 3.0, g, [](double) { return 6.0; });
    double dev = 0.0, peak = 0.0;
    for (int i = 0; i < g.nodes(); ++i) {
        peak = std::max(peak, r.X(i));
        if (g.t(i) >= 20.0) dev = std::max(dev, std::abs(r.X(i) - 1.0));
    }
    CHECK(peak > 1.1);
    CHECK(dev <= 1e-4);
}

TEST_CASE("property: adaptation integral decays with the horizon") {
    double prev = 1e9;
    for (double T : {5.0, 10.0, 20.0, 40.0}) {
        const AdaptationResponse r = adaptation_response(1.5, 3.0, make_grid(T, 1e-3), [](double) { return 3.0; });
        CHECK(std::abs(r.integral) <= prev);
        prev = std::abs(r.integral);
    }
}

TEST_CASE("feed-forward loop kernel") {
    // K >= 0 on a grid at a = c = 5, b = 1
    for (double eta = 0.0; eta <= 4.0; eta += 0.25)
        for (double xi = 0.0; xi <= 4.0; xi += 0.25) CHECK(ffl_kernel(5, 1, 5, eta, xi) >= 0.0);
    // b -> a limit is continuous
    CHECK(ffl_kernel(2.0, 2.0 + 1e-9, 3.0, 0.7, 1.1) == doctest::Approx(ffl_kernel(2.0, 2.0, 3.0, 0.7, 1.1)).epsilon(1e-6));

    const TimeGrid g = make_grid(10.0, 0.01);
    const FflResponse r = ffl_response(5, 1, 5, g, [](double t) { return 1.0 + 0.5 * std::sin(t); });
    CHECK(r.max_deviation <= 5 * g.dt);

    const FflLimitCheck lim = ffl_limit_check(1000, 1, 1000);
    CHECK(lim.response_after <= 1e-3);
    CHECK(lim.response_before == doctest::Approx(lim.limit_before).epsilon(0.01));
}

TEST_CASE("nonlinear polymerization") {
    const TimeGrid g = make_grid(2.0, 1e-3);
    Series psi(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) psi(i) = oracle::erlang_pdf(5.0, 1, g.t(i));
    const NonlinearPolymer z = nonlinear_polymer(psi, [](double) { return 0.0; }, g, 8);
    CHECK(z.n.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.w.cwiseAbs().maxCoeff() == 0.0);

    const NonlinearPolymer s = nonlinear_polymer(psi, [](double) { return 1.0; }, g, 8);
    CHECK(s.mass_residual <= 10 * g.dt * g.t_max);
    CHECK(s.n.minCoeff() >= 0.0);
}

TEST_CASE("narrow kernel approaches the Markovian limit") {
    const TimeGrid g = make_grid(5.0, 1e-3);
    Series psi(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) psi(i) = oracle::erlang_pdf(200.0, 1, g.t(i));
    const NonlinearPolymer s = nonlinear_polymer(psi, [](double) { return 1.0; }, g, 12);
    const NonlinearPolymer bd = becker_doring([](double) { return 1.0; }, g, 12);
    CHECK((s.n - bd.n).cwiseAbs().maxCoeff() <= 0.01);
}

TEST_CASE("presets") {
    CHECK(preset_names().size() == 5);
    CHECK_THROWS_AS(run_preset("no-such-preset"), InputError);
    const PresetReport r = run_preset("hopfield-fig4");
    bool found = false;
    for (const auto& row : r.rows)
        if (std::abs(row.target - 0.0625) <= 1e-12) found = true;
    CHECK(found);
}
