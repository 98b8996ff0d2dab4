#include "doctest.h"
#include "oracles.hpp"

#include "renewalkit/spe.hpp"

#include <cmath>

using namespace rk;

namespace {

// Scalar set with kernels given by closed forms.
ScalarKernelSet closed_kernels(const TimeGrid& g, const std::vector<std::string>& names,
                               const std::vector<std::tuple<int, int, std::function<double(double)>>>& phis) {
    ScalarKernelSet sk = empty_scalar_set(g, names);
    for (const auto& [a, b, f] : phis)
        for (int i = 0; i < g.nodes(); ++i) {
            sk.Phi(a, b)(i) = f(g.t(i));
            sk.k[a](i) += f(g.t(i));
        }
    sk.refresh_masses();
    return sk;
}

double expo(double t) { return std::exp(-t); }
double erl2(double t) { return t * std::exp(-t); }

HistoryMeasure atom(int nc, int a, double loc, double mass) {
    HistoryMeasure h;
    h.atoms.resize(nc);
    h.atoms[a].push_back({loc, mass});
    return h;
}

}  // namespace

TEST_CASE("rates from kernels: analytic cancellations") {
    // short horizon: trapezoid survival of e^{-2t} crosses zero near t = 7.5
    const TimeGrid g = make_grid(4.0, 1e-3);
    const RateSet r1 = rates_from_kernels(closed_kernels(g, {"a", "b"}, {{0, 1, [](double t) { return 2.0 * std::exp(-2.0 * t); }}}));
    // trapezoid error of the survival is at most dt^2 |f'(0)| / 12 = dt^2 / 3; relative to S(t) = e^{-2t}
    auto bound = [&](int i) { return 1e-6 + 2.0 * 2.0 * (g.dt * g.dt / 3.0) * std::exp(2.0 * g.t(i)); };
    for (int i = 0; i < g.nodes(); ++i) CHECK(std::abs(r1.rate(0, 1)(i) - 2.0) <= bound(i));

    const RateSet r2 = rates_from_kernels(closed_kernels(g, {"a", "b"}, {{0, 1, erl2}}));
    double err = 0.0;
    for (int i = 0; i < g.nodes(); ++i) err = std::max(err, std::abs(r2.rate(0, 1)(i) - g.t(i) / (1.0 + g.t(i))));
    CHECK(err < 1e-4);

    auto two = [](double t) { return std::exp(-2.0 * t); };
    const RateSet r3 = rates_from_kernels(closed_kernels(g, {"a", "b", "c"}, {{0, 1, two}, {0, 2, two}}));
    for (int i = 0; i < g.nodes(); ++i) {
        CHECK(std::abs(r3.rate(0, 1)(i) - 1.0) <= bound(i));
        CHECK(std::abs(r3.rate(0, 2)(i) - 1.0) <= bound(i));
    }
}

TEST_CASE("rates from kernels refuse exhausted survival") {
    // triangle of unit mass on [0, 1]: the trapezoid rule is exact, survival hits zero at t = 1
    const TimeGrid g = make_grid(3.0, 1e-3);
    CHECK_THROWS_AS(rates_from_kernels(closed_kernels(g, {"a", "b"}, {{0, 1, [](double t) { return t < 1.0 ? 2.0 * (1.0 - t) : 0.0; }}})),
                    NumericError);
}

TEST_CASE("kernels from rates") {
    const TimeGrid g = make_grid(8.0, 1e-3);
    RateSet r;
    r.grid = g;
    r.names = {"a", "b"};
    r.lambda.assign(4, Series::Zero(g.nodes()));
    r.lambda[1] = Series::Constant(g.nodes(), 1.0);
    ScalarKernelSet sk = kernels_from_rates(r);
    double err = 0.0;
    for (int i = 0; i < g.nodes(); ++i) err = std::max(err, std::abs(sk.Phi(0, 1)(i) - std::exp(-g.t(i))));
    CHECK(err < 1e-12);

    for (int i = 0; i < g.nodes(); ++i) r.lambda[1](i) = g.t(i) / (1.0 + g.t(i));
    sk = kernels_from_rates(r);
    err = 0.0;
    for (int i = 0; i < g.nodes(); ++i) err = std::max(err, std::abs(sk.Phi(0, 1)(i) - erl2(g.t(i))));
    CHECK(err < 1e-6);

    r.lambda[1].setZero();
    sk = kernels_from_rates(r);
    CHECK(sk.Phi(0, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("property: kernel-rate round trip within 10 dt") {
    const TimeGrid g = make_grid(6.0, 1e-2);
    for (auto f : {+[](double t) { return std::exp(-t); }, +[](double t) { return t * std::exp(-t); },
                   +[](double t) { return 0.5 * std::exp(-t) + std::exp(-2 * t); }}) {
        const ScalarKernelSet sk = closed_kernels(g, {"a", "b"}, {{0, 1, f}});
        const ScalarKernelSet back = kernels_from_rates(rates_from_kernels(sk));
        CHECK((back.Phi(0, 1) - sk.Phi(0, 1)).cwiseAbs().maxCoeff() <= 10 * g.dt);
    }
}

TEST_CASE("pure decay along characteristics") {
    const TimeGrid g = make_grid(3.0, 1e-2);
    const double lam = 0.7;
    RateSet r;
    r.grid = make_grid(5.0, 1e-2);
    r.names = {"a", "b"};
    r.lambda.assign(4, Series::Zero(r.grid.nodes()));
    r.lambda[1] = Series::Constant(r.grid.nodes(), lam);
    // b has no exits; mass only leaves a
    HistoryMeasure h = atom(2, 0, -1.0, 1.0);
    const AgeDensity ad = solve_spe(r, h, g, 1);
    // mass still in a: e^{-lam (t + 1)}
    double err = 0.0;
    for (int i = 0; i < g.nodes(); ++i) err = std::max(err, std::abs(ad.N(i, 0) - std::exp(-lam * (g.t(i) + 1.0))));
    CHECK(err < 1e-12);
    CHECK(ad.f[0].minCoeff() >= 0.0);
}

TEST_CASE("symmetric two-compartment SPE relaxes like the ODE") {
    const TimeGrid g = make_grid(5.0, 1e-3);
    const ScalarKernelSet sk = closed_kernels(make_grid(5.0, 1e-3), {"1", "2"}, {{0, 1, expo}, {1, 0, expo}});
    const AgeDensity ad = solve_spe(rates_from_kernels(sk), atom(2, 0, 0.0, 1.0), g, 100);
    double err = 0.0, drift = 0.0;
    for (int i = 0; i < g.nodes(); ++i) {
        err = std::max(err, std::abs(ad.N(i, 0) - (0.5 + 0.5 * std::exp(-2 * g.t(i)))));
        drift = std::max(drift, std::abs(ad.N.row(i).sum() - 1.0));
    }
    CHECK(err <= 5 * g.dt);
    CHECK(drift <= 5 * g.dt);
    for (const auto& f : ad.f) CHECK(f.minCoeff() >= 0.0);
}

TEST_CASE("SPE and renewal agree: exponential and Erlang-2 kernels") {
    const TimeGrid g = make_grid(5.0, 1e-3);
    const TimeGrid kg = make_grid(6.0, 1e-3);
    const SpeRfeReport e =
        spe_rfe_equivalence(closed_kernels(kg, {"1", "2"}, {{0, 1, expo}, {1, 0, expo}}), atom(2, 0, 0.0, 1.0), g, 5 * g.dt);
    CHECK(e.pass);
    const SpeRfeReport r =
        spe_rfe_equivalence(closed_kernels(kg, {"1", "2"}, {{0, 1, erl2}, {1, 0, erl2}}), atom(2, 0, -1.0, 1.0), g, 5 * g.dt);
    CHECK(r.pass);
    CHECK(r.max_deviation <= 5 * g.dt);
}

TEST_CASE("zero history gives zero solutions") {
    const TimeGrid g = make_grid(2.0, 1e-2);
    HistoryMeasure h;
    h.atoms.resize(2);
    const SpeRfeReport r = spe_rfe_equivalence(closed_kernels(g, {"1", "2"}, {{0, 1, expo}, {1, 0, expo}}), h, g, 1e-12);
    CHECK(r.spe.N.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.rfe.N.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.pass);
}

TEST_CASE("property: SPE deviation halves with dt") {
    auto dev = [](double dt) {
        const TimeGrid g = make_grid(4.0, dt);
        const TimeGrid kg = make_grid(5.0, dt);
        return spe_rfe_equivalence(closed_kernels(kg, {"1", "2"}, {{0, 1, erl2}, {1, 0, erl2}}), atom(2, 0, -1.0, 1.0), g, 1.0)
            .max_deviation;
    };
    const double ratio = dev(2e-3) / dev(1e-3);
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
}

TEST_CASE("forward history check") {
    const auto net = validate_network({"1", "2", "3"}, {{"1", "2", 1.0}, {"2", "3", 1.0}});
    const auto sys = decompose(net, {{"1", "2"}, {"3"}});
    std::vector<std::vector<VectorAtom>> hist(2);
    Vec m(2);
    m << 1.0, 0.0;
    hist[0].push_back({0.0, m});
    Vec n0(3);
    n0 << 1.0, 0.0, 0.0;
    CHECK(forward_history_check(sys, n0, hist, 1e-12).consistent);

    hist[0][0].location = -1.0;
    Vec expect(3);
    expect << std::exp(-1.0), std::exp(-1.0), 0.0;  // e^{A_bb}(1,0)
    const HistoryCheck ok = forward_history_check(sys, expect, hist, 1e-12);
    CHECK(ok.consistent);
    CHECK((ok.predicted - expect).cwiseAbs().maxCoeff() < 1e-14);

    const HistoryCheck bad = forward_history_check(sys, n0, hist, 1e-12);
    CHECK_FALSE(bad.consistent);
    CHECK(bad.residual > 0.1);
}
