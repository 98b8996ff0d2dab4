#include "doctest.h"
#include "oracles.hpp"

#include "renewalkit/network.hpp"
#include "renewalkit/random_models.hpp"

using namespace rk;

namespace {

ReactionNetwork two_state() { return validate_network({"1", "2"}, {{"1", "2", 1.0}, {"2", "1", 1.0}}); }
ReactionNetwork chain() { return validate_network({"1", "2", "3"}, {{"1", "2", 1.0}, {"2", "3", 1.0}}); }

}  // namespace

TEST_CASE("validate_network assembles column generators") {
    const auto net = two_state();
    CHECK(net.A(0, 0) == -1.0);
    CHECK(net.A(1, 0) == 1.0);
    CHECK(net.A(0, 1) == 1.0);
    CHECK(net.A(1, 1) == -1.0);

    const auto single = validate_network({"1"}, {});
    CHECK(single.A.rows() == 1);
    CHECK(single.A(0, 0) == 0.0);

    const auto c = chain();
    for (int j = 0; j < 3; ++j) CHECK(c.A.col(j).sum() == doctest::Approx(0.0));
    CHECK(c.A(2, 2) == 0.0);
    CHECK(c.A(1, 0) == 1.0);
}

TEST_CASE("validate_network rejects malformed input") {
    CHECK_THROWS_AS(validate_network({"1", "2"}, {{"1", "2", -1.0}}), InputError);
    CHECK_THROWS_AS(validate_network({"1", "2"}, {{"1", "3", 1.0}}), InputError);
    CHECK_THROWS_AS(validate_network({"1", "1"}, {}), InputError);
    CHECK_THROWS_AS(validate_network({"1", "2"}, {{"1", "1", 1.0}}), InputError);
}

TEST_CASE("decompose two-state into singletons") {
    const auto sys = decompose(two_state(), {{"1"}, {"2"}});
    REQUIRE(sys.count() == 2);
    CHECK(sys.E(0)(0, 0) == 0.0);
    CHECK(sys.exit_rates(0)(0) == 1.0);
    CHECK(sys.block(1, 0)(0, 0) == 1.0);
    CHECK(sys.comps[0].entrances == std::vector<int>{0});
    CHECK(sys.comps[1].entrances == std::vector<int>{1});
}

TEST_CASE("decompose chain with block {1,2},{3}") {
    const auto sys = decompose(chain(), {{"1", "2"}, {"3"}});
    Mat Aaa(2, 2);
    Aaa << -1, 0, 1, -1;
    CHECK((sys.block(0, 0) - Aaa).norm() == 0.0);
    Mat E(2, 2);
    E << -1, 0, 1, 0;
    CHECK((sys.E(0) - E).norm() == 0.0);
    CHECK(sys.exit_rates(0)(0) == 0.0);
    CHECK(sys.exit_rates(0)(1) == 1.0);
    CHECK(sys.comps[0].entrances.empty());
    CHECK(sys.comps[1].entrances == std::vector<int>{2});

    const auto v = check_one_entrance(sys);
    CHECK(v[0].kind == EntranceKind::None);
    CHECK(v[1].kind == EntranceKind::Unique);
    CHECK(v[1].state == 2);
}

TEST_CASE("trivial partition has no entrances and no exits") {
    std::mt19937_64 rng(3);
    const auto net = network_from_matrix({"a", "b", "c", "d"}, oracle::random_generator(rng, 4));
    const auto sys = decompose(net, {{"a", "b", "c", "d"}});
    CHECK(sys.count() == 1);
    CHECK(sys.comps[0].entrances.empty());
    CHECK(sys.exit_rates(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partition validation") {
    CHECK_THROWS_AS(decompose(chain(), {{"1", "2"}}), InputError);
    CHECK_THROWS_AS(decompose(chain(), {{"1", "2"}, {"2", "3"}}), InputError);
    CHECK_THROWS_AS(decompose(chain(), {{"1", "2"}, {}, {"3"}}), InputError);
}

TEST_CASE("entrance verdicts: complete graph and parallel edges") {
    std::vector<RateEntry> r;
    for (const char* a : {"1", "2", "3"})
        for (const char* b : {"1", "2", "3"})
            if (std::string(a) != b) r.push_back({a, b, 1.0});
    const auto full = singleton_partition(validate_network({"1", "2", "3"}, r));
    for (const auto& v : check_one_entrance(full)) CHECK(v.kind == EntranceKind::Unique);

    const auto par = validate_network({"1", "2", "3"}, {{"1", "3", 1.0}, {"2", "3", 1.0}});
    CHECK(check_one_entrance(decompose(par, {{"1", "2"}, {"3"}}))[1].kind == EntranceKind::Unique);

    const auto multi = validate_network({"1", "2", "3", "4", "5"},
                                        {{"1", "3", 1.0}, {"2", "3", 1.0}, {"1", "4", 1.0}, {"2", "5", 1.0}});
    const auto v = check_one_entrance(decompose(multi, {{"1", "2"}, {"3"}, {"4", "5"}}));
    CHECK(v[1].kind == EntranceKind::Unique);
    CHECK(v[2].kind == EntranceKind::Multiple);
    CHECK(v[2].states.size() == 2);
    CHECK_FALSE(one_entrance_ok(decompose(multi, {{"1", "2"}, {"3"}, {"4", "5"}})));
}

TEST_CASE("detailed balance examples") {
    const auto sym = detect_detailed_balance(two_state());
    CHECK(sym.present);
    CHECK(sym.mu(0) == doctest::Approx(0.5));
    CHECK(sym.residual == doctest::Approx(0.0));

    // A mu = 0 by hand: 2 mu_1 = mu_2
    const auto asym = detect_detailed_balance(validate_network({"1", "2"}, {{"1", "2", 2.0}, {"2", "1", 1.0}}));
    CHECK(asym.present);
    CHECK(asym.mu(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(asym.mu(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto cyc = detect_detailed_balance(
        validate_network({"1", "2", "3"}, {{"1", "2", 1.0}, {"2", "3", 1.0}, {"3", "1", 1.0}}));
    CHECK_FALSE(cyc.present);
    for (int i = 0; i < 3; ++i) CHECK(cyc.mu(i) == doctest::Approx(1.0 / 3.0));
    // lambda_12 mu_2 - lambda_21 mu_1 = 1/3 - 0
    CHECK(cyc.residual == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("disconnected network is rejected by the detailed-balance check") {
    const auto net = validate_network({"1", "2", "3", "4"}, {{"1", "2", 1.0}, {"2", "1", 1.0}, {"3", "4", 1.0}, {"4", "3", 1.0}});
    CHECK_FALSE(network_strongly_connected(net));
    // the stationary vector is not unique
    CHECK_THROWS_AS(detect_detailed_balance(net), InputError);
}

TEST_CASE("property: block reassembly reproduces A") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const RandomSystem rs = random_system(rng, 7, 3, 0.4);
        const auto& sys = rs.sys;
        Mat R = Mat::Zero(7, 7);
        for (int a = 0; a < sys.count(); ++a)
            for (int b = 0; b < sys.count(); ++b) {
                const Mat blk = sys.block(a, b);
                for (int i = 0; i < sys.size(a); ++i)
                    for (int j = 0; j < sys.size(b); ++j) R(sys.comps[a].states[i], sys.comps[b].states[j]) = blk(i, j);
            }
        CHECK((R - sys.network.A).cwiseAbs().maxCoeff() == 0.0);
        for (int a = 0; a < sys.count(); ++a) {
            CHECK(sys.E(a).colwise().sum().cwiseAbs().maxCoeff() < 1e-14);
            const Mat diff = sys.E(a) - Mat(sys.exit_rates(a).asDiagonal()) - sys.block(a, a);
            CHECK(diff.cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("property: similarity-symmetric networks carry a certificate") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Vec mu;
        const auto net = random_detailed_balance_network(rng, 6, 0.5, &mu);
        const auto cert = detect_detailed_balance(net);
        CHECK(cert.present);
        CHECK(cert.residual <= 1e-10);
        CHECK((cert.mu / cert.mu.sum() - mu / mu.sum()).cwiseAbs().maxCoeff() < 1e-10);
    }
}
