#include "renewalkit/random_models.hpp"

#include <algorithm>
#include <numeric>

namespace rk {

static std::vector<std::string> state_names(int n) {
    std::vector<std::string> s;
    for (int i = 0; i < n; ++i) s.push_back("s" + std::to_string(i));
    return s;
}

RandomSystem random_system(Rng& rng, int states, int blocks, double density) {
    if (states < 1 || blocks < 1 || blocks > states) throw InputError("random_system: need 1 <= blocks <= states");
    std::uniform_real_distribution<double> U(0.1, 1.0), P(0.0, 1.0);
    const auto st = state_names(states);
    std::vector<RateEntry> rates;
    for (int i = 0; i < states; ++i)
        for (int j = 0; j < states; ++j)
            if (i != j && (j == (i + 1) % states || P(rng) < density)) rates.push_back({st[i], st[j], U(rng)});
    ReactionNetwork net = validate_network(st, rates);
    const double scale = net.A.diagonal().cwiseAbs().maxCoeff();
    if (scale > 0.0) net.A /= scale;

    std::vector<int> perm(states);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<int>> part(blocks);
    std::uniform_int_distribution<int> B(0, blocks - 1);
    for (int i = 0; i < states; ++i) part[i < blocks ? i : B(rng)].push_back(perm[i]);
    for (auto& b : part) std::sort(b.begin(), b.end());

    RandomSystem out;
    out.sys = decompose_indices(net, part);
    out.n0 = Vec(states);
    for (int i = 0; i < states; ++i) out.n0(i) = U(rng);
    return out;
}

namespace {

// A_ij = sqrt(mu_i) S_ij / sqrt(mu_j) satisfies A_ij mu_j = A_ji mu_i.
ReactionNetwork similar_to_symmetric(Rng& rng, const Mat& S, Vec* mu_out) {
    std::uniform_real_distribution<double> U(0.1, 1.0);
    const int states = static_cast<int>(S.rows());
    Vec mu(states);
    for (int i = 0; i < states; ++i) mu(i) = U(rng);
    mu /= mu.sum();
    Mat A = Mat::Zero(states, states);
    for (int i = 0; i < states; ++i)
        for (int j = 0; j < states; ++j)
            if (i != j) A(i, j) = std::sqrt(mu(i)) * S(i, j) / std::sqrt(mu(j));
    for (int j = 0; j < states; ++j) A(j, j) = -(A.col(j).sum() - A(j, j));
    if (mu_out) *mu_out = mu;
    return network_from_matrix(state_names(states), A);
}

}  // namespace

ReactionNetwork random_detailed_balance_network(Rng& rng, int states, double density, Vec* mu_out) {
    std::uniform_real_distribution<double> U(0.1, 1.0), P(0.0, 1.0);
    Mat S = Mat::Zero(states, states);
    for (int i = 0; i < states; ++i)
        for (int j = i + 1; j < states; ++j)
            if (j == i + 1 || P(rng) < density) S(i, j) = S(j, i) = U(rng);
    return similar_to_symmetric(rng, S, mu_out);
}

CompartmentSystem random_detailed_balance_system(Rng& rng, const std::vector<int>& sizes, double density, Vec* mu_out) {
    std::uniform_real_distribution<double> U(0.1, 1.0), P(0.0, 1.0);
    std::vector<std::vector<int>> blocks;
    int n = 0;
    for (int s : sizes) {
        if (s < 1) throw InputError("block sizes must be positive");
        blocks.emplace_back();
        for (int k = 0; k < s; ++k) blocks.back().push_back(n++);
    }
    Mat S = Mat::Zero(n, n);
    for (const auto& b : blocks)
        for (size_t i = 0; i < b.size(); ++i)
            for (size_t j = i + 1; j < b.size(); ++j)
                if (j == i + 1 || P(rng) < density) S(b[i], b[j]) = S(b[j], b[i]) = U(rng);
    // blocks touch only through their first state, which is then the unique entrance
    for (size_t a = 0; a < blocks.size(); ++a)
        for (size_t c = a + 1; c < blocks.size(); ++c)
            if (c == a + 1 || P(rng) < density) S(blocks[a][0], blocks[c][0]) = S(blocks[c][0], blocks[a][0]) = U(rng);
    return decompose_indices(similar_to_symmetric(rng, S, mu_out), blocks);
}

}  // namespace rk
