#pragma once

#include "renewalkit/network.hpp"

#include <random>

namespace rk {

using Rng = std::mt19937_64;

struct RandomSystem {
    CompartmentSystem sys;
    Vec n0;
};

// Directed ring plus each ordered pair with probability `density`; rates uniform in [0.1, 1],
// then rescaled so that max |A_ii| = 1. Partition: `blocks` nonempty random blocks.
RandomSystem random_system(Rng& rng, int states, int blocks, double density);

// Detailed-balance generator A = diag(sqrt(mu)) S diag(sqrt(mu))^{-1} off the diagonal,
// S symmetric with positive entries on a connected pattern. Returns the chosen mu too.
ReactionNetwork random_detailed_balance_network(Rng& rng, int states, double density, Vec* mu = nullptr);

// Same construction on consecutive blocks of the given sizes, linked only through each block's
// first state, so every compartment has exactly one entrance.
CompartmentSystem random_detailed_balance_system(Rng& rng, const std::vector<int>& sizes, double density,
                                                 Vec* mu = nullptr);

}  // namespace rk
