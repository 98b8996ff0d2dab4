#pragma once

#include "renewalkit/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rk {

// Generator convention: A(i,j) is the rate of the jump j -> i; columns sum to zero
// and states evolve as dn/dt = A n.
struct ReactionNetwork {
    std::vector<std::string> states;
    Mat A;

    int size() const { return static_cast<int>(states.size()); }
    int index(const std::string& name) const;  // throws InputError if unknown
};

struct RateEntry {
    std::string from;
    std::string to;
    double rate = 0.0;
};

ReactionNetwork validate_network(const std::vector<std::string>& states,
                                 const std::vector<RateEntry>& rates);
// Checks the generator invariants of an already assembled matrix.
ReactionNetwork network_from_matrix(const std::vector<std::string>& states, const Mat& A);

struct Compartment {
    std::string name;
    std::vector<int> states;     // global state indices, in partition order
    std::vector<int> entrances;  // global indices receiving an edge from outside
};

struct CompartmentSystem {
    ReactionNetwork network;
    std::vector<Compartment> comps;
    std::vector<int> comp_of;  // state -> compartment
    std::vector<int> local;    // state -> position inside its compartment

    int count() const { return static_cast<int>(comps.size()); }
    int size(int a) const { return static_cast<int>(comps[a].states.size()); }
    int find(const std::string& name) const;  // compartment by name, -1 if absent

    // A_{ab}: rows index states of a, columns states of b.
    Mat block(int a, int b) const;
    // A_aa = E_aa - C_a.
    Mat E(int a) const;
    Vec exit_rates(int a) const;  // diagonal of C_a
    // Local index of the entrance point, or of the first state when the compartment
    // has no entrance (reporting only). -1 if the entrance is not unique.
    int reference_local(int a) const;
};

CompartmentSystem decompose(const ReactionNetwork& net,
                            const std::vector<std::vector<std::string>>& partition,
                            const std::vector<std::string>& names = {});
// Compartment names default to the member state names joined with '+'.
CompartmentSystem decompose_indices(const ReactionNetwork& net,
                                    const std::vector<std::vector<int>>& partition,
                                    const std::vector<std::string>& names = {});
// Each state in its own compartment.
CompartmentSystem singleton_partition(const ReactionNetwork& net);

enum class EntranceKind { None, Unique, Multiple };

struct EntranceVerdict {
    EntranceKind kind = EntranceKind::None;
    int state = -1;           // global index when unique
    std::vector<int> states;  // all entrance points
};

std::vector<EntranceVerdict> check_one_entrance(const CompartmentSystem& sys);
bool one_entrance_ok(const CompartmentSystem& sys);

struct DetailedBalanceCertificate {
    bool present = false;
    Vec mu;                 // stationary vector, always filled when computable
    double residual = 0.0;  // max |A_ij mu_j - A_ji mu_i|
    double tolerance = 0.0;
};

bool strongly_connected(const Mat& adjacency_pattern);
bool network_strongly_connected(const ReactionNetwork& net);

// tol is relative to the largest rate.
DetailedBalanceCertificate detect_detailed_balance(const ReactionNetwork& net, double tol = 1e-9);

}  // namespace rk
