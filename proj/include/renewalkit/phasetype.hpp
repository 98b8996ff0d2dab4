#pragma once

#include "renewalkit/kernels.hpp"
#include "renewalkit/network.hpp"

#include <string>
#include <vector>

namespace rk {

// Finite nonnegative measure on [0, inf): atoms, a sampled density and/or Erlang components.
struct TargetMeasure {
    std::vector<std::pair<double, double>> atoms;  // (location, mass)
    Series density;                                // samples at k * density_dt
    double density_dt = 0.0;
    struct Erlang {
        double rate = 1.0;
        int m = 0;  // gamma_{rate,m}: m+1 exponential stages
        double mass = 1.0;
    };
    std::vector<Erlang> erlangs;

    double mass() const;
    double cdf(double x) const;  // right-continuous
    double support_end() const;
    double quantile(double q) const;  // of the normalized measure
};

TargetMeasure uniform_target(double a, double b, double mass = 1.0, double dt = 1e-3);
TargetMeasure point_target(double x, double mass = 1.0);
TargetMeasure erlang_target(double rate, int m, double mass = 1.0);
TargetMeasure kernel_target(const Series& samples, double dt);

// gamma_{rate,m}(t) = rate^{m+1} t^m e^{-rate t} / m!
double erlang_density(double rate, int m, double t);
double erlang_cdf(double rate, int m, double x);

// Masses on the nodes k*h of a uniform grid.
struct GridMeasure {
    double h = 0.0;
    Vec w;
};

GridMeasure bin_measure(const TargetMeasure& mu, double h, int nodes);

// Bounded-Lipschitz distance sup { int phi d(mu - nu) : |phi|_inf + Lip(phi) <= 1 } of two
// measures on a common grid. Exact for the discrete measures.
double bl_distance(const GridMeasure& mu, const GridMeasure& nu);
// Convenience: both measures normalized to probability and binned on a shared grid.
double bl_distance(const TargetMeasure& mu, const TargetMeasure& nu, int nodes = 4000);

struct ErlangBranch {
    double q = 0.0;
    int m = 1;
};

struct ErlangFit {
    int M = 1;                 // cell count per support scale
    double scale = 1.0;        // support scale s; Erlang rate is M / s
    double rate = 1.0;
    std::vector<ErlangBranch> branches;
    double distance = 0.0;     // bounded-Lipschitz distance to the normalized target
    bool attained = false;
    bool exact = false;
};

TargetMeasure mixture_measure(const ErlangFit& fit, double mass = 1.0);

// Cell j of width s/M is mapped to gamma_{M/s, j}; s is the 0.999-quantile.
// Tail cells holding at most tail_fold of the mass are merged into the last kept cell.
ErlangFit erlang_cells(const TargetMeasure& target, int M, double scale, double tail_fold = 0.0);
// Doubles M until the distance is <= eps or M exceeds M_cap.
ErlangFit fit_erlang_mixture(const TargetMeasure& target, double eps, int M_cap = 4096);

struct PairTarget {
    std::string alpha;
    std::string beta;
    TargetMeasure target;  // unnormalized; its mass is p_{alpha beta}
};

struct PhaseTypePair {
    std::string alpha;
    std::string beta;
    double p = 0.0;
    std::vector<ErlangBranch> branches;
    double distance = 0.0;
};

struct PhaseTypeModel {
    int M = 1;
    double rate = 1.0;  // common Erlang rate
    std::vector<std::string> compartments;
    std::vector<PhaseTypePair> pairs;
    double total_distance = 0.0;
    bool attained = false;
};

// Common M for all pairs, doubled until the summed distance is <= eps.
PhaseTypeModel fit_phase_type(const std::vector<std::string>& compartments, const std::vector<PairTarget>& targets,
                              double eps, int M_cap = 4096);

struct BuiltNetwork {
    ReactionNetwork network;
    std::vector<std::vector<int>> partition;
    std::vector<std::string> compartment_names;
    CompartmentSystem system() const;
};

// Entrance i_a, root jumps i_a -> z_ab at rate rate * p_ab, chains at `rate`, final hop into i_b.
// A deficit 1 - sum_b p_ab is routed to an absorbing state inside the compartment.
inline constexpr std::size_t kMaxBuiltStates = 12000;
BuiltNetwork build_network(const PhaseTypeModel& model);

struct ApproxRow {
    std::string alpha;
    std::string beta;
    double p_target = 0.0;
    double p_built = 0.0;
    double distance = 0.0;
};

struct ApproxReport {
    std::vector<ApproxRow> rows;
    double total_distance = 0.0;
    double max_mass_error = 0.0;
};

ApproxReport verify_approximation(const std::vector<PairTarget>& targets, const BuiltNetwork& built,
                                  const TimeGrid& grid);

}  // namespace rk
