#pragma once

#include "renewalkit/kernels.hpp"
#include "renewalkit/renewal.hpp"

#include <string>
#include <vector>

namespace rk {

// Age-dependent jump rates lambda_{a->b}(xi) sampled on an age grid.
struct RateSet {
    TimeGrid grid;
    std::vector<std::string> names;
    std::vector<Series> lambda;  // lambda[a*nc + b]
    double max_rate = 0.0;       // largest sampled rate; boundedness beyond the grid is not certified

    int count() const { return static_cast<int>(names.size()); }
    const Series& rate(int a, int b) const { return lambda[a * count() + b]; }
    Series total(int a) const;  // Lambda_a
};

// lambda = Phi / (1 - sum int_0^t Phi); refuses when the denominator drops below `floor`.
RateSet rates_from_kernels(const ScalarKernelSet& sk, double floor = 1e-12);
// Phi = lambda exp(-int_0^t Lambda); forcing and entrance metadata are left empty.
ScalarKernelSet kernels_from_rates(const RateSet& rates);

struct HistoryAtom {
    double location = 0.0;  // <= 0
    double mass = 0.0;
};

// Arrival history before t = 0, per compartment.
struct HistoryMeasure {
    std::vector<std::vector<HistoryAtom>> atoms;
    // Optional sampled densities: density[a](k) at location -k*dt (same dt as the run grid).
    std::vector<Series> density;

    double span() const;  // largest |location|
    double total_mass(double dt) const;
};

struct AgeDensity {
    TimeGrid grid;
    Vec ages;                      // age nodes 0, dt, ...
    std::vector<int> snapshot_nodes;
    std::vector<Mat> f;            // f[a]: snapshots x ages, elements per unit age
    Mat N;                         // nodes x compartments
    Mat B;                         // boundary influx per node
    Mat D;                         // outflux per node
    Vec remainder;                 // mass older than the rate grid at the final time
    double max_rate = 0.0;
};

// Transport along characteristics with d(xi) = dt and per-cell attenuation exp(-int Lambda).
AgeDensity solve_spe(const RateSet& rates, const HistoryMeasure& history, const TimeGrid& grid,
                     int snapshot_stride = 0);

struct SpeRfeReport {
    std::vector<double> deviation;  // per compartment sup_t |N_spe - N_rfe|
    double max_deviation = 0.0;
    bool pass = false;
    RenewalSolution rfe;
    AgeDensity spe;
};

// Builds B0, D0, N0 from the history, solves the scalar RFE and the SPE on the same grid.
// The kernel grid must extend at least to grid.t_max + history span.
SpeRfeReport spe_rfe_equivalence(const ScalarKernelSet& sk, const HistoryMeasure& history, const TimeGrid& grid,
                                 double tol);

struct VectorAtom {
    double location = 0.0;
    Vec mass;  // over the states of the compartment
};

struct HistoryCheck {
    bool consistent = false;
    double residual = 0.0;
    Vec predicted;  // over all states
};

// n0_b =? sum over atoms of e^{-location * A_bb} m.
HistoryCheck forward_history_check(const CompartmentSystem& sys, const Vec& n0,
                                   const std::vector<std::vector<VectorAtom>>& history, double tol);

}  // namespace rk
