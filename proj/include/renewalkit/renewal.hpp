#pragma once

#include "renewalkit/core.hpp"
#include "renewalkit/kernels.hpp"
#include "renewalkit/network.hpp"

#include <string>
#include <vector>

namespace rk {

struct RenewalSolution {
    TimeGrid grid;
    std::vector<std::string> names;
    bool scalar = false;
    // Influx S[a] and outflux J[a], nodes x |a| (nodes x 1 holding B, D in the scalar case).
    std::vector<Mat> S;
    std::vector<Mat> J;
    Mat N;   // nodes x compartments
    Vec N0;  // per compartment
    std::vector<std::string> diagnostics;

    int count() const { return static_cast<int>(names.size()); }
    Series influx(int a) const { return S[a].rowwise().sum(); }
    Series outflux(int a) const { return J[a].rowwise().sum(); }
    double min_N() const { return N.minCoeff(); }
    // max_t |sum_a N_a(t) - sum_a N0_a| / sum_a N0_a
    double mass_drift() const;
};

// Per-compartment totals of a state vector.
Vec compartment_totals(const CompartmentSystem& sys, const Vec& n);

RenewalSolution solve_renewal(const KernelSet& ks, const Forcing& forcing, const Vec& N0);
RenewalSolution solve_renewal_scalar(const ScalarKernelSet& sk, const Vec& N0);

struct OdeReference {
    TimeGrid grid;
    Mat n;  // nodes x states
    Mat N;  // nodes x compartments
    std::vector<Mat> S;
    std::vector<Mat> J;
};

// dn/dt = A n propagated exactly with e^{dt A} per step.
OdeReference ode_reference(const CompartmentSystem& sys, const Vec& n0, const TimeGrid& grid);

struct EquivalenceReport {
    std::vector<std::string> names;
    std::vector<double> dev_N, dev_S, dev_J;
    double max_dev_N = 0.0;
    double max_dev = 0.0;
    bool pass = false;
    RenewalSolution solution;
};

// Renewal solution vs direct ODE; the verdict uses the N deviation.
EquivalenceReport equivalence_check(const CompartmentSystem& sys, const Vec& n0, const TimeGrid& grid,
                                    double tol);

}  // namespace rk
