#pragma once

#include "renewalkit/kernels.hpp"
#include "renewalkit/network.hpp"
#include "renewalkit/renewal.hpp"

#include <string>
#include <vector>

namespace rk {

// Trapezoid evaluation of int_0^T e^{-z t} f(t) dt.
double laplace_kernel(const Series& f, double dt, double z);

// M(z)(a,b) = Laplace transform of Phi_{b->a}.
Mat build_M(const ScalarKernelSet& sk, double z);

struct MarkovVerdict {
    bool markovian = false;
    std::vector<double> r;         // fitted total exit rate per compartment
    Mat lambda;                    // lambda(a,b) = Phi_{a->b}(0)
    Mat generator;                 // over compartments, columns sum to zero; filled on acceptance
    double max_affinity_error = 0.0;
    std::vector<std::string> evidence;
};

// Accepts iff every kernel is lambda_{ab} e^{-r_a t} with sum_b lambda_{ab} = r_a (relative tol).
MarkovVerdict markovianity_test(const ScalarKernelSet& sk, double tol = 1e-6);

struct SpectralKernel {
    double prefactor = 0.0;  // rate of the edge between the two entrance points
    std::vector<double> weights;  // kappa_j^2
    std::vector<double> rates;    // nu_j >= 0

    double weight_sum() const;
    double eval(double t) const;
    Series sample(const TimeGrid& grid) const;
};

// Kernel of the transition from -> to as a nonnegative exponential mixture, by symmetrizing
// the block of `from` with diag(sqrt(mu)).
SpectralKernel detailed_balance_kernel(const CompartmentSystem& sys, const DetailedBalanceCertificate& cert,
                                       int from, int to);

struct MixtureFit {
    Vec rates;
    Vec weights;
    double residual = 0.0;  // max abs error relative to max |f|
};

// Nonnegative least squares (Lawson-Hanson): min |A x - b|_2, x >= 0.
Vec nnls(const Mat& A, const Vec& b, int max_iter = 0);

// Fit f ~ sum_j w_j e^{-nu_j t}, w >= 0, over log-spaced rates.
MixtureFit exponential_mixture_fit(const Series& f, double dt, int n_rates = 80);

struct MonotonicityVerdict {
    bool consistent = false;
    int violated_order = 0;
    double violated_at = 0.0;
    MixtureFit fit;
    std::string message;
};

// Alternating signs of forward differences up to order n_max with a noise-aware tolerance,
// plus an exponential-mixture fit. tol is relative to max |f|.
MonotonicityVerdict complete_monotonicity_check(const Series& f, double dt, int n_max = 4, double tol = 1e-9);

struct PerronResult {
    Vec v0;  // |v0|_1 = 1
    Vec u0;  // u0^T v0 = 1
    double rho = 0.0;
    double residual_right = 0.0;
    double residual_left = 0.0;
};

// mass_tol: allowed deviation of column sums from 1 (quadrature error of the kernel masses).
PerronResult perron(const Mat& M0, double tol = 1e-8, double mass_tol = 1e-6);

struct AsymptoticsResult {
    Vec v0;
    Vec u0;
    double rho = 0.0;
    double c0 = 0.0;       // residue formula
    double c0_tail = 0.0;  // u0^T B(t_max) from the solver
    double decay_rate = 0.0;
    int fit_points = 0;
    Vec N_inf;
    Vec N_tmax;  // solver value at the final node
    Vec B_tmax;
    Mat D;       // D(a,b) = int t Phi_{b->a}
    RenewalSolution solution;
};

// Long-time limits of the scalar system with forcing sk.B0, sk.D0 and initial totals N0.
AsymptoticsResult long_time_limits(const ScalarKernelSet& sk, const Vec& N0);

}  // namespace rk
