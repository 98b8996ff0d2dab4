#pragma once

#include "renewalkit/core.hpp"
#include "renewalkit/network.hpp"

#include <Eigen/Sparse>

#include <limits>
#include <string>
#include <vector>

namespace rk {

// e^{tM} by scaling and squaring with a diagonal Pade approximant (orders 3..13).
Mat expm(const Mat& M, double t = 1.0);

// v -> e^{dt B} v for a fixed block B. Small blocks use a dense exponential, large
// sparse ones use uniformization, which keeps Metzler propagation nonnegative.
class BlockPropagator {
public:
    BlockPropagator() = default;
    BlockPropagator(const Mat& B, double dt);
    void apply(Vec& v) const;
    void apply(Mat& V) const;
    const Mat& dense() const { return P_; }
    bool is_dense() const { return dense_; }

private:
    bool dense_ = true;
    Mat P_;
    Eigen::SparseMatrix<double> U_;  // I + B/q
    double q_ = 0.0;
    int substeps_ = 1;
    std::vector<double> poisson_;
};

// Matrix-valued samples: data(node, i + rows*j). An empty data block means identically zero.
struct MatSeries {
    int rows = 0;
    int cols = 0;
    Mat data;

    bool zero() const { return data.size() == 0; }
    double at(int node, int i, int j) const { return zero() ? 0.0 : data(node, i + rows * j); }
    Mat matrix(int node) const;
    Series entry(int i, int j, int nodes) const;
};

struct KernelSet {
    TimeGrid grid;
    std::vector<std::string> names;
    std::vector<int> sizes;
    std::vector<MatSeries> G;  // G[b*nc + a] = G_{b->a}(t) = A_{ab} e^{t A_bb}, |a| x |b|
    std::vector<MatSeries> K;  // K[a], |a| x |a|

    int count() const { return static_cast<int>(names.size()); }
    const MatSeries& g(int from, int to) const { return G[from * count() + to]; }
};

// Vector forcing: S0[a], J0[a] are nodes x |a|.
struct Forcing {
    std::vector<Mat> S0;
    std::vector<Mat> J0;
};

KernelSet compute_kernels(const CompartmentSystem& sys, const TimeGrid& grid);
Forcing compute_forcing(const CompartmentSystem& sys, const TimeGrid& grid, const Vec& n0);

// Largest |sum_b e^T G_{ab}(t) - e^T K_a(t)| over nodes, compartments and components.
double conservation_defect(const KernelSet& ks);

struct ScalarKernelSet {
    TimeGrid grid;
    std::vector<std::string> names;
    std::vector<Series> phi;  // phi[a*nc + b] = Phi_{a->b}
    std::vector<Series> k;
    std::vector<Series> B0;
    std::vector<Series> D0;
    Mat p;                           // p(a,b) = int Phi_{a->b}
    std::vector<int> entrance;       // global entrance state, -1 if none
    std::vector<char> internal_sink;  // mass can get trapped inside the compartment

    int count() const { return static_cast<int>(names.size()); }
    const Series& Phi(int a, int b) const { return phi[a * count() + b]; }
    Series& Phi(int a, int b) { return phi[a * count() + b]; }
    double mass(int a) const { return p.row(a).sum(); }
    void refresh_masses();
};

// Empty scalar set over a grid with all kernels and forcing zero.
ScalarKernelSet empty_scalar_set(const TimeGrid& grid, const std::vector<std::string>& names);

// Extract the one-entrance scalar kernels from a full kernel set.
ScalarKernelSet reduce_one_entrance(const KernelSet& ks, const CompartmentSystem& sys,
                                    const Forcing* forcing = nullptr);
// Same kernels computed by propagating only the entrance column; suitable for large compartments.
ScalarKernelSet compute_scalar_kernels(const CompartmentSystem& sys, const TimeGrid& grid,
                                       const Vec* n0 = nullptr);

struct MassRow {
    std::string name;
    double mass = 0.0;
    double deficit = 0.0;
    double exact = std::numeric_limits<double>::quiet_NaN();  // from the generator, when known
    std::string status;  // conservative | sink | leaky | truncated
};

// With exact masses the status reflects the network; "truncated" then means the
// quadrature mass misses the exact one by more than tol.
std::vector<MassRow> kernel_mass_report(const ScalarKernelSet& sk, double tol = 1e-6, const Mat* exact = nullptr);

// p_{ab} = 1^T A_{ba} (-A_aa)^{-1} e_{i_a}, solved on the states of a that can still exit.
Mat exact_kernel_masses(const CompartmentSystem& sys);

struct HorizonSuggestion {
    double t_max = 0.0;
    std::vector<double> slowest_rate;  // per compartment, 0 if the block has no decaying mode
};

// Horizon such that e^{lambda t} <= threshold for the slowest decaying mode of every A_aa.
HorizonSuggestion suggest_tmax(const CompartmentSystem& sys, double threshold = 1e-8);

}  // namespace rk
