#include "renewalkit/renewal.hpp"

#include "renewalkit/volterra.hpp"

#include <cmath>
#include <sstream>

namespace rk {

double RenewalSolution::mass_drift() const {
    const double total0 = N0.sum();
    if (total0 <= 0.0) return 0.0;
    double worst = 0.0;
    for (Eigen::Index n = 0; n < N.rows(); ++n) worst = std::max(worst, std::abs(N.row(n).sum() - total0));
    return worst / total0;
}

Vec compartment_totals(const CompartmentSystem& sys, const Vec& n) {
    Vec out = Vec::Zero(sys.count());
    for (int a = 0; a < sys.count(); ++a)
        for (int s : sys.comps[a].states) out(a) += n(s);
    return out;
}

namespace {

void integrate_N(RenewalSolution& sol) {
    const int nc = sol.count();
    sol.N = Mat::Zero(sol.grid.nodes(), nc);
    for (int a = 0; a < nc; ++a) {
        const Series rate = sol.influx(a) - sol.outflux(a);
        sol.N.col(a) = cumtrapz(rate, sol.grid.dt).array() + sol.N0(a);
    }
    const double floor = -1e-10;
    for (int a = 0; a < nc; ++a) {
        const double m = sol.N.col(a).minCoeff();
        if (m < floor) {
            std::ostringstream os;
            os << "negative concentration in compartment " << sol.names[a] << ": min N = " << m;
            sol.diagnostics.push_back(os.str());
        }
    }
}

void check_N0(const Vec& N0, int nc) {
    if (N0.size() != nc) throw InputError("initial totals do not match compartment count");
    for (Eigen::Index i = 0; i < N0.size(); ++i)
        if (!(N0(i) >= 0.0)) throw InputError("negative initial total N0");
}

}  // namespace

RenewalSolution solve_renewal(const KernelSet& ks, const Forcing& forcing, const Vec& N0) {
    const int nc = ks.count();
    const int nodes = ks.grid.nodes();
    check_N0(N0, nc);
    if (static_cast<int>(forcing.S0.size()) != nc || static_cast<int>(forcing.J0.size()) != nc)
        throw InputError("forcing does not match kernel set");
    std::vector<int> offset(nc + 1, 0);
    for (int a = 0; a < nc; ++a) offset[a + 1] = offset[a] + ks.sizes[a];
    const int m = offset[nc];

    KernelMatrix W(m, m);
    Mat F(nodes, m);
    for (int a = 0; a < nc; ++a) {
        if (forcing.S0[a].rows() != nodes || forcing.S0[a].cols() != ks.sizes[a])
            throw InputError("kernel/grid mismatch in forcing");
        F.middleCols(offset[a], ks.sizes[a]) = forcing.S0[a];
        for (int b = 0; b < nc; ++b) {
            if (a == b) continue;
            const MatSeries& g = ks.g(b, a);  // G_{b->a}: |a| x |b|
            if (g.zero()) continue;
            if (g.data.rows() != nodes) throw InputError("kernel/grid mismatch");
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) {
                    Series e = g.entry(i, j, nodes);
                    if (e.cwiseAbs().maxCoeff() > 0.0) W.at(offset[a] + i, offset[b] + j) = std::move(e);
                }
        }
    }
    const Mat X = volterra_trapezoid(W, F, ks.grid.dt);

    RenewalSolution sol;
    sol.grid = ks.grid;
    sol.names = ks.names;
    sol.N0 = N0;
    sol.S.resize(nc);
    sol.J.resize(nc);
    for (int a = 0; a < nc; ++a) {
        const int na = ks.sizes[a];
        sol.S[a] = X.middleCols(offset[a], na);
        KernelMatrix Ka(na, na);
        const MatSeries& k = ks.K[a];
        if (!k.zero())
            for (int i = 0; i < na; ++i)
                for (int j = 0; j < na; ++j) {
                    Series e = k.entry(i, j, nodes);
                    if (e.cwiseAbs().maxCoeff() > 0.0) Ka.at(i, j) = std::move(e);
                }
        sol.J[a] = forcing.J0[a] + convolve_trapezoid(Ka, sol.S[a], ks.grid.dt);
    }
    integrate_N(sol);
    return sol;
}

RenewalSolution solve_renewal_scalar(const ScalarKernelSet& sk, const Vec& N0) {
    const int nc = sk.count();
    const int nodes = sk.grid.nodes();
    check_N0(N0, nc);
    KernelMatrix W(nc, nc);
    Mat F(nodes, nc);
    for (int a = 0; a < nc; ++a) {
        if (sk.B0[a].size() != nodes || sk.k[a].size() != nodes) throw InputError("kernel/grid mismatch");
        F.col(a) = sk.B0[a];
        for (int b = 0; b < nc; ++b) {
            if (a == b) continue;
            const Series& phi = sk.Phi(b, a);  // B_a receives Phi_{b->a} * B_b
            if (phi.size() != nodes) throw InputError("kernel/grid mismatch");
            if (phi.cwiseAbs().maxCoeff() > 0.0) W.at(a, b) = phi;
        }
    }
    const Mat B = volterra_trapezoid(W, F, sk.grid.dt);
    RenewalSolution sol;
    sol.grid = sk.grid;
    sol.names = sk.names;
    sol.scalar = true;
    sol.N0 = N0;
    sol.S.resize(nc);
    sol.J.resize(nc);
    for (int a = 0; a < nc; ++a) {
        sol.S[a] = B.col(a);
        KernelMatrix Ka(1, 1);
        if (sk.k[a].cwiseAbs().maxCoeff() > 0.0) Ka.at(0, 0) = sk.k[a];
        sol.J[a] = sk.D0[a] + convolve_trapezoid(Ka, sol.S[a], sk.grid.dt).col(0);
    }
    integrate_N(sol);
    return sol;
}

OdeReference ode_reference(const CompartmentSystem& sys, const Vec& n0, const TimeGrid& grid) {
    const int ns = sys.network.size();
    const int nc = sys.count();
    if (n0.size() != ns) throw InputError("initial state has wrong length");
    OdeReference ref;
    ref.grid = grid;
    ref.n = Mat::Zero(grid.nodes(), ns);
    Mat P = expm(sys.network.A, grid.dt);
    Vec v = n0;
    for (int k = 0; k < grid.nodes(); ++k) {
        if (k > 0) v = P * v;
        ref.n.row(k) = v.transpose();
    }
    ref.N = Mat::Zero(grid.nodes(), nc);
    ref.S.resize(nc);
    ref.J.resize(nc);
    for (int a = 0; a < nc; ++a) {
        const auto& st = sys.comps[a].states;
        const int na = static_cast<int>(st.size());
        Mat na_series(grid.nodes(), na);
        for (int i = 0; i < na; ++i) na_series.col(i) = ref.n.col(st[i]);
        ref.N.col(a) = na_series.rowwise().sum();
        ref.S[a] = Mat::Zero(grid.nodes(), na);
        for (int b = 0; b < nc; ++b) {
            if (b == a) continue;
            const Mat Aab = sys.block(a, b);
            if (Aab.cwiseAbs().maxCoeff() == 0.0) continue;
            Mat nb(grid.nodes(), sys.size(b));
            for (int j = 0; j < sys.size(b); ++j) nb.col(j) = ref.n.col(sys.comps[b].states[j]);
            ref.S[a] += nb * Aab.transpose();
        }
        ref.J[a] = na_series * sys.exit_rates(a).asDiagonal();
    }
    return ref;
}

EquivalenceReport equivalence_check(const CompartmentSystem& sys, const Vec& n0, const TimeGrid& grid,
                                    double tol) {
    const double fastest = sys.network.A.diagonal().cwiseAbs().maxCoeff();
    if (grid.dt * fastest > 0.1 + 1e-12) {
        std::ostringstream os;
        os << "under-resolved grid: dt*max|A_ii| = " << grid.dt * fastest << " > 0.1";
        throw InputError(os.str());
    }
    const KernelSet ks = compute_kernels(sys, grid);
    const Forcing f = compute_forcing(sys, grid, n0);
    EquivalenceReport rep;
    rep.solution = solve_renewal(ks, f, compartment_totals(sys, n0));
    const OdeReference ref = ode_reference(sys, n0, grid);
    rep.names = ks.names;
    for (int a = 0; a < sys.count(); ++a) {
        const double dn = (rep.solution.N.col(a) - ref.N.col(a)).cwiseAbs().maxCoeff();
        const double ds = (rep.solution.S[a] - ref.S[a]).cwiseAbs().maxCoeff();
        const double dj = (rep.solution.J[a] - ref.J[a]).cwiseAbs().maxCoeff();
        rep.dev_N.push_back(dn);
        rep.dev_S.push_back(ds);
        rep.dev_J.push_back(dj);
        rep.max_dev_N = std::max(rep.max_dev_N, dn);
        rep.max_dev = std::max({rep.max_dev, dn, ds, dj});
    }
    rep.pass = rep.max_dev_N <= tol;
    return rep;
}

}  // namespace rk
