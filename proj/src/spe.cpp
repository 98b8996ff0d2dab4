#include "renewalkit/spe.hpp"

#include <cmath>
#include <sstream>

namespace rk {

Series RateSet::total(int a) const {
    Series s = Series::Zero(grid.nodes());
    for (int b = 0; b < count(); ++b)
        if (b != a) s += rate(a, b);
    return s;
}

RateSet rates_from_kernels(const ScalarKernelSet& sk, double floor) {
    const int nc = sk.count();
    const int nodes = sk.grid.nodes();
    RateSet rs;
    rs.grid = sk.grid;
    rs.names = sk.names;
    rs.lambda.assign(static_cast<size_t>(nc) * nc, Series::Zero(nodes));
    for (int a = 0; a < nc; ++a) {
        Series out = Series::Zero(nodes);
        for (int b = 0; b < nc; ++b)
            if (b != a) out += sk.Phi(a, b);
        if (out.cwiseAbs().maxCoeff() == 0.0) continue;  // sink: rates stay zero
        for (int b = 0; b < nc; ++b)
            if (b != a && sk.Phi(a, b).minCoeff() < 0.0) throw InputError("negative kernel samples in " + sk.names[a]);
        const Series surv = Series::Ones(nodes) - cumtrapz(out, sk.grid.dt);
        for (int n = 0; n < nodes; ++n) {
            if (surv(n) < floor) {
                std::ostringstream os;
                os << "kernel mass of compartment " << sk.names[a] << " exhausted at t = " << sk.grid.t(n)
                   << " (survival " << surv(n) << " below floor " << floor << ")";
                throw NumericError(os.str());
            }
        }
        for (int b = 0; b < nc; ++b) {
            if (b == a) continue;
            Series& l = rs.lambda[a * nc + b];
            l = sk.Phi(a, b).cwiseQuotient(surv);
            rs.max_rate = std::max(rs.max_rate, l.maxCoeff());
        }
    }
    return rs;
}

ScalarKernelSet kernels_from_rates(const RateSet& rates) {
    const int nc = rates.count();
    ScalarKernelSet sk = empty_scalar_set(rates.grid, rates.names);
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b)
            if (b != a && rates.rate(a, b).minCoeff() < 0.0) throw InputError("negative rate samples");
        const Series surv = (-cumtrapz(rates.total(a), rates.grid.dt)).array().exp();
        for (int b = 0; b < nc; ++b) {
            if (b == a) continue;
            sk.Phi(a, b) = rates.rate(a, b).cwiseProduct(surv);
            sk.k[a] += sk.Phi(a, b);
        }
    }
    sk.refresh_masses();
    return sk;
}

double HistoryMeasure::span() const {
    double s = 0.0;
    for (const auto& list : atoms)
        for (const auto& at : list) s = std::max(s, -at.location);
    return s;
}

double HistoryMeasure::total_mass(double dt) const {
    double m = 0.0;
    for (const auto& list : atoms)
        for (const auto& at : list) m += at.mass;
    for (const auto& d : density) m += trapz(d, dt);
    return m;
}

namespace {

struct GridAtom {
    int age = 0;  // index
    double mass = 0.0;
};

std::vector<std::vector<GridAtom>> discretize_history(const HistoryMeasure& h, int nc, double dt) {
    std::vector<std::vector<GridAtom>> out(nc);
    if (h.atoms.size() > static_cast<size_t>(nc) || h.density.size() > static_cast<size_t>(nc))
        throw InputError("history has more compartments than the kernel set");
    for (size_t a = 0; a < h.atoms.size(); ++a) {
        for (const auto& at : h.atoms[a]) {
            if (at.location > 0.0) throw InputError("history atom at positive location");
            if (!(at.mass >= 0.0)) throw InputError("negative history mass");
            const double r = -at.location / dt;
            const double k = std::round(r);
            if (std::abs(r - k) > 1e-6 * std::max(1.0, r)) throw InputError("history atom location is not on the time grid");
            out[a].push_back({static_cast<int>(k), at.mass});
        }
    }
    for (size_t a = 0; a < h.density.size(); ++a) {
        const Series& d = h.density[a];
        for (Eigen::Index k = 0; k < d.size(); ++k) {
            if (d(k) < 0.0) throw InputError("negative history density");
            const double w = (k == 0 || k == d.size() - 1) ? 0.5 * dt : dt;
            if (d(k) > 0.0) out[a].push_back({static_cast<int>(k), w * d(k)});
        }
    }
    return out;
}

int history_cells(const std::vector<std::vector<GridAtom>>& atoms) {
    int h = 0;
    for (const auto& list : atoms)
        for (const auto& at : list) h = std::max(h, at.age);
    return h;
}

}  // namespace

AgeDensity solve_spe(const RateSet& rates, const HistoryMeasure& history, const TimeGrid& grid, int snapshot_stride) {
    const int nc = rates.count();
    const double dt = grid.dt;
    if (std::abs(rates.grid.dt - dt) > 1e-12 * dt) throw InputError("rate grid spacing differs from the time grid");
    const auto atoms = discretize_history(history, nc, dt);
    const int H = history_cells(atoms);
    const int steps = grid.n;
    const int max_age = steps + H;
    const int Kr = rates.grid.n;

    // Per-cell survival factor and exit split over [k dt, (k+1) dt].
    std::vector<std::vector<double>> fac(nc, std::vector<double>(max_age + 1, 1.0));
    std::vector<std::vector<std::vector<double>>> split(
        nc, std::vector<std::vector<double>>(nc, std::vector<double>(max_age + 1, 0.0)));
    for (int a = 0; a < nc; ++a) {
        const Series L = rates.total(a);
        for (int k = 0; k <= max_age; ++k) {
            const int k0 = std::min(k, Kr), k1 = std::min(k + 1, Kr);
            const double lsum = L(k0) + L(k1);
            fac[a][k] = std::exp(-0.5 * dt * lsum);
            if (lsum > 0.0)
                for (int b = 0; b < nc; ++b)
                    if (b != a) split[a][b][k] = (rates.rate(a, b)(k0) + rates.rate(a, b)(k1)) / lsum;
        }
    }

    AgeDensity out;
    out.grid = grid;
    out.max_rate = rates.max_rate;
    out.ages = Vec::LinSpaced(max_age + 1, 0.0, max_age * dt);
    out.N = Mat::Zero(grid.nodes(), nc);
    out.B = Mat::Zero(grid.nodes(), nc);
    out.D = Mat::Zero(grid.nodes(), nc);
    out.remainder = Vec::Zero(nc);
    if (snapshot_stride <= 0) snapshot_stride = std::max(1, grid.n / 100);
    for (int n = 0; n <= steps; n += snapshot_stride) out.snapshot_nodes.push_back(n);
    if (out.snapshot_nodes.back() != steps) out.snapshot_nodes.push_back(steps);
    out.f.assign(nc, Mat::Zero(out.snapshot_nodes.size(), max_age + 1));

    // cells[a][H + b] holds the mass born at step b (b < 0 for history).
    std::vector<std::vector<double>> cells(nc, std::vector<double>(H + steps + 1, 0.0));
    for (int a = 0; a < nc; ++a) {
        for (const auto& at : atoms[a]) {
            double s = 1.0;
            for (int k = 0; k < at.age; ++k) s *= fac[a][k];
            cells[a][H - at.age] += at.mass * s;
        }
    }
    size_t snap = 0;
    auto record = [&](int n) {
        for (int a = 0; a < nc; ++a) {
            double tot = 0.0;
            for (int idx = 0; idx <= H + n; ++idx) tot += cells[a][idx];
            out.N(n, a) = tot;
        }
        if (snap < out.snapshot_nodes.size() && out.snapshot_nodes[snap] == n) {
            for (int a = 0; a < nc; ++a)
                for (int idx = 0; idx <= H + n; ++idx) out.f[a](snap, n + H - idx) = cells[a][idx] / dt;
            ++snap;
        }
    };
    record(0);
    std::vector<double> removed(max_age + 1);
    for (int n = 0; n < steps; ++n) {
        std::vector<double> births(nc, 0.0);
        for (int a = 0; a < nc; ++a) {
            double gone = 0.0;
            for (int idx = 0; idx <= H + n; ++idx) {
                double& u = cells[a][idx];
                const int k = n + H - idx;
                if (u == 0.0) {
                    removed[k] = 0.0;
                    continue;
                }
                const double r = u * (1.0 - fac[a][k]);
                removed[k] = r;
                u -= r;
                gone += r;
            }
            out.D(n + 1, a) = gone / dt;
            if (gone == 0.0) continue;
            for (int b = 0; b < nc; ++b) {
                if (b == a) continue;
                const auto& w = split[a][b];
                double s = 0.0;
                for (int k = 0; k <= n + H; ++k) s += removed[k] * w[k];
                births[b] += s;
            }
        }
        for (int b = 0; b < nc; ++b) {
            cells[b][H + n + 1] = births[b];
            out.B(n + 1, b) = births[b] / dt;
        }
        record(n + 1);
    }
    for (int a = 0; a < nc; ++a)
        for (int idx = 0; idx <= H + steps; ++idx)
            if (steps + H - idx > Kr) out.remainder(a) += cells[a][idx];
    return out;
}

SpeRfeReport spe_rfe_equivalence(const ScalarKernelSet& sk, const HistoryMeasure& history, const TimeGrid& grid,
                                 double tol) {
    const int nc = sk.count();
    const double dt = grid.dt;
    if (std::abs(sk.grid.dt - dt) > 1e-12 * dt) throw InputError("kernel grid spacing differs from the time grid");
    const auto atoms = discretize_history(history, nc, dt);
    const int H = history_cells(atoms);
    if (sk.grid.n < grid.n + H) throw InputError("kernel grid too short for t_max plus history span");

    SpeRfeReport rep;
    const RateSet rates = rates_from_kernels(sk);

    ScalarKernelSet run = empty_scalar_set(grid, sk.names);
    const int nodes = grid.nodes();
    Vec N0 = Vec::Zero(nc);
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b)
            if (b != a) run.Phi(a, b) = sk.Phi(a, b).head(nodes);
        run.k[a] = sk.k[a].head(nodes);
    }
    for (int a = 0; a < nc; ++a) {
        const Series cumk = cumtrapz(sk.k[a], dt);
        for (const auto& at : atoms[a]) {
            N0(a) += at.mass * (1.0 - cumk(at.age));
            run.D0[a] += at.mass * sk.k[a].segment(at.age, nodes);
            for (int b = 0; b < nc; ++b)
                if (b != a) run.B0[b] += at.mass * sk.Phi(a, b).segment(at.age, nodes);
        }
    }
    run.refresh_masses();
    rep.rfe = solve_renewal_scalar(run, N0);
    rep.spe = solve_spe(rates, history, grid);
    for (int a = 0; a < nc; ++a) {
        const double d = (rep.rfe.N.col(a) - rep.spe.N.col(a)).cwiseAbs().maxCoeff();
        rep.deviation.push_back(d);
        rep.max_deviation = std::max(rep.max_deviation, d);
    }
    rep.pass = rep.max_deviation <= tol;
    return rep;
}

HistoryCheck forward_history_check(const CompartmentSystem& sys, const Vec& n0,
                                   const std::vector<std::vector<VectorAtom>>& history, double tol) {
    if (n0.size() != sys.network.size()) throw InputError("initial state has wrong length");
    if (history.size() > static_cast<size_t>(sys.count())) throw InputError("history has more compartments than the system");
    HistoryCheck hc;
    hc.predicted = Vec::Zero(n0.size());
    for (size_t b = 0; b < history.size(); ++b) {
        const int nb = sys.size(static_cast<int>(b));
        const Mat Abb = sys.block(static_cast<int>(b), static_cast<int>(b));
        Vec acc = Vec::Zero(nb);
        for (const auto& at : history[b]) {
            if (at.location > 0.0) throw InputError("history atom at positive location");
            if (at.mass.size() != nb) throw InputError("history mass vector has wrong length");
            acc += expm(Abb, -at.location) * at.mass;
        }
        for (int k = 0; k < nb; ++k) hc.predicted(sys.comps[b].states[k]) = acc(k);
    }
    hc.residual = (hc.predicted - n0).cwiseAbs().maxCoeff();
    hc.consistent = hc.residual <= tol;
    return hc;
}

}  // namespace rk
