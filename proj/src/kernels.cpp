#include "renewalkit/kernels.hpp"

#include <cmath>
#include <sstream>

namespace rk {

namespace {

const double kPade3[] = {120., 60., 12., 1.};
const double kPade5[] = {30240., 15120., 3360., 420., 30., 1.};
const double kPade7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
const double kPade9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                         2162160.,     110880.,     3960.,       90.,         1.};
const double kPade13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                          1187353796428800.,  129060195264000.,   10559470521600.,
                          670442572800.,      33522128640.,       1323241920.,
                          40840800.,          960960.,            16380.,
                          182.,               1.};

Mat pade_low(const Mat& A, const double* b, int m) {
    const Eigen::Index n = A.rows();
    const Mat I = Mat::Identity(n, n);
    const Mat A2 = A * A;
    Mat Apow = I;
    Mat U = b[1] * I;
    Mat V = b[0] * I;
    for (int k = 2; k <= m; k += 2) {
        Apow = Apow * A2;
        U += b[k + 1] * Apow;
        V += b[k] * Apow;
    }
    U = A * U;
    return (V - U).partialPivLu().solve(V + U);
}

Mat pade13(const Mat& A) {
    const double* b = kPade13;
    const Eigen::Index n = A.rows();
    const Mat I = Mat::Identity(n, n);
    const Mat A2 = A * A, A4 = A2 * A2, A6 = A4 * A2;
    Mat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    return (V - U).partialPivLu().solve(V + U);
}

void clean_metzler(Mat& P) {
    // Rounding can leave entries like -1e-18 where the exact value is >= 0.
    const double scale = std::max(P.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < P.size(); ++i) {
        double& x = P.data()[i];
        if (x < 0.0 && x > -1e-13 * scale) x = 0.0;
    }
}

bool is_metzler(const Mat& B) {
    for (Eigen::Index j = 0; j < B.cols(); ++j)
        for (Eigen::Index i = 0; i < B.rows(); ++i)
            if (i != j && B(i, j) < 0.0) return false;
    return true;
}

}  // namespace

Mat expm(const Mat& M, double t) {
    if (M.rows() != M.cols()) throw InputError("expm: matrix must be square");
    if (!M.allFinite() || !std::isfinite(t)) throw InputError("expm: non-finite input");
    const Eigen::Index n = M.rows();
    if (n == 0) return Mat(0, 0);
    Mat A = t * M;
    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
    if (norm == 0.0) return Mat::Identity(n, n);
    if (norm <= 1.495585217958292e-2) return pade_low(A, kPade3, 3);
    if (norm <= 2.539398330063230e-1) return pade_low(A, kPade5, 5);
    if (norm <= 9.504178996162932e-1) return pade_low(A, kPade7, 7);
    if (norm <= 2.097847961257068e0) return pade_low(A, kPade9, 9);
    int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 5.371920351148152))));
    if (s > 1000) {
        std::ostringstream os;
        os << "expm: norm " << norm << " too large";
        throw NumericError(os.str());
    }
    A /= std::ldexp(1.0, s);
    Mat X = pade13(A);
    for (int k = 0; k < s; ++k) X = X * X;
    if (!X.allFinite()) {
        std::ostringstream os;
        os << "expm: overflow for ||tM||_1 = " << norm;
        throw NumericError(os.str());
    }
    return X;
}

BlockPropagator::BlockPropagator(const Mat& B, double dt) {
    const Eigen::Index n = B.rows();
    const bool metzler = is_metzler(B);
    if (n <= 96 || !metzler) {
        dense_ = true;
        P_ = expm(B, dt);
        if (metzler) clean_metzler(P_);
        return;
    }
    dense_ = false;
    q_ = B.diagonal().cwiseAbs().maxCoeff();
    if (q_ == 0.0) q_ = 1.0;
    substeps_ = std::max(1, static_cast<int>(std::ceil(q_ * dt)));
    const double lam = q_ * dt / substeps_;
    Mat Ud = Mat::Identity(n, n) + B / q_;
    clean_metzler(Ud);
    U_ = Ud.sparseView();
    // Poisson weights until the tail is negligible.
    // Stop on term size: 1 - sum(w) stalls at rounding level and cannot serve as the test.
    double w = std::exp(-lam);
    for (int k = 0; k < 200; ++k) {
        poisson_.push_back(w);
        w *= lam / (k + 1);
        if (k + 1 > lam && w < 1e-18) break;
    }
}

void BlockPropagator::apply(Vec& v) const {
    if (dense_) {
        v = P_ * v;
        return;
    }
    for (int s = 0; s < substeps_; ++s) {
        Vec term = v;
        Vec acc = poisson_[0] * term;
        for (size_t k = 1; k < poisson_.size(); ++k) {
            term = U_ * term;
            acc += poisson_[k] * term;
        }
        v = acc;
    }
}

void BlockPropagator::apply(Mat& V) const {
    if (dense_) {
        V = P_ * V;
        return;
    }
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
        Vec col = V.col(c);
        apply(col);
        V.col(c) = col;
    }
}

Mat MatSeries::matrix(int node) const {
    Mat m = Mat::Zero(rows, cols);
    if (zero()) return m;
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = data(node, i + rows * j);
    return m;
}

Series MatSeries::entry(int i, int j, int nodes) const {
    if (zero()) return Series::Zero(nodes);
    return data.col(i + rows * j);
}

KernelSet compute_kernels(const CompartmentSystem& sys, const TimeGrid& grid) {
    const int nc = sys.count();
    const int nodes = grid.nodes();
    KernelSet ks;
    ks.grid = grid;
    for (const auto& c : sys.comps) {
        ks.names.push_back(c.name);
        ks.sizes.push_back(static_cast<int>(c.states.size()));
    }
    ks.G.resize(static_cast<size_t>(nc) * nc);
    ks.K.resize(nc);
    parallel_for(nc, [&](int b) {
        const int nb = sys.size(b);
        std::vector<Mat> out_blocks(nc);
        for (int a = 0; a < nc; ++a) {
            MatSeries& ms = ks.G[b * nc + a];
            ms.rows = sys.size(a);
            ms.cols = nb;
            if (a == b) continue;
            out_blocks[a] = sys.block(a, b);
            if (out_blocks[a].cwiseAbs().maxCoeff() > 0.0) ms.data = Mat::Zero(nodes, ms.rows * nb);
        }
        MatSeries& kb = ks.K[b];
        kb.rows = kb.cols = nb;
        const Vec c = sys.exit_rates(b);
        if (c.maxCoeff() > 0.0) kb.data = Mat::Zero(nodes, nb * nb);
        const BlockPropagator prop(sys.block(b, b), grid.dt);
        Mat E = Mat::Identity(nb, nb);
        for (int n = 0; n < nodes; ++n) {
            if (n > 0) prop.apply(E);
            for (int a = 0; a < nc; ++a) {
                MatSeries& ms = ks.G[b * nc + a];
                if (ms.zero()) continue;
                const Mat g = out_blocks[a] * E;
                ms.data.row(n) = Eigen::Map<const Eigen::RowVectorXd>(g.data(), g.size());
            }
            if (!kb.zero()) {
                const Mat kk = c.asDiagonal() * E;
                kb.data.row(n) = Eigen::Map<const Eigen::RowVectorXd>(kk.data(), kk.size());
            }
        }
    });
    return ks;
}

Forcing compute_forcing(const CompartmentSystem& sys, const TimeGrid& grid, const Vec& n0) {
    const int nc = sys.count();
    const int nodes = grid.nodes();
    if (n0.size() != sys.network.size()) throw InputError("initial state has wrong length");
    for (Eigen::Index i = 0; i < n0.size(); ++i)
        if (!(n0(i) >= 0.0)) throw InputError("negative initial entry for state '" + sys.network.states[i] + "'");
    Forcing f;
    f.S0.resize(nc);
    f.J0.resize(nc);
    for (int a = 0; a < nc; ++a) {
        f.S0[a] = Mat::Zero(nodes, sys.size(a));
        f.J0[a] = Mat::Zero(nodes, sys.size(a));
    }
    for (int b = 0; b < nc; ++b) {
        Vec v(sys.size(b));
        for (int k = 0; k < sys.size(b); ++k) v(k) = n0(sys.comps[b].states[k]);
        if (v.maxCoeff() <= 0.0) continue;
        const BlockPropagator prop(sys.block(b, b), grid.dt);
        const Vec c = sys.exit_rates(b);
        std::vector<Mat> out(nc);
        for (int a = 0; a < nc; ++a)
            if (a != b) out[a] = sys.block(a, b);
        for (int n = 0; n < nodes; ++n) {
            if (n > 0) prop.apply(v);
            for (int a = 0; a < nc; ++a)
                if (a != b) f.S0[a].row(n) += (out[a] * v).transpose();
            f.J0[b].row(n) = c.cwiseProduct(v).transpose();
        }
    }
    return f;
}

double conservation_defect(const KernelSet& ks) {
    const int nc = ks.count();
    double worst = 0.0;
    for (int a = 0; a < nc; ++a) {
        const int na = ks.sizes[a];
        for (int n = 0; n < ks.grid.nodes(); ++n) {
            for (int j = 0; j < na; ++j) {
                double lhs = 0.0;
                for (int b = 0; b < nc; ++b) {
                    if (b == a) continue;
                    const MatSeries& g = ks.g(a, b);
                    for (int i = 0; i < g.rows; ++i) lhs += g.at(n, i, j);
                }
                double rhs = 0.0;
                for (int i = 0; i < na; ++i) rhs += ks.K[a].at(n, i, j);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    return worst;
}

void ScalarKernelSet::refresh_masses() {
    const int nc = count();
    p = Mat::Zero(nc, nc);
    for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b)
            if (a != b) p(a, b) = trapz(Phi(a, b), grid.dt);
}

ScalarKernelSet empty_scalar_set(const TimeGrid& grid, const std::vector<std::string>& names) {
    ScalarKernelSet sk;
    sk.grid = grid;
    sk.names = names;
    const int nc = static_cast<int>(names.size());
    const Series z = Series::Zero(grid.nodes());
    sk.phi.assign(static_cast<size_t>(nc) * nc, z);
    sk.k.assign(nc, z);
    sk.B0.assign(nc, z);
    sk.D0.assign(nc, z);
    sk.p = Mat::Zero(nc, nc);
    sk.entrance.assign(nc, -1);
    sk.internal_sink.assign(nc, 0);
    return sk;
}

namespace {

void require_one_entrance(const CompartmentSystem& sys) {
    for (const auto& c : sys.comps) {
        if (c.entrances.size() > 1) {
            std::string list;
            for (int s : c.entrances) list += (list.empty() ? "" : ",") + sys.network.states[s];
            throw InputError("multiple entrance points in compartment " + c.name + " (" + list + ")");
        }
    }
}

// States of a compartment that can reach an exit without leaving it.
std::vector<char> reaches_exit(const Mat& B, const Vec& c) {
    const int n = static_cast<int>(c.size());
    std::vector<char> to_exit(n, 0);
    std::vector<int> st;
    for (int v = 0; v < n; ++v)
        if (c(v) > 0.0) to_exit[v] = 1, st.push_back(v);
    while (!st.empty()) {
        int u = st.back();
        st.pop_back();
        for (int v = 0; v < n; ++v)
            if (v != u && B(u, v) > 0.0 && !to_exit[v]) to_exit[v] = 1, st.push_back(v);
    }
    return to_exit;
}

// States reachable from the reference state that cannot reach an exit without leaving.
bool has_internal_sink(const CompartmentSystem& sys, int a) {
    const int n = sys.size(a);
    const Mat B = sys.block(a, a);
    const Vec c = sys.exit_rates(a);
    if (c.maxCoeff() <= 0.0) return false;  // pure sink compartment, classified separately
    const int r = sys.reference_local(a);
    std::vector<char> from(n, 0), to_exit(n, 0);
    std::vector<int> st{r};
    from[r] = 1;
    while (!st.empty()) {
        int u = st.back();
        st.pop_back();
        for (int v = 0; v < n; ++v)
            if (v != u && B(v, u) > 0.0 && !from[v]) from[v] = 1, st.push_back(v);
    }
    for (int v = 0; v < n; ++v)
        if (c(v) > 0.0) to_exit[v] = 1, st.push_back(v);
    while (!st.empty()) {
        int u = st.back();
        st.pop_back();
        for (int v = 0; v < n; ++v)
            if (v != u && B(u, v) > 0.0 && !to_exit[v]) to_exit[v] = 1, st.push_back(v);
    }
    for (int v = 0; v < n; ++v)
        if (from[v] && !to_exit[v]) return true;
    return false;
}

void fill_metadata(ScalarKernelSet& sk, const CompartmentSystem& sys) {
    for (int a = 0; a < sys.count(); ++a) {
        sk.entrance[a] = sys.comps[a].entrances.empty() ? -1 : sys.comps[a].entrances[0];
        sk.internal_sink[a] = has_internal_sink(sys, a) ? 1 : 0;
    }
    sk.refresh_masses();
}

}  // namespace

ScalarKernelSet reduce_one_entrance(const KernelSet& ks, const CompartmentSystem& sys, const Forcing* forcing) {
    require_one_entrance(sys);
    const int nc = sys.count();
    const int nodes = ks.grid.nodes();
    ScalarKernelSet sk = empty_scalar_set(ks.grid, ks.names);
    for (int a = 0; a < nc; ++a) {
        const int ia = sys.reference_local(a);
        for (int b = 0; b < nc; ++b) {
            if (a == b) continue;
            const int ib = sys.reference_local(b);
            // Phi_{a->b} = (G_{a->b})_{i_b, i_a}
            sk.Phi(a, b) = ks.g(a, b).entry(ib, ia, nodes);
        }
        Series kk = Series::Zero(nodes);
        for (int j = 0; j < sys.size(a); ++j) kk += ks.K[a].entry(j, ia, nodes);
        sk.k[a] = kk;
        if (forcing) {
            sk.B0[a] = forcing->S0[a].col(ia);
            sk.D0[a] = forcing->J0[a].rowwise().sum();
        }
    }
    fill_metadata(sk, sys);
    return sk;
}

Mat exact_kernel_masses(const CompartmentSystem& sys) {
    require_one_entrance(sys);
    const int nc = sys.count();
    Mat p = Mat::Zero(nc, nc);
    for (int a = 0; a < nc; ++a) {
        const Mat B = sys.block(a, a);
        const std::vector<char> T = reaches_exit(B, sys.exit_rates(a));
        const int r = sys.reference_local(a);
        if (!T[r]) continue;
        // Restricted to T the block is a nonsingular M-matrix; mass flowing into trapped states is lost.
        std::vector<int> pos(B.rows(), -1), keep;
        for (int v = 0; v < B.rows(); ++v)
            if (T[v]) pos[v] = static_cast<int>(keep.size()), keep.push_back(v);
        const int m = static_cast<int>(keep.size());
        std::vector<Eigen::Triplet<double>> trip;
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i)
                if (B(keep[i], keep[j]) != 0.0) trip.emplace_back(i, j, -B(keep[i], keep[j]));
        Eigen::SparseMatrix<double> S(m, m);
        S.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(S);
        if (lu.info() != Eigen::Success) throw NumericError("exact kernel masses: singular compartment block");
        Vec e = Vec::Zero(m);
        e(pos[r]) = 1.0;
        const Vec x = lu.solve(e);
        for (int b = 0; b < nc; ++b) {
            if (b == a) continue;
            const Mat F = sys.block(b, a);
            for (int j = 0; j < m; ++j) p(a, b) += F.col(keep[j]).sum() * x(j);
        }
    }
    return p;
}

ScalarKernelSet compute_scalar_kernels(const CompartmentSystem& sys, const TimeGrid& grid, const Vec* n0) {
    require_one_entrance(sys);
    const int nc = sys.count();
    const int nodes = grid.nodes();
    std::vector<std::string> names;
    for (const auto& c : sys.comps) names.push_back(c.name);
    ScalarKernelSet sk = empty_scalar_set(grid, names);
    parallel_for(nc, [&](int a) {
        const int na = sys.size(a);
        const int ia = sys.reference_local(a);
        const Vec c = sys.exit_rates(a);
        std::vector<Eigen::RowVectorXd> rows(nc);
        for (int b = 0; b < nc; ++b)
            if (b != a) rows[b] = sys.block(b, a).row(sys.reference_local(b));
        const BlockPropagator prop(sys.block(a, a), grid.dt);
        Vec w = Vec::Zero(na);
        w(ia) = 1.0;
        for (int n = 0; n < nodes; ++n) {
            if (n > 0) prop.apply(w);
            for (int b = 0; b < nc; ++b)
                if (b != a) sk.Phi(a, b)(n) = rows[b].dot(w);
            sk.k[a](n) = c.dot(w);
        }
    });
    if (n0) {
        const Forcing f = compute_forcing(sys, grid, *n0);
        for (int a = 0; a < nc; ++a) {
            sk.B0[a] = f.S0[a].col(sys.reference_local(a));
            sk.D0[a] = f.J0[a].rowwise().sum();
        }
    }
    fill_metadata(sk, sys);
    return sk;
}

std::vector<MassRow> kernel_mass_report(const ScalarKernelSet& sk, double tol, const Mat* exact) {
    std::vector<MassRow> rows;
    for (int a = 0; a < sk.count(); ++a) {
        MassRow r;
        r.name = sk.names[a];
        r.mass = sk.mass(a);
        r.deficit = 1.0 - r.mass;
        if (exact) {
            r.exact = exact->row(a).sum();
            r.deficit = 1.0 - r.exact;
            if (std::abs(r.mass - r.exact) > tol)
                r.status = "truncated";
            else if (r.exact <= tol)
                r.status = "sink";
            else if (std::abs(r.deficit) <= tol)
                r.status = "conservative";
            else
                r.status = "leaky";
        } else if (r.mass <= tol)
            r.status = "sink";
        else if (std::abs(r.deficit) <= tol)
            r.status = "conservative";
        else if (sk.internal_sink[a])
            r.status = "leaky";
        else
            r.status = "truncated";
        rows.push_back(r);
    }
    return rows;
}

HorizonSuggestion suggest_tmax(const CompartmentSystem& sys, double threshold) {
    HorizonSuggestion h;
    const double scale = std::max(1.0, sys.network.A.cwiseAbs().maxCoeff());
    for (int a = 0; a < sys.count(); ++a) {
        Eigen::EigenSolver<Mat> es(sys.block(a, a), false);
        double slowest = 0.0;
        bool found = false;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double re = es.eigenvalues()(i).real();
            if (re < -1e-10 * scale) {
                const double rate = -re;
                if (!found || rate < slowest) slowest = rate;
                found = true;
            }
        }
        h.slowest_rate.push_back(found ? slowest : 0.0);
        if (found) h.t_max = std::max(h.t_max, std::log(1.0 / threshold) / slowest);
    }
    return h;
}

}  // namespace rk
