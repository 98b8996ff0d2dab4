#include "renewalkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rk {

double laplace_kernel(const Series& f, double dt, double z) {
    if (z < 0.0) throw InputError("laplace_kernel: z must be nonnegative");
    Series g(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) g(i) = std::exp(-z * i * dt) * f(i);
    return trapz(g, dt);
}

Mat build_M(const ScalarKernelSet& sk, double z) {
    const int nc = sk.count();
    Mat M = Mat::Zero(nc, nc);
    for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b)
            if (a != b) M(a, b) = laplace_kernel(sk.Phi(b, a), sk.grid.dt, z);
    return M;
}

MarkovVerdict markovianity_test(const ScalarKernelSet& sk, double tol) {
    const int nc = sk.count();
    const double dt = sk.grid.dt;
    MarkovVerdict v;
    v.r.assign(nc, 0.0);
    v.lambda = Mat::Zero(nc, nc);
    bool ok = true;
    for (int a = 0; a < nc; ++a) {
        const Series& k = sk.k[a];
        const double kmax = k.cwiseAbs().maxCoeff();
        if (kmax == 0.0) {
            v.evidence.push_back(sk.names[a] + ": no exits, rate 0");
            continue;
        }
        if (!(k(0) > 0.0)) {
            ok = false;
            v.evidence.push_back(sk.names[a] + ": k(0) = 0, kernel vanishes at t = 0 (not a single exponential)");
            continue;
        }
        const double r0 = k(0) / std::max(trapz(k, dt), 1e-300);
        const int last = std::min(sk.grid.n, std::max(2, static_cast<int>(std::floor(5.0 / r0 / dt))));
        // Least squares for log k = c - r t.
        double st = 0, sy = 0, stt = 0, sty = 0;
        int cnt = 0;
        for (int n = 0; n <= last; ++n) {
            if (!(k(n) > 0.0)) continue;
            const double t = n * dt, y = std::log(k(n));
            st += t, sy += y, stt += t * t, sty += t * y;
            ++cnt;
        }
        if (cnt < 2) {
            ok = false;
            v.evidence.push_back(sk.names[a] + ": kernel vanishes on the fit window");
            continue;
        }
        const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
        const double r = -slope;
        v.r[a] = r;
        double lsum = 0.0;
        for (int b = 0; b < nc; ++b) {
            if (b == a) continue;
            const Series& phi = sk.Phi(a, b);
            if (phi.cwiseAbs().maxCoeff() == 0.0) continue;
            const double lam = phi(0);
            v.lambda(a, b) = lam;
            lsum += lam;
            if (!(lam > 0.0)) {
                ok = false;
                v.evidence.push_back(sk.names[a] + "->" + sk.names[b] + ": Phi(0) = 0, not a single exponential");
                continue;
            }
            double err = 0.0;
            double at = 0.0;
            for (int n = 0; n <= last; ++n) {
                const double model = lam * std::exp(-r * n * dt);
                const double e = std::abs(phi(n) / model - 1.0);
                if (e > err) err = e, at = n * dt;
            }
            v.max_affinity_error = std::max(v.max_affinity_error, err);
            if (err > tol) {
                ok = false;
                std::ostringstream os;
                os << sk.names[a] << "->" << sk.names[b] << ": log-kernel not affine, relative error " << err
                   << " at t = " << at;
                v.evidence.push_back(os.str());
            }
        }
        if (std::abs(lsum - r) > tol * std::max(r, 1e-300)) {
            ok = false;
            std::ostringstream os;
            os << sk.names[a] << ": sum of Phi(0) = " << lsum << " differs from fitted decay rate " << r;
            v.evidence.push_back(os.str());
        }
    }
    v.markovian = ok;
    if (ok) {
        v.generator = Mat::Zero(nc, nc);
        for (int a = 0; a < nc; ++a) {
            for (int b = 0; b < nc; ++b)
                if (b != a) v.generator(b, a) = v.lambda(a, b);
            v.generator(a, a) = -v.lambda.row(a).sum();
        }
    }
    return v;
}

double SpectralKernel::weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

double SpectralKernel::eval(double t) const {
    double s = 0.0;
    for (size_t j = 0; j < weights.size(); ++j) s += weights[j] * std::exp(-rates[j] * t);
    return prefactor * s;
}

Series SpectralKernel::sample(const TimeGrid& grid) const {
    Series s(grid.nodes());
    for (int n = 0; n < grid.nodes(); ++n) s(n) = eval(grid.t(n));
    return s;
}

SpectralKernel detailed_balance_kernel(const CompartmentSystem& sys, const DetailedBalanceCertificate& cert,
                                       int from, int to) {
    if (!cert.present) throw InputError("detailed balance certificate missing");
    if (from < 0 || to < 0 || from >= sys.count() || to >= sys.count() || from == to)
        throw InputError("invalid compartment pair");
    if (sys.comps[from].entrances.size() > 1 || sys.comps[to].entrances.size() > 1)
        throw InputError("multiple entrance points");
    const int ib = sys.reference_local(from);
    const int ia_global = sys.comps[to].states[sys.reference_local(to)];
    const int ib_global = sys.comps[from].states[ib];
    SpectralKernel sk;
    sk.prefactor = sys.network.A(ia_global, ib_global);
    const Mat Abb = sys.block(from, from);
    const int nb = sys.size(from);
    Vec s(nb);
    for (int k = 0; k < nb; ++k) s(k) = std::sqrt(cert.mu(sys.comps[from].states[k]));
    Mat D = s.cwiseInverse().asDiagonal() * Abb * s.asDiagonal();
    D = 0.5 * (D + D.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(D);
    for (int j = 0; j < nb; ++j) {
        const double q = es.eigenvectors()(ib, j);
        sk.weights.push_back(q * q);
        sk.rates.push_back(std::max(0.0, -es.eigenvalues()(j)));
    }
    return sk;
}

Vec nnls(const Mat& A, const Vec& b, int max_iter) {
    const Eigen::Index n = A.cols();
    if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
    Vec x = Vec::Zero(n);
    std::vector<char> passive(n, 0);
    const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff()) * n;
    auto solve_passive = [&](Vec& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[j]) idx.push_back(j);
        z = Vec::Zero(n);
        if (idx.empty()) return;
        Mat Ap(A.rows(), idx.size());
        for (size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
        Vec zp = Ap.colPivHouseholderQr().solve(b);
        for (size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(c);
    };
    for (int it = 0; it < max_iter; ++it) {
        Vec w = A.transpose() * (b - A * x);
        Eigen::Index jmax = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[j] && w(j) > wmax) wmax = w(j), jmax = j;
        if (jmax < 0) break;
        passive[jmax] = 1;
        for (int inner = 0; inner < max_iter; ++inner) {
            Vec z;
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[j] && z(j) <= 0.0) feasible = false;
            if (feasible) {
                x = z;
                break;
            }
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[j] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[j] && x(j) <= 1e-15) passive[j] = 0, x(j) = 0.0;
        }
    }
    return x;
}

MixtureFit exponential_mixture_fit(const Series& f, double dt, int n_rates) {
    const int N = static_cast<int>(f.size());
    MixtureFit fit;
    const double fmax = f.cwiseAbs().maxCoeff();
    if (N < 2 || fmax == 0.0) {
        fit.rates = Vec::Zero(0);
        fit.weights = Vec::Zero(0);
        return fit;
    }
    const int stride = std::max(1, (N - 1) / 400);
    std::vector<int> nodes;
    for (int i = 0; i < N; i += stride) nodes.push_back(i);
    if (nodes.back() != N - 1) nodes.push_back(N - 1);
    const double T = (N - 1) * dt;
    const double hs = stride * dt;
    const double lo = 0.05 / T, hi = 2.0 / hs;
    fit.rates = Vec(n_rates);
    for (int j = 0; j < n_rates; ++j) fit.rates(j) = lo * std::pow(hi / lo, static_cast<double>(j) / (n_rates - 1));
    Mat A(nodes.size(), n_rates);
    Vec b(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        const double t = nodes[i] * dt;
        b(i) = f(nodes[i]) / fmax;
        for (int j = 0; j < n_rates; ++j) A(i, j) = std::exp(-fit.rates(j) * t);
    }
    fit.weights = nnls(A, b) * fmax;
    double res = 0.0;
    for (int i = 0; i < N; ++i) {
        double model = 0.0;
        for (int j = 0; j < n_rates; ++j) model += fit.weights(j) * std::exp(-fit.rates(j) * i * dt);
        res = std::max(res, std::abs(model - f(i)));
    }
    fit.residual = res / fmax;
    return fit;
}

MonotonicityVerdict complete_monotonicity_check(const Series& f, double dt, int n_max, double tol) {
    if (n_max < 1 || n_max > 8) throw InputError("complete monotonicity: order must be in 1..8");
    const int N = static_cast<int>(f.size());
    const int stride = std::max(1, (N - 1) / 256);
    if ((N - 1) / stride < n_max + 2) throw InputError("grid too coarse for requested order");
    MonotonicityVerdict v;
    v.consistent = true;
    const double fmax = f.cwiseAbs().maxCoeff();
    if (fmax == 0.0) {
        v.message = "consistent";
        return v;
    }
    std::vector<double> binom(n_max + 1);
    for (int n = 1; n <= n_max && v.consistent; ++n) {
        binom.assign(n + 1, 1.0);
        for (int k = 1; k <= n; ++k) binom[k] = binom[k - 1] * (n - k + 1) / k;
        const double thresh = (tol + std::ldexp(64.0 * std::numeric_limits<double>::epsilon(), n)) * fmax;
        for (int i = 0; i + n * stride < N; ++i) {
            double d = 0.0;
            for (int k = 0; k <= n; ++k) d += ((n - k) % 2 ? -1.0 : 1.0) * binom[k] * f(i + k * stride);
            if ((n % 2 ? -d : d) < -thresh) {
                v.consistent = false;
                v.violated_order = n;
                v.violated_at = i * dt;
                break;
            }
        }
    }
    v.fit = exponential_mixture_fit(f, dt);
    std::ostringstream os;
    if (v.consistent)
        os << "consistent (mixture fit residual " << v.fit.residual << ")";
    else
        os << "violated at (order " << v.violated_order << ", t = " << v.violated_at << ")";
    v.message = os.str();
    return v;
}

PerronResult perron(const Mat& M0, double tol, double mass_tol) {
    const Eigen::Index n = M0.rows();
    if (n == 0 || M0.cols() != n) throw InputError("perron: square nonempty matrix required");
    if (M0.minCoeff() < 0.0) throw InputError("perron: matrix has negative entries");
    if (!strongly_connected(M0)) throw NumericError("perron: reducible kernel matrix");
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(M0.col(j).sum() - 1.0) > mass_tol)
            throw InputError("perron: column sums differ from 1 (non-conservative kernel masses)");
    PerronResult pr;
    auto dominant = [&](const Mat& M, double& rho) {
        Eigen::EigenSolver<Mat> es(M, true);
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
        rho = es.eigenvalues()(best).real();
        Vec v = es.eigenvectors().col(best).real();
        if (v.sum() < 0) v = -v;
        return v;
    };
    double rho_l = 0.0;
    pr.v0 = dominant(M0, pr.rho);
    pr.u0 = dominant(M0.transpose(), rho_l);
    if (pr.v0.minCoeff() <= 0.0 || pr.u0.minCoeff() <= 0.0) throw NumericError("perron: eigenvector not positive");
    pr.v0 /= pr.v0.sum();
    pr.u0 /= pr.u0.dot(pr.v0);
    pr.residual_right = (M0 * pr.v0 - pr.rho * pr.v0).cwiseAbs().maxCoeff();
    pr.residual_left = (M0.transpose() * pr.u0 - pr.rho * pr.u0).cwiseAbs().maxCoeff();
    if (pr.residual_right > tol || pr.residual_left > tol) throw NumericError("perron: eigenvector residual above tolerance");
    return pr;
}

AsymptoticsResult long_time_limits(const ScalarKernelSet& sk, const Vec& N0) {
    const int nc = sk.count();
    const double dt = sk.grid.dt;
    AsymptoticsResult res;
    const Mat M0 = build_M(sk, 0.0);
    // trapezoid masses carry O(dt^2) error
    const double mass_tol = std::max(1e-6, 10.0 * dt * dt);
    const PerronResult pr = perron(M0, 1e-8, mass_tol);
    res.v0 = pr.v0;
    res.u0 = pr.u0;
    res.rho = pr.rho;
    if (std::abs(pr.rho - 1.0) > mass_tol) throw NumericError("spectral radius of M(0) is not 1; no pole at z = 0");
    res.D = Mat::Zero(nc, nc);
    for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b)
            if (a != b) res.D(a, b) = trapz_first_moment(sk.Phi(b, a), dt);
    Vec Bhat(nc);
    for (int a = 0; a < nc; ++a) Bhat(a) = trapz(sk.B0[a], dt);
    const double denom = res.u0.dot(res.D * res.v0);
    if (!(denom > 1e-12)) throw NumericError("non-simple pole at z = 0 (u0^T D v0 vanishes)");
    res.c0 = res.u0.dot(Bhat) / denom;
    res.N_inf = Vec(nc);
    for (int a = 0; a < nc; ++a) res.N_inf(a) = res.c0 * res.v0(a) * trapz_first_moment(sk.k[a], dt);

    res.solution = solve_renewal_scalar(sk, N0);
    const int last = sk.grid.n;
    res.B_tmax = Vec(nc);
    res.N_tmax = res.solution.N.row(last).transpose();
    for (int a = 0; a < nc; ++a) res.B_tmax(a) = res.solution.S[a](last, 0);
    res.c0_tail = res.u0.dot(res.B_tmax);

    // Transient part: component of B outside the Perron direction.
    std::vector<int> idx;
    std::vector<double> logw;
    for (int n = 0; n <= last; ++n) {
        Vec b(nc);
        for (int a = 0; a < nc; ++a) b(a) = res.solution.S[a](n, 0);
        const double w = (b - res.u0.dot(b) * res.v0).norm();
        if (w > 1e-12) {
            idx.push_back(n);
            logw.push_back(std::log(w));
        }
    }
    // Drop the late plateau where the transient sinks into the discretization floor.
    if (!logw.empty()) {
        const size_t tail = std::max<size_t>(1, logw.size() / 10);
        std::vector<double> late(logw.end() - tail, logw.end());
        std::nth_element(late.begin(), late.begin() + late.size() / 2, late.end());
        const double floor_log = late[late.size() / 2] + std::log(10.0);
        size_t keep = logw.size();
        while (keep > 0 && logw[keep - 1] <= floor_log) --keep;
        if (keep >= 9) {
            idx.resize(keep);
            logw.resize(keep);
        }
    }
    const size_t start = idx.size() - idx.size() / 3;
    double st = 0, sy = 0, stt = 0, sty = 0;
    int cnt = 0;
    for (size_t i = start; i < idx.size(); ++i) {
        const double t = idx[i] * dt;
        st += t, sy += logw[i], stt += t * t, sty += t * logw[i];
        ++cnt;
    }
    res.fit_points = cnt;
    res.decay_rate = cnt >= 3 ? -(cnt * sty - st * sy) / (cnt * stt - st * st) : 0.0;
    return res;
}

}  // namespace rk
