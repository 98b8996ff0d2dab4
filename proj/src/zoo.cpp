#include "renewalkit/zoo.hpp"

#include "renewalkit/kernels.hpp"
#include "renewalkit/phasetype.hpp"
#include "renewalkit/volterra.hpp"

#include <cmath>
#include <complex>
#include <sstream>

namespace rk {

// ---------------------------------------------------------------- kinetic proofreading

double HopfieldParams::xi() const { return std::exp(E1); }
double HopfieldParams::eta() const { return std::exp(E2 - E1); }
double HopfieldParams::zeta() const { return alpha * lambda / (mu * beta * eta()); }

HopfieldParams hopfield_fig4(bool wrong_substrate, double eps, double s) {
    HopfieldParams p;
    p.alpha = eps;
    p.mu = eps;
    p.beta = eps * eps;
    p.Q = 1.0 / (eps * eps);
    p.lambda = 2.0 * eps * eps;
    const double e1 = wrong_substrate ? 8.0 : 2.0;
    const double e2 = (wrong_substrate ? 16.0 : 4.0) / std::pow(eps, s);
    p.E1 = std::log(e1);
    p.E2 = std::log(e2);
    return p;
}

double hopfield_theta(const HopfieldParams& p, const HopfieldParams& bar) { return std::exp(-(bar.E1 - p.E1)); }

ReactionNetwork hopfield_network(const HopfieldParams& p) {
    const double x1 = std::exp(p.E1), x2 = std::exp(p.E2);
    for (double r : {p.k, p.alpha, p.beta, p.Q, p.lambda})
        if (!(r > 0.0)) throw InputError("Hopfield rates k, alpha, beta, Q, lambda must be positive");
    if (p.mu < 0.0) throw InputError("Hopfield degradation rate must be nonnegative");
    return validate_network({"C", "S", "S*", "P", "0"},
                            {{"C", "S", p.k},
                             {"S", "C", p.k * x1},
                             {"C", "S*", p.beta},
                             {"S*", "C", p.beta * x2},
                             {"S", "S*", p.alpha},
                             {"S*", "S", p.alpha / p.Q * x2 / x1},
                             {"C", "0", p.mu},
                             {"S*", "P", p.lambda}});
}

static CompartmentSystem hopfield_system(const HopfieldParams& p) {
    return decompose(hopfield_network(p), {{"C", "S", "S*"}, {"P"}, {"0"}}, {"CSS*", "P", "0"});
}

HopfieldResponse hopfield_response(const HopfieldParams& p, double dt, double t_max) {
    if (dt <= 0.0) throw InputError("dt must be positive");
    const CompartmentSystem sys = hopfield_system(p);
    const Mat B = sys.block(0, 0);
    Eigen::EigenSolver<Mat> es(B);
    const double slow = -es.eigenvalues().real().maxCoeff();
    if (!(slow > 0.0)) throw NumericError("Hopfield compartment has no decaying mode");
    if (t_max <= 0.0) t_max = std::ceil(std::log(1e12) / slow / dt) * dt;

    HopfieldResponse out;
    out.grid = make_grid(t_max, dt);
    const ScalarKernelSet sk = compute_scalar_kernels(sys, out.grid);
    out.phi = sk.Phi(0, 1);
    out.P_quadrature = trapz(out.phi, dt);
    out.mean_quadrature = trapz_first_moment(out.phi, dt) / out.P_quadrature;
    out.tail = out.phi(out.phi.size() - 1) / out.phi.maxCoeff();

    // Laplace transform at z = 0: (-B) x = e_C, (-B) y = x.
    Eigen::FullPivLU<Mat> lu(-B);
    const Vec e = Vec::Unit(3, 0);
    const Vec x = lu.solve(e);
    const Vec y = lu.solve(x);
    out.P_laplace = p.lambda * x(2);
    out.mean_laplace = y(2) / x(2);
    return out;
}

static double hopfield_ratio_formula(const HopfieldParams& p, const HopfieldParams& bar) {
    const double th = hopfield_theta(p, bar), xi = p.xi(), eta = p.eta();
    const double a = p.alpha, b = p.beta, m = p.mu, l = p.lambda, Q = p.Q;
    const double G = (b + m) * l / (m * b * eta) + a / (b * Q) + a;
    const double H = (1.0 + b + m) * a * l / (m * b * eta);
    return th * th * (1.0 + b + b * xi / (a * th)) / (1.0 + b + b * xi / a) * (xi * xi + xi * G + H) /
           (xi * xi + th * xi * G + th * th * H);
}

HopfieldDiscrimination hopfield_discrimination(const HopfieldParams& p, const HopfieldParams& bar, double dt) {
    if (std::abs((p.E1 - p.E2) - (bar.E1 - bar.E2)) > 1e-9)
        throw InputError("Hopfield: E1 - E2 must agree for both substrates");
    if (!(bar.E1 > p.E1)) throw InputError("Hopfield: the wrong substrate needs the larger E1");
    HopfieldDiscrimination d;
    d.theta = hopfield_theta(p, bar);
    d.response = hopfield_response(p, dt);
    d.response_bar = hopfield_response(bar, dt);
    const HopfieldResponse &r = d.response, &rb = d.response_bar;
    d.P = r.P_laplace;
    d.P_bar = rb.P_laplace;
    d.ratio_laplace = rb.P_laplace / r.P_laplace;
    d.ratio_quadrature = rb.P_quadrature / r.P_quadrature;
    d.ratio_formula = hopfield_ratio_formula(p, bar);
    d.P_asymptotic = p.zeta() / (p.xi() * p.xi());

    // Mean times without degradation: int t phi / int phi from (-B)^{-1} and (-B)^{-2}.
    auto mean_time = [](HopfieldParams q) {
        q.mu = 0.0;
        const Mat B = hopfield_system(q).block(0, 0);
        Eigen::FullPivLU<Mat> lu(-B);
        const Vec x = lu.solve(Vec::Unit(3, 0));
        return lu.solve(x)(2) / x(2);
    };
    d.T = mean_time(p);
    d.T_bar = mean_time(bar);
    d.time_ratio = d.T / d.T_bar;

    // One barrier only: C <-> S* -> P.
    auto single = [](HopfieldParams q) {
        const double x2 = std::exp(q.E2);
        Mat A(2, 2);
        A << -(q.beta + q.mu), q.beta * x2, q.beta, -(q.beta * x2 + q.lambda);
        const Vec x = Eigen::FullPivLU<Mat>(-A).solve(Vec::Unit(2, 0));
        return q.lambda * x(1);
    };
    d.single_step_ratio = single(bar) / single(p);
    return d;
}

// ---------------------------------------------------------------- linear polymerization

PolymerFront polymer_front(const Series& psi, const TimeGrid& grid, int L_max) {
    if (L_max < 2) throw InputError("L_max must be at least 2");
    if (psi.size() != grid.nodes()) throw InputError("kernel samples do not match the grid");
    const double dt = grid.dt;
    const int nn = grid.nodes();
    PolymerFront out;
    out.grid = grid;
    const double mass = trapz(psi, dt);
    const Series k = psi / mass;
    out.mean = trapz_first_moment(k, dt);

    KernelMatrix W(1, 1);
    W.at(0, 0) = k;
    Mat I = Mat::Ones(nn, 1);
    out.n.resize(nn, L_max);
    for (int l = 1; l <= L_max; ++l) {
        Mat next = convolve_trapezoid(W, I, dt);
        const Series diff = I.col(0) - next.col(0);
        out.n.col(l - 1) = cumtrapz(diff, dt);
        I = std::move(next);
    }

    const double thr = 0.5 * out.mean;
    out.front.assign(nn, 0);
    for (int i = 0; i < nn; ++i) {
        for (int l = L_max; l >= 1; --l) {
            if (out.n(i, l - 1) >= thr) {
                out.front[i] = l;
                break;
            }
        }
    }
    // least-squares slope over t in [t_max/2, t_max]
    double st = 0, sl = 0, stt = 0, stl = 0;
    int cnt = 0;
    for (int i = nn / 2; i < nn; ++i) {
        const double t = grid.t(i), l = out.front[i];
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
        ++cnt;
    }
    out.speed = (cnt * stl - st * sl) / (cnt * stt - st * st);
    const int lf = out.front[nn - 1];
    out.boundary_reached = lf >= L_max - 1;
    out.plateau = out.n(nn - 1, std::max(0, lf / 2 - 1));
    return out;
}

// ---------------------------------------------------------------- adaptation

AdaptationResponse adaptation_response(double a, double b, const TimeGrid& grid,
                                       const std::function<double(double)>& signal) {
    if (!(a > 0.0 && b > 0.0)) throw InputError("adaptation needs a, b > 0");
    const double disc = b * b - 4.0 * a;
    if (std::abs(disc) <= 1e-12 * b * b) throw InputError("adaptation: degenerate spectrum b^2 = 4a");
    using C = std::complex<double>;
    const C root = std::sqrt(C(disc, 0.0));
    const C lp = 0.5 * (-b + root), lm = 0.5 * (-b - root);
    AdaptationResponse out;
    out.grid = grid;
    out.lambda_plus = lp.real();
    out.lambda_minus = lm.real();
    const int nn = grid.nodes();
    out.phi.resize(nn);
    for (int i = 0; i < nn; ++i) {
        const double t = grid.t(i);
        out.phi(i) = (b / root * (lp * std::exp(lp * t) - lm * std::exp(lm * t))).real();
    }
    out.integral = (b / root * (std::exp(lp * grid.t_max) - std::exp(lm * grid.t_max))).real();

    KernelMatrix W(1, 1);
    W.at(0, 0) = out.phi;
    Mat u(nn, 1);
    for (int i = 0; i < nn; ++i) u(i, 0) = signal(grid.t(i)) - b;
    const Mat conv = convolve_trapezoid(W, u, grid.dt);
    out.X = Series::Ones(nn) + conv.col(0) / b;
    return out;
}

// ---------------------------------------------------------------- feed-forward loop

namespace {

// (1 - e^{-k x}) / k, continuous at k = 0.
double expm1_ratio(double k, double x) {
    const double y = k * x;
    if (std::abs(y) < 1e-8) return x * (1.0 - 0.5 * y);
    return -std::expm1(-y) / k;
}

void rk4_ffl(double a, double b, double c, double t0, double h, double S0, double Sh, double& X, double& Y,
             double& Z) {
    auto f = [&](double s, double x, double y, double z, double& dx, double& dy, double& dz) {
        dx = s - a * x;
        dy = x - b * y;
        dz = x * y - c * z;
    };
    (void)t0;
    const double Sm = 0.5 * (S0 + Sh);
    double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z;
    f(S0, X, Y, Z, k1x, k1y, k1z);
    f(Sm, X + 0.5 * h * k1x, Y + 0.5 * h * k1y, Z + 0.5 * h * k1z, k2x, k2y, k2z);
    f(Sm, X + 0.5 * h * k2x, Y + 0.5 * h * k2y, Z + 0.5 * h * k2z, k3x, k3y, k3z);
    f(Sh, X + h * k3x, Y + h * k3y, Z + h * k3z, k4x, k4y, k4z);
    X += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    Y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    Z += h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z);
}

}  // namespace

double ffl_kernel(double a, double b, double c, double eta, double xi) {
    if (eta < 0.0 || xi < 0.0) return 0.0;
    const double m = std::min(eta, xi);
    const double pre = std::exp(-a * (eta + xi));
    const double d = b - a;
    if (std::abs(d) < 1e-9) {
        // (1 - e^{-d(xi+s)})/d -> xi + s
        const double k = c - 2.0 * a;
        const double e0 = expm1_ratio(k, m);
        // int_{-m}^0 s e^{k s} ds
        double e1;
        if (std::abs(k * m) < 1e-6) e1 = -0.5 * m * m + k * m * m * m / 3.0;
        else e1 = -1.0 / (k * k) + std::exp(-k * m) * (m / k + 1.0 / (k * k));
        return pre * (xi * e0 + e1);
    }
    const double i1 = expm1_ratio(c - 2.0 * a, m);
    const double i2 = expm1_ratio(c - a - b, m);
    return pre / d * (i1 - std::exp(-d * xi) * i2);
}

FflResponse ffl_response(double a, double b, double c, const TimeGrid& grid,
                         const std::function<double(double)>& signal, int samples) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw InputError("FFL needs a, b, c > 0");
    FflResponse out;
    out.grid = grid;
    const int nn = grid.nodes();
    const double dt = grid.dt;
    out.X = Series::Zero(nn);
    out.Y = Series::Zero(nn);
    out.Z = Series::Zero(nn);
    const int sub = std::max(1, static_cast<int>(std::ceil(dt * std::max({a, b, c}) / 0.25)));
    const double h = dt / sub;
    double X = 0, Y = 0, Z = 0;
    for (int i = 0; i < grid.n; ++i) {
        for (int s = 0; s < sub; ++s) {
            const double t = grid.t(i) + s * h;
            rk4_ffl(a, b, c, t, h, signal(t), signal(t + h), X, Y, Z);
        }
        out.X(i + 1) = X;
        out.Y(i + 1) = Y;
        out.Z(i + 1) = Z;
    }

    // K depends on (n - i, n - j) only: tabulate once.
    Mat K(nn, nn);
    parallel_for(nn, [&](int p) {
        for (int q = 0; q < nn; ++q) K(p, q) = ffl_kernel(a, b, c, p * dt, q * dt);
    });
    Vec S(nn);
    for (int i = 0; i < nn; ++i) S(i) = signal(grid.t(i));

    if (samples <= 0 || samples >= nn) {
        for (int i = 0; i < nn; ++i) out.kernel_nodes.push_back(i);
    } else {
        for (int k = 0; k <= samples; ++k) out.kernel_nodes.push_back(static_cast<int>(std::lround(double(k) * grid.n / samples)));
    }
    out.Z_kernel = Series::Zero(out.kernel_nodes.size());
    parallel_for(static_cast<int>(out.kernel_nodes.size()), [&](int k) {
        const int n = out.kernel_nodes[k];
        if (n == 0) return;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
            double row = 0.0;
            for (int j = 0; j <= n; ++j) {
                const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
                row += wj * K(n - i, n - j) * S(j);
            }
            acc += wi * S(i) * row;
        }
        out.Z_kernel(k) = acc * dt * dt;
    });
    out.max_deviation = 0.0;
    for (size_t k = 0; k < out.kernel_nodes.size(); ++k)
        out.max_deviation = std::max(out.max_deviation, std::abs(out.Z_kernel(k) - out.Z(out.kernel_nodes[k])));
    return out;
}

FflLimitCheck ffl_limit_check(double a, double b, double c, double t_off, double delta_tau) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw InputError("FFL needs a, b, c > 0");
    FflLimitCheck r{a, b, c, t_off, delta_tau};
    // tau = b t; signal S = 1 on [0, t_off / b], 0 afterwards.
    const double T_off = t_off / b, T_end = (t_off + delta_tau) / b;
    const double h = std::min(0.1 / std::max({a, b, c}), delta_tau / b / 50.0);
    const double Sm = 1.0, scale = a * a * b * c / (Sm * Sm);
    double X = 0, Y = 0, Z = 0, t = 0.0;
    r.step_on_error = 0.0;
    const int n_on = static_cast<int>(std::ceil(T_off / h));
    const double h_on = T_off / n_on;
    for (int i = 0; i < n_on; ++i) {
        rk4_ffl(a, b, c, t, h_on, 1.0, 1.0, X, Y, Z);
        t = (i + 1) * h_on;
        const double tau = b * t;
        if (tau >= 1.0) r.step_on_error = std::max(r.step_on_error, std::abs(scale * Z - (1.0 - std::exp(-tau))));
    }
    r.response_before = scale * Z;
    r.limit_before = 1.0 - std::exp(-t_off);
    const int n_off = static_cast<int>(std::ceil((T_end - T_off) / h));
    const double h_off = (T_end - T_off) / n_off;
    for (int i = 0; i < n_off; ++i) rk4_ffl(a, b, c, t, h_off, 0.0, 0.0, X, Y, Z);
    r.response_after = scale * Z;
    return r;
}

// ---------------------------------------------------------------- nonlinear polymerization

namespace {

Vec initial_sizes(const Vec& n0, int L_max) {
    if (n0.size() == 0) return Vec::Zero(L_max);
    if (n0.size() > L_max) throw InputError("initial data longer than L_max");
    Vec v = Vec::Zero(L_max);
    v.head(n0.size()) = n0;
    if (v.minCoeff() < 0.0) throw InputError("initial data must be nonnegative");
    return v;
}

// Fragmentation and binding terms shared by both models; inflow[l] is the flux into size l.
void polymer_rhs(const Vec& n, const Vec& inflow, double S, Vec& dn) {
    const int L = static_cast<int>(n.size());
    dn.setZero(L);
    const double n1 = n(0);
    double dn1 = S - (L >= 2 ? 2.0 * n1 * n1 : 0.0);
    if (L >= 2) dn1 += 2.0 * n(1);
    for (int l = 2; l <= L; ++l) {
        const double nl = n(l - 1);
        const bool bind = l < L;
        if (bind && l >= 2) dn1 -= n1 * nl;
        if (l >= 3) dn1 += nl;  // n_{l} with l >= 3 releases one monomer
        double d = -nl + inflow(l - 1);
        if (bind) d -= n1 * nl;
        if (l < L) d += n(l);
        dn(l - 1) = d;
    }
    dn(0) = dn1;
}

double polymer_mass(const Vec& n, const Vec& w) {
    double m = 0.0;
    for (int l = 1; l <= n.size(); ++l) m += l * (n(l - 1) + w(l - 1));
    return m;
}

}  // namespace

NonlinearPolymer nonlinear_polymer(const Series& psi, const std::function<double(double)>& source,
                                   const TimeGrid& grid, int L_max, const Vec& n0) {
    if (L_max < 2) throw InputError("L_max must be at least 2");
    if (psi.size() < grid.nodes()) throw InputError("kernel samples shorter than the grid");
    const int nn = grid.nodes();
    const double dt = grid.dt;
    NonlinearPolymer out;
    out.grid = grid;
    out.n = Mat::Zero(nn, L_max);
    out.w = Mat::Zero(nn, L_max);
    out.mass = Series::Zero(nn);
    Vec n = initial_sizes(n0, L_max), w = Vec::Zero(L_max);
    // g(j, l-1) = n_1 n_{l-1} at node j, l = 2..L_max
    Mat g = Mat::Zero(nn, L_max);
    out.n.row(0) = n.transpose();
    out.mass(0) = polymer_mass(n, w);
    double injected = 0.0;
    Vec I(L_max), dn(L_max);
    for (int k = 0; k < grid.n; ++k) {
        for (int l = 2; l <= L_max; ++l) g(k, l - 1) = n(0) * n(l - 2);
        I.setZero();
        for (int l = 2; l <= L_max; ++l) {
            double acc = 0.0;
            for (int j = 0; j <= k; ++j) {
                const double wj = (j == 0 || j == k) ? 0.5 : 1.0;
                acc += wj * psi(k - j) * g(j, l - 1);
            }
            I(l - 1) = k == 0 ? 0.0 : acc * dt;
        }
        const double S = source(grid.t(k));
        polymer_rhs(n, I, S, dn);
        Vec dw = Vec::Zero(L_max);
        for (int l = 2; l <= L_max; ++l) dw(l - 1) = g(k, l - 1) - I(l - 1);
        n += dt * dn;
        w += dt * dw;
        injected += dt * S;
        const double floor = -1e-12 * std::max(1.0, n.cwiseAbs().maxCoeff());
        if (n.minCoeff() < floor || w.minCoeff() < floor) {
            // per-capita loss rate bound of the explicit scheme
            const double rate = 1.0 + 4.0 * std::abs(n(0)) + n.cwiseAbs().sum();
            std::ostringstream os;
            os << "nonlinear polymer: negative state at t = " << grid.t(k + 1) << "; step too large, suggested dt <= "
               << 0.5 / rate;
            throw NumericError(os.str());
        }
        out.n.row(k + 1) = n.transpose();
        out.w.row(k + 1) = w.transpose();
        out.mass(k + 1) = polymer_mass(n, w);
        out.mass_residual = std::max(out.mass_residual, std::abs(out.mass(k + 1) - out.mass(0) - injected));
    }
    return out;
}

NonlinearPolymer becker_doring(const std::function<double(double)>& source, const TimeGrid& grid, int L_max,
                               const Vec& n0) {
    if (L_max < 2) throw InputError("L_max must be at least 2");
    const int nn = grid.nodes();
    const double dt = grid.dt;
    NonlinearPolymer out;
    out.grid = grid;
    out.n = Mat::Zero(nn, L_max);
    out.w = Mat::Zero(nn, L_max);
    out.mass = Series::Zero(nn);
    Vec n = initial_sizes(n0, L_max);
    auto f = [&](double t, const Vec& x) {
        Vec in = Vec::Zero(L_max), d;
        for (int l = 2; l <= L_max; ++l) in(l - 1) = x(0) * x(l - 2);
        polymer_rhs(x, in, source(t), d);
        return d;
    };
    out.n.row(0) = n.transpose();
    out.mass(0) = polymer_mass(n, Vec::Zero(L_max));
    for (int k = 0; k < grid.n; ++k) {
        const double t = grid.t(k);
        const Vec k1 = f(t, n);
        const Vec k2 = f(t + 0.5 * dt, n + 0.5 * dt * k1);
        const Vec k3 = f(t + 0.5 * dt, n + 0.5 * dt * k2);
        const Vec k4 = f(t + dt, n + dt * k3);
        n += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        out.n.row(k + 1) = n.transpose();
        out.mass(k + 1) = polymer_mass(n, Vec::Zero(L_max));
    }
    return out;
}

// ---------------------------------------------------------------- presets

std::vector<std::string> preset_names() {
    return {"hopfield-fig4", "polymer-front", "adaptation", "ffl-fig6", "nonlinear-polymer"};
}

static Series sample_erlang(double rate, int m, const TimeGrid& g) {
    Series s(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) s(i) = erlang_density(rate, m, g.t(i));
    return s;
}

PresetReport run_preset(const std::string& name) {
    PresetReport rep;
    rep.name = name;
    auto row = [&](const std::string& claim, double target, double measured, bool ok) {
        rep.rows.push_back({claim, target, measured, ok});
    };
    if (name == "hopfield-fig4") {
        const HopfieldParams p = hopfield_fig4(false), bar = hopfield_fig4(true);
        const HopfieldDiscrimination d = hopfield_discrimination(p, bar);
        const double th2 = d.theta * d.theta;
        row("discrimination ratio Pbar/P (theta^2)", th2, d.ratio_laplace,
            std::abs(d.ratio_laplace / th2 - 1.0) <= 0.15 && d.ratio_laplace >= th2);
        row("ratio by quadrature", th2, d.ratio_quadrature, std::abs(d.ratio_quadrature / th2 - 1.0) <= 0.15);
        row("ratio by closed expression", d.ratio_laplace, d.ratio_formula,
            std::abs(d.ratio_formula / d.ratio_laplace - 1.0) <= 1e-6);
        row("P_inf (eps^s / xi^2)", d.P_asymptotic, d.P, std::abs(d.P / d.P_asymptotic - 1.0) <= 0.15);
        const HopfieldResponse& r = d.response;
        row("P_inf quadrature vs Laplace", r.P_laplace, r.P_quadrature, std::abs(r.P_quadrature - r.P_laplace) <= 1e-6);
        row("mean time ratio T/Tbar, mu = 0 (theta^2, 20% band)", th2, d.time_ratio,
            std::abs(d.time_ratio / th2 - 1.0) <= 0.2);
        row("single-step ratio (theta)", d.theta, d.single_step_ratio,
            std::abs(d.single_step_ratio / d.theta - 1.0) <= 0.15);
        const int stride = std::max(1, r.grid.n / 2000);
        Mat tab((r.grid.nodes() - 1) / stride + 1, 2);
        for (int i = 0, k = 0; i < r.grid.nodes(); i += stride, ++k) tab.row(k) << r.grid.t(i), r.phi(i);
        rep.tables.push_back({"phi", tab});
        rep.headers.push_back({"t", "phi"});
    } else if (name == "polymer-front") {
        const TimeGrid g = make_grid(200.0, 0.01);
        struct K {
            const char* label;
            double rate;
            int m;
        };
        for (const K& k : {K{"exponential", 1.0, 0}, K{"erlang2", 2.0, 1}, K{"erlang5", 5.0, 4}}) {
            const PolymerFront f = polymer_front(sample_erlang(k.rate, k.m, g), g, 260);
            row(std::string("front speed, ") + k.label + " (1/mu)", 1.0 / f.mean, f.speed,
                std::abs(f.speed * f.mean - 1.0) <= 0.05 && !f.boundary_reached);
            row(std::string("plateau, ") + k.label + " (mu)", f.mean, f.plateau,
                std::abs(f.plateau / f.mean - 1.0) <= 0.05);
            const int stride = 100;
            Mat tab(g.n / stride + 1, 2);
            for (int i = 0, r = 0; i < g.nodes(); i += stride, ++r) tab.row(r) << g.t(i), f.front[i];
            rep.tables.push_back({std::string("front_") + k.label, tab});
            rep.headers.push_back({"t", "front"});
        }
    } else if (name == "adaptation") {
        const TimeGrid g = make_grid(40.0, 1e-3);
        for (auto [a, b] : {std::pair{1.0, 3.0}, std::pair{2.0, 3.0}}) {
            const AdaptationResponse r = adaptation_response(a, b, g, [b = b](double) { return 2.0 * b; });
            double dev = 0.0;
            for (int i = 0; i < g.nodes(); ++i)
                if (g.t(i) >= 20.0) dev = std::max(dev, std::abs(r.X(i) - 1.0));
            std::ostringstream tag;
            tag << "a=" << a << ", b=" << b;
            row("phi(0) = b, " + tag.str(), b, r.phi(0), std::abs(r.phi(0) - b) <= 1e-12);
            row("|int_0^40 phi|, " + tag.str(), 1e-6, std::abs(r.integral), std::abs(r.integral) <= 1e-6);
            row("sup_{t>=20} |X - 1| under s = 2b, " + tag.str(), 1e-4, dev, dev <= 1e-4);
            const int stride = 100;
            Mat tab(g.n / stride + 1, 3);
            for (int i = 0, k = 0; i < g.nodes(); i += stride, ++k) tab.row(k) << g.t(i), r.phi(i), r.X(i);
            std::ostringstream file;
            file << "a" << a << "_b" << b;
            rep.tables.push_back({file.str(), tab});
            rep.headers.push_back({"t", "phi", "X"});
        }
    } else if (name == "ffl-fig6") {
        const TimeGrid g = make_grid(10.0, 0.01);
        const FflResponse r = ffl_response(5.0, 1.0, 5.0, g, [](double t) { return 1.0 + 0.5 * std::sin(t); });
        row("sup |Z_kernel - Z_ode| (5 dt)", 5.0 * g.dt, r.max_deviation, r.max_deviation <= 5.0 * g.dt);
        double kmin = 0.0;
        for (int p = 0; p <= 200; ++p)
            for (int q = 0; q <= 200; ++q) kmin = std::min(kmin, ffl_kernel(5.0, 1.0, 5.0, 0.02 * p, 0.02 * q));
        row("min K(eta, xi) on [0,4]^2", 0.0, kmin, kmin >= 0.0);
        const FflLimitCheck lc = ffl_limit_check(1000.0, 1.0, 1000.0);
        row("step-on: sup |xi - (1 - e^{-tau})|, tau in [1,3]", 0.0, lc.step_on_error, lc.step_on_error <= 0.01);
        row("step-off: xi at tau_off + 0.01", 1e-3, lc.response_after, lc.response_after <= 1e-3);
        Mat tab(r.kernel_nodes.size(), 3);
        for (size_t k = 0; k < r.kernel_nodes.size(); ++k)
            tab.row(k) << g.t(r.kernel_nodes[k]), r.Z(r.kernel_nodes[k]), r.Z_kernel(k);
        rep.tables.push_back({"ffl_z", tab});
        rep.headers.push_back({"t", "Z_ode", "Z_kernel"});
    } else if (name == "nonlinear-polymer") {
        const TimeGrid g = make_grid(5.0, 1e-3);
        const auto src = [](double) { return 1.0; };
        const NonlinearPolymer np = nonlinear_polymer(sample_erlang(200.0, 1, g), src, g, 12);
        const NonlinearPolymer bd = becker_doring(src, g, 12);
        const double dev = (np.n - bd.n).cwiseAbs().maxCoeff();
        row("mass identity residual (10 dt per unit time)", 10.0 * g.dt * g.t_max, np.mass_residual,
            np.mass_residual <= 10.0 * g.dt * g.t_max);
        row("narrow kernel vs Becker-Doring, sup |n - n_BD| (kernel mean 0.01)", 0.01, dev, dev <= 0.05);
        const int stride = 50;
        Mat tab(g.n / stride + 1, 4);
        for (int i = 0, k = 0; i < g.nodes(); i += stride, ++k) tab.row(k) << g.t(i), np.n(i, 0), np.n(i, 1), np.mass(i);
        rep.tables.push_back({"nonlinear_polymer", tab});
        rep.headers.push_back({"t", "n1", "n2", "mass"});
    } else {
        throw InputError("unknown preset '" + name + "'");
    }
    return rep;
}

}  // namespace rk
