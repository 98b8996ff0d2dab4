#include "renewalkit/phasetype.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace rk {

namespace {

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, del = 1.0 / a, sum = del;
        for (int it = 0; it < 100000; ++it) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return std::min(1.0, sum * std::exp(-x + a * std::log(x) - lg));
    }
    // Lentz continued fraction for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::max(0.0, 1.0 - std::exp(-x + a * std::log(x) - lg) * h);
}

// Integral of the linear interpolant of the density over [0, x].
double density_cdf(const Series& f, double dt, double x) {
    const Eigen::Index n = f.size();
    if (n < 2 || x <= 0.0) return 0.0;
    const double end = (n - 1) * dt;
    if (x >= end) return trapz(f, dt);
    const Eigen::Index k = static_cast<Eigen::Index>(std::floor(x / dt));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) acc += 0.5 * dt * (f(i) + f(i + 1));
    const double u = x - k * dt;
    const double slope = (f(k + 1) - f(k)) / dt;
    return acc + f(k) * u + 0.5 * slope * u * u;
}

double erlang_end(const TargetMeasure::Erlang& e) {
    const double a = e.m + 1.0;
    return (a + 40.0 * std::sqrt(a) + 40.0) / e.rate;
}

// Concave piecewise-linear function on [-B, B]: segments keyed by stored slope
// (actual slope = stored + offset), sorted by decreasing slope.
struct ConcavePL {
    std::map<double, double, std::greater<double>> seg;
    double offset = 0.0;
    double v_left = 0.0;  // value at -B

    void window(double c) {
        double removed = 0.0;
        double rem = c;
        while (rem > 0.0 && !seg.empty()) {
            auto it = seg.begin();
            const double s = it->first + offset;
            if (s <= 0.0) break;
            const double take = std::min(rem, it->second);
            v_left += s * take;
            it->second -= take;
            rem -= take;
            removed += take;
            if (it->second <= 0.0) seg.erase(it);
        }
        rem = c;
        while (rem > 0.0 && !seg.empty()) {
            auto it = std::prev(seg.end());
            const double s = it->first + offset;
            if (s >= 0.0) break;
            const double take = std::min(rem, it->second);
            it->second -= take;
            rem -= take;
            removed += take;
            if (it->second <= 0.0) seg.erase(it);
        }
        if (removed > 0.0) seg[-offset] += removed;
    }

    double maximum() const {
        double v = v_left, best = v_left;
        for (const auto& [k, len] : seg) {
            v += (k + offset) * len;
            best = std::max(best, v);
        }
        return best;
    }
};

// max <sigma, phi> over |phi| <= 1 - L, |phi_{i+1} - phi_i| <= L h.
double bl_fixed(const Vec& sigma, double h, double L) {
    const double B = 1.0 - L;
    if (B <= 0.0 || sigma.size() == 0) return 0.0;
    ConcavePL V;
    V.offset = sigma(0);
    V.seg[0.0] = 2.0 * B;
    V.v_left = -sigma(0) * B;
    const double c = L * h;
    for (Eigen::Index i = 1; i < sigma.size(); ++i) {
        V.window(c);
        V.offset += sigma(i);
        V.v_left -= sigma(i) * B;
    }
    return V.maximum();
}

}  // namespace

double erlang_density(double rate, int m, double t) {
    if (t < 0.0) return 0.0;
    if (t == 0.0) return m == 0 ? rate : 0.0;
    return std::exp((m + 1) * std::log(rate) + m * std::log(t) - rate * t - std::lgamma(m + 1.0));
}

double erlang_cdf(double rate, int m, double x) { return gamma_p(m + 1.0, rate * x); }

double TargetMeasure::mass() const {
    double s = 0.0;
    for (const auto& [x, w] : atoms) s += w;
    if (density.size() >= 2) s += trapz(density, density_dt);
    for (const auto& e : erlangs) s += e.mass;
    return s;
}

double TargetMeasure::cdf(double x) const {
    if (x < 0.0) return 0.0;
    double s = 0.0;
    for (const auto& [loc, w] : atoms)
        if (loc <= x) s += w;
    if (density.size() >= 2) s += density_cdf(density, density_dt, x);
    for (const auto& e : erlangs) s += e.mass * erlang_cdf(e.rate, e.m, x);
    return s;
}

double TargetMeasure::support_end() const {
    double end = 0.0;
    for (const auto& [loc, w] : atoms)
        if (w > 0.0) end = std::max(end, loc);
    if (density.size() >= 2) end = std::max(end, (density.size() - 1) * density_dt);
    for (const auto& e : erlangs) end = std::max(end, erlang_end(e));
    return end;
}

double TargetMeasure::quantile(double q) const {
    const double total = mass();
    if (total <= 0.0) throw InputError("quantile of a zero measure");
    double lo = 0.0, hi = std::max(support_end(), 1e-12);
    if (cdf(0.0) >= q * total) return 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) >= q * total) hi = mid;
        else lo = mid;
    }
    return hi;
}

TargetMeasure uniform_target(double a, double b, double mass, double dt) {
    if (!(a >= 0.0 && b > a) || dt <= 0.0) throw InputError("uniform target needs 0 <= a < b");
    // Ramps of width dt at a and b; rescaled so the interpolant carries exactly `mass`.
    const int n = static_cast<int>(std::ceil(b / dt)) + 2;
    Series f = Series::Zero(n);
    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        // cell average over [t - dt/2, t + dt/2]
        const double lo = std::max(t - 0.5 * dt, a), hi = std::min(t + 0.5 * dt, b);
        if (hi > lo) f(i) = (hi - lo) / dt;
    }
    TargetMeasure t;
    t.density = f * (mass / trapz(f, dt));
    t.density_dt = dt;
    return t;
}

TargetMeasure point_target(double x, double mass) {
    if (x < 0.0 || mass < 0.0) throw InputError("point target needs x >= 0 and mass >= 0");
    TargetMeasure t;
    t.atoms.push_back({x, mass});
    return t;
}

TargetMeasure erlang_target(double rate, int m, double mass) {
    if (rate <= 0.0 || m < 0) throw InputError("Erlang target needs rate > 0 and m >= 0");
    TargetMeasure t;
    t.erlangs.push_back({rate, m, mass});
    return t;
}

TargetMeasure kernel_target(const Series& samples, double dt) {
    if (dt <= 0.0) throw InputError("kernel target needs dt > 0");
    TargetMeasure t;
    t.density = samples.cwiseMax(0.0);
    t.density_dt = dt;
    return t;
}

GridMeasure bin_measure(const TargetMeasure& mu, double h, int nodes) {
    if (h <= 0.0 || nodes < 2) throw InputError("bin_measure needs h > 0 and at least two nodes");
    GridMeasure g;
    g.h = h;
    g.w = Vec::Zero(nodes);
    auto node_of = [&](double x) {
        const long k = std::lround(x / h);
        return static_cast<int>(std::clamp<long>(k, 0, nodes - 1));
    };
    for (const auto& [x, w] : mu.atoms) g.w(node_of(x)) += w;
    if (mu.density.size() >= 2) {
        double prev = 0.0;
        for (int i = 0; i < nodes; ++i) {
            const double up = (i == nodes - 1) ? std::numeric_limits<double>::infinity() : (i + 0.5) * h;
            const double c = density_cdf(mu.density, mu.density_dt, up);
            g.w(i) += c - prev;
            prev = c;
        }
    }
    // Erlang components: cdf differences only inside a window around the bulk.
    for (const auto& e : mu.erlangs) {
        const double a = e.m + 1.0;
        const double lo_x = std::max(0.0, (a - 40.0 * std::sqrt(a) - 40.0) / e.rate);
        const double hi_x = erlang_end(e);
        const int i0 = std::max(0, static_cast<int>(std::floor(lo_x / h - 0.5)));
        const int i1 = std::min(nodes - 1, static_cast<int>(std::ceil(hi_x / h + 0.5)));
        double prev = i0 == 0 ? 0.0 : erlang_cdf(e.rate, e.m, (i0 - 0.5) * h);
        for (int i = i0; i <= i1; ++i) {
            const double c = (i == nodes - 1) ? 1.0 : erlang_cdf(e.rate, e.m, (i + 0.5) * h);
            g.w(i) += e.mass * (c - prev);
            prev = c;
        }
        if (i1 < nodes - 1) g.w(i1) += e.mass * (1.0 - prev);
    }
    return g;
}

double bl_distance(const GridMeasure& mu, const GridMeasure& nu) {
    if (std::abs(mu.h - nu.h) > 1e-12 * std::max(mu.h, nu.h))
        throw InputError("bl_distance: measures live on different grids");
    const Eigen::Index n = std::max(mu.w.size(), nu.w.size());
    Vec sigma = Vec::Zero(n);
    sigma.head(mu.w.size()) += mu.w;
    sigma.head(nu.w.size()) -= nu.w;
    // The optimum over L is concave in L: golden-section search.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = 1.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = bl_fixed(sigma, mu.h, x1), f2 = bl_fixed(sigma, mu.h, x2);
    for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = bl_fixed(sigma, mu.h, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = bl_fixed(sigma, mu.h, x1);
        }
    }
    return std::max({f1, f2, bl_fixed(sigma, mu.h, 0.0)});
}

double bl_distance(const TargetMeasure& mu, const TargetMeasure& nu, int nodes) {
    const double ma = mu.mass(), mb = nu.mass();
    if (ma <= 0.0 || mb <= 0.0) throw InputError("bl_distance: zero-mass measure");
    const double X = std::max({mu.support_end(), nu.support_end(), 1e-9});
    const double h = X / (nodes - 1);
    GridMeasure a = bin_measure(mu, h, nodes), b = bin_measure(nu, h, nodes);
    a.w /= ma;
    b.w /= mb;
    return bl_distance(a, b);
}

TargetMeasure mixture_measure(const ErlangFit& fit, double mass) {
    TargetMeasure t;
    for (const auto& br : fit.branches) t.erlangs.push_back({fit.rate, br.m, mass * br.q});
    return t;
}

ErlangFit erlang_cells(const TargetMeasure& target, int M, double scale, double tail_fold) {
    if (M < 1 || scale <= 0.0) throw InputError("erlang_cells needs M >= 1 and scale > 0");
    const double total = target.mass();
    if (total <= 0.0) throw InputError("erlang_cells: zero-mass target");
    ErlangFit fit;
    fit.M = M;
    fit.scale = scale;
    fit.rate = M / scale;
    const double width = scale / M;
    const int J = std::max(1, static_cast<int>(std::ceil(target.support_end() / width - 1e-9)));
    std::vector<double> q(J);
    double prev = 0.0;
    for (int j = 1; j <= J; ++j) {
        const double c = (j == J) ? total : target.cdf(j * width);
        q[j - 1] = std::max(0.0, c - prev);
        prev = std::max(prev, c);
    }
    // Fold the far tail into one cell: moving mass w shifts a bounded-Lipschitz integral by at most 2w,
    // and each dropped cell j would otherwise cost a chain of j states.
    if (tail_fold > 0.0) {
        double tail = 0.0;
        int last = J;
        while (last > 1 && tail + q[last - 1] <= tail_fold * total) tail += q[--last];
        if (last < J) {
            q[last - 1] += tail;
            q.resize(last);
        }
    }
    const int kept_cells = static_cast<int>(q.size());
    double kept = 0.0;
    for (int j = 1; j <= kept_cells; ++j)
        if (q[j - 1] / total >= 1e-12) kept += q[j - 1];
    for (int j = 1; j <= kept_cells; ++j)
        if (q[j - 1] / total >= 1e-12) fit.branches.push_back({q[j - 1] / kept, j});
    return fit;
}

static bool single_erlang(const TargetMeasure& t) {
    return t.atoms.empty() && t.density.size() < 2 && t.erlangs.size() == 1;
}

ErlangFit fit_erlang_mixture(const TargetMeasure& target, double eps, int M_cap) {
    if (eps <= 0.0) throw InputError("eps must be positive");
    if (single_erlang(target)) {
        const auto& e = target.erlangs[0];
        ErlangFit fit;
        fit.M = 1;
        fit.rate = e.rate;
        fit.scale = 1.0 / e.rate;
        fit.branches.push_back({1.0, e.m});
        fit.exact = fit.attained = true;
        return fit;
    }
    const double s = target.quantile(0.999);
    if (s <= 0.0) throw InputError("target is concentrated at zero; no Erlang approximation");
    ErlangFit best;
    for (int M = 1; M <= M_cap; M *= 2) {
        ErlangFit fit = erlang_cells(target, M, s, 0.1 * eps);
        fit.distance = bl_distance(mixture_measure(fit), target);
        best = fit;
        if (fit.distance <= eps) {
            best.attained = true;
            break;
        }
    }
    return best;
}

PhaseTypeModel fit_phase_type(const std::vector<std::string>& compartments, const std::vector<PairTarget>& targets,
                              double eps, int M_cap) {
    if (eps <= 0.0) throw InputError("eps must be positive");
    auto known = [&](const std::string& n) {
        return std::find(compartments.begin(), compartments.end(), n) != compartments.end();
    };
    std::map<std::string, double> out_mass;
    for (const auto& t : targets) {
        if (!known(t.alpha) || !known(t.beta)) throw InputError("target pair references unknown compartment");
        if (t.alpha == t.beta) throw InputError("target pair " + t.alpha + "->" + t.beta + " is a self transition");
        out_mass[t.alpha] += t.target.mass();
    }
    for (const auto& [a, m] : out_mass)
        if (m > 1.0 + 1e-9) throw InputError("compartment " + a + ": outgoing kernel masses exceed 1");

    PhaseTypeModel model;
    model.compartments = compartments;

    std::vector<const PairTarget*> active;
    for (const auto& t : targets)
        if (t.target.mass() > 0.0) active.push_back(&t);

    auto emit = [&](int M, double rate, const std::vector<ErlangFit>& fits) {
        model.M = M;
        model.rate = rate;
        model.pairs.clear();
        model.total_distance = 0.0;
        for (const auto& t : targets) {
            PhaseTypePair pp{t.alpha, t.beta, t.target.mass(), {}, 0.0};
            for (size_t k = 0; k < active.size(); ++k) {
                if (active[k] == &t) {
                    pp.branches = fits[k].branches;
                    pp.distance = fits[k].distance;
                }
            }
            model.total_distance += pp.distance;
            model.pairs.push_back(std::move(pp));
        }
    };

    if (active.empty()) {
        emit(1, 1.0, {});
        model.attained = true;
        return model;
    }

    // Exact case: every target is one Erlang law and all share a rate.
    bool exact = true;
    for (auto* t : active)
        exact = exact && single_erlang(t->target) && t->target.erlangs[0].rate == active[0]->target.erlangs[0].rate;
    if (exact) {
        std::vector<ErlangFit> fits;
        for (auto* t : active) fits.push_back(fit_erlang_mixture(t->target, eps, M_cap));
        emit(1, fits[0].rate, fits);
        model.attained = true;
        return model;
    }

    double s = 0.0;
    for (auto* t : active) s = std::max(s, t->target.quantile(0.999));
    if (s <= 0.0) throw InputError("targets are concentrated at zero; no Erlang approximation");
    for (int M = 1; M <= M_cap; M *= 2) {
        std::vector<ErlangFit> fits(active.size());
        parallel_for(static_cast<int>(active.size()), [&](int k) {
            fits[k] = erlang_cells(active[k]->target, M, s, 0.1 * eps / static_cast<double>(active.size()));
            fits[k].distance = bl_distance(mixture_measure(fits[k]), active[k]->target);
        });
        emit(M, M / s, fits);
        if (model.total_distance <= eps) {
            model.attained = true;
            break;
        }
    }
    return model;
}

CompartmentSystem BuiltNetwork::system() const {
    return decompose_indices(network, partition, compartment_names);
}

BuiltNetwork build_network(const PhaseTypeModel& model) {
    if (model.rate <= 0.0) throw InputError("phase-type model rate must be positive");
    std::vector<std::string> states;
    std::vector<RateEntry> rates;
    std::vector<std::vector<int>> partition(model.compartments.size());
    std::map<std::string, int> comp_index;
    for (size_t a = 0; a < model.compartments.size(); ++a) {
        if (!comp_index.emplace(model.compartments[a], static_cast<int>(a)).second)
            throw InputError("inconsistent relabeling: duplicate compartment " + model.compartments[a]);
    }
    auto add_state = [&](const std::string& name, int comp) {
        states.push_back(name);
        partition[comp].push_back(static_cast<int>(states.size()) - 1);
        return states.back();
    };
    std::vector<std::string> entrance;
    for (size_t a = 0; a < model.compartments.size(); ++a)
        entrance.push_back(add_state("i:" + model.compartments[a], static_cast<int>(a)));

    const double R = model.rate;
    std::vector<double> out_p(model.compartments.size(), 0.0);
    for (const auto& pr : model.pairs) {
        auto ia = comp_index.find(pr.alpha);
        auto ib = comp_index.find(pr.beta);
        if (ia == comp_index.end() || ib == comp_index.end())
            throw InputError("inconsistent relabeling: pair " + pr.alpha + "->" + pr.beta);
        if (pr.p < 0.0) throw InputError("negative branch probability");
        out_p[ia->second] += pr.p;
        if (pr.p <= 0.0 || pr.branches.empty()) continue;
        const int a = ia->second;
        const std::string tag = pr.alpha + ">" + pr.beta;
        const std::string z = add_state("z:" + tag, a);
        rates.push_back({entrance[a], z, R * pr.p});
        double direct = 0.0;
        for (size_t j = 0; j < pr.branches.size(); ++j) {
            const auto& br = pr.branches[j];
            if (br.m < 1) throw InputError("Erlang branch shape must be >= 1");
            if (br.m == 1) {
                direct += br.q * R;
                continue;
            }
            std::string prev = z;
            double r = br.q * R;
            for (int n = 1; n < br.m; ++n) {
                std::ostringstream os;
                os << "x:" << tag << ":" << j << ":" << n;
                const std::string x = add_state(os.str(), a);
                rates.push_back({prev, x, r});
                prev = x;
                r = R;
            }
            rates.push_back({prev, entrance[ib->second], R});
        }
        if (direct > 0.0) rates.push_back({z, entrance[ib->second], direct});
    }
    for (size_t a = 0; a < model.compartments.size(); ++a) {
        if (out_p[a] > 1.0 + 1e-9)
            throw InputError("compartment " + model.compartments[a] + ": branch probabilities exceed 1");
        const double deficit = 1.0 - out_p[a];
        if (deficit > 1e-12 && out_p[a] > 0.0) {
            const std::string sink = add_state("sink:" + model.compartments[a], static_cast<int>(a));
            rates.push_back({entrance[a], sink, R * deficit});
        }
    }
    BuiltNetwork built;
    // The generator is stored dense.
    if (states.size() > kMaxBuiltStates)
        throw InputError("phase-type network would have " + std::to_string(states.size()) + " states (limit " +
                         std::to_string(kMaxBuiltStates) + "); use a larger eps or a smaller M cap");
    built.network = validate_network(states, rates);
    built.partition = std::move(partition);
    built.compartment_names = model.compartments;
    return built;
}

ApproxReport verify_approximation(const std::vector<PairTarget>& targets, const BuiltNetwork& built,
                                  const TimeGrid& grid) {
    const CompartmentSystem sys = built.system();
    const ScalarKernelSet sk = compute_scalar_kernels(sys, grid);
    ApproxReport rep;
    for (const auto& t : targets) {
        const int a = sys.find(t.alpha), b = sys.find(t.beta);
        if (a < 0 || b < 0) throw InputError("target pair " + t.alpha + "->" + t.beta + " not in built network");
        ApproxRow row;
        row.alpha = t.alpha;
        row.beta = t.beta;
        row.p_target = t.target.mass();
        const Series& psi = sk.Phi(a, b);
        row.p_built = trapz(psi, grid.dt);
        if (row.p_target > 0.0 && row.p_built > 0.0)
            row.distance = bl_distance(kernel_target(psi, grid.dt), t.target);
        rep.total_distance += row.distance;
        rep.max_mass_error = std::max(rep.max_mass_error, std::abs(row.p_built - row.p_target));
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace rk
