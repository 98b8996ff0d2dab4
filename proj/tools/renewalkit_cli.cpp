// renewalkit command-line tool. Exit codes: 0 ok, 2 invalid input, 3 numerical failure.
#include "renewalkit/analysis.hpp"
#include "renewalkit/io.hpp"
#include "renewalkit/kernels.hpp"
#include "renewalkit/phasetype.hpp"
#include "renewalkit/random_models.hpp"
#include "renewalkit/renewal.hpp"
#include "renewalkit/spe.hpp"
#include "renewalkit/zoo.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace rk;

namespace {

struct Common {
    std::string grid;
    double tol = -1.0;
    std::string out = ".";
    unsigned long long seed = 42;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--grid", c.grid, "t_max,dt");
    sub->add_option("--tol", c.tol, "tolerance");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "random seed");
}

std::optional<TimeGrid> parse_grid(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw InputError("--grid expects t_max,dt");
    double T = 0, dt = 0;
    try {
        T = std::stod(s.substr(0, comma));
        dt = std::stod(s.substr(comma + 1));
    } catch (const std::exception&) {
        throw InputError("--grid expects two numbers t_max,dt");
    }
    if (!(dt > 0.0)) throw InputError("--grid: dt must be positive");
    if (T < 10.0 * dt) throw InputError("--grid: t_max must be at least 10 dt");
    return make_grid(T, dt);
}

TimeGrid require_grid(const Common& c) {
    auto g = parse_grid(c.grid);
    if (!g) throw InputError("--grid t_max,dt is required");
    return *g;
}

std::string path_in(const Common& c, const std::string& file) { return (std::filesystem::path(c.out) / file).string(); }

void check_scalar(const CompartmentSystem& sys) {
    for (const auto& v : check_one_entrance(sys)) {
        if (v.kind != EntranceKind::Multiple) continue;
        std::string who;
        for (int s : v.states) who += (who.empty() ? "" : ", ") + sys.network.states[s];
        throw InputError("multiple entrance points (" + who + "); the scalar reduction needs at most one per compartment");
    }
}

void print_mass_rows(const std::vector<MassRow>& rows) {
    std::cout << "compartment\tmass\texact_mass\tdeficit\tstatus\n";
    for (const auto& r : rows)
        std::cout << r.name << '\t' << fmt12(r.mass) << '\t' << (std::isnan(r.exact) ? "-" : fmt12(r.exact)) << '\t'
                  << fmt12(r.deficit) << '\t' << r.status << '\n';
}

Vec parse_vector(const std::string& s, int n, const std::string& what) {
    Vec v = Vec::Zero(n);
    if (s.empty()) return v;
    std::stringstream in(s);
    std::string tok;
    int i = 0;
    while (std::getline(in, tok, ',')) {
        if (i >= n) throw InputError(what + ": too many entries");
        try {
            v(i++) = std::stod(tok);
        } catch (const std::exception&) {
            throw InputError(what + ": '" + tok + "' is not a number");
        }
    }
    if (i != n) throw InputError(what + ": expected " + std::to_string(n) + " entries");
    return v;
}

// ------------------------------------------------------------------ reduce

int cmd_reduce(const std::string& file, const Common& c, bool scalar, bool suggest) {
    const NetworkFile nf = read_network_file(file);
    const CompartmentSystem sys = nf.system();
    if (suggest) {
        const HorizonSuggestion h = suggest_tmax(sys);
        std::cout << "suggested t_max: " << fmt12(h.t_max) << "\n";
        for (int a = 0; a < sys.count(); ++a)
            std::cout << "  " << sys.comps[a].name << ": slowest decay rate " << fmt12(h.slowest_rate[a]) << "\n";
        if (c.grid.empty()) return 0;
    }
    const TimeGrid grid = require_grid(c);
    const bool scalar_ok = one_entrance_ok(sys);
    if (scalar) check_scalar(sys);
    if (!scalar) {
        const KernelSet ks = compute_kernels(sys, grid);
        write_kernels(path_in(c, "kernels_full.tsv"), ks);
        std::cout << "conservation defect: " << fmt12(conservation_defect(ks)) << "\n";
    }
    if (scalar || scalar_ok) {
        const ScalarKernelSet sk = compute_scalar_kernels(sys, grid, &nf.n0);
        write_scalar_kernels(path_in(c, "kernels.tsv"), sk);
        const Mat exact = exact_kernel_masses(sys);
        // quadrature of a kernel with slope s is off by about dt^2 s / 12
        const auto rows = kernel_mass_report(sk, c.tol > 0 ? c.tol : std::max(1e-6, grid.dt * grid.dt), &exact);
        Json rep = mass_report_json(rows, sk, &exact);
        const Vec N0 = compartment_totals(sys, nf.n0);
        rep["N0"] = std::vector<double>(N0.data(), N0.data() + N0.size());
        write_json(path_in(c, "mass_report.json"), rep);
        print_mass_rows(rows);
    } else {
        std::cout << "scalar kernels skipped: some compartment has multiple entrance points\n";
    }
    return 0;
}

// ------------------------------------------------------------------ solve

int cmd_solve(const std::string& file, const std::string& kernels, const std::string& n0s, const Common& c,
              bool scalar, bool check_ode) {
    if (!kernels.empty()) {
        const ScalarKernelSet sk = read_scalar_kernels(kernels);
        const Vec N0 = parse_vector(n0s, sk.count(), "--N0");
        const RenewalSolution sol = solve_renewal_scalar(sk, N0);
        write_solution(path_in(c, "solution.tsv"), sol);
        std::cout << "min N: " << fmt12(sol.min_N()) << "\n";
        for (const auto& d : sol.diagnostics) std::cout << "diagnostic: " << d << "\n";
        return 0;
    }
    if (file.empty()) throw InputError("solve needs a network file or --kernels");
    const NetworkFile nf = read_network_file(file);
    const CompartmentSystem sys = nf.system();
    const TimeGrid grid = require_grid(c);
    const Vec N0 = compartment_totals(sys, nf.n0);
    RenewalSolution sol;
    if (scalar) {
        check_scalar(sys);
        sol = solve_renewal_scalar(compute_scalar_kernels(sys, grid, &nf.n0), N0);
    } else {
        const KernelSet ks = compute_kernels(sys, grid);
        sol = solve_renewal(ks, compute_forcing(sys, grid, nf.n0), N0);
    }
    write_solution(path_in(c, "solution.tsv"), sol);
    std::cout << "mass drift: " << fmt12(sol.mass_drift()) << "\nmin N: " << fmt12(sol.min_N()) << "\n";
    for (const auto& d : sol.diagnostics) std::cout << "diagnostic: " << d << "\n";
    if (check_ode) {
        const double tol = c.tol > 0 ? c.tol : std::max(1e-5, 10.0 * grid.dt * grid.dt);
        const EquivalenceReport rep = equivalence_check(sys, nf.n0, grid, tol);
        std::cout << "ODE deviation (sup |N_rfe - N_ode|): " << fmt12(rep.max_dev_N) << (rep.pass ? " ok" : " exceeds tol")
                  << "\n";
        return rep.pass ? 0 : 3;
    }
    return 0;
}

// ------------------------------------------------------------------ spe

HistoryMeasure parse_history(const std::string& s, const std::vector<std::string>& names) {
    HistoryMeasure h;
    h.atoms.resize(names.size());
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ';')) {
        if (tok.empty()) continue;
        const auto p1 = tok.find(':'), p2 = tok.rfind(':');
        if (p1 == std::string::npos || p1 == p2) throw InputError("history atom '" + tok + "' is not name:location:mass");
        const std::string name = tok.substr(0, p1);
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw InputError("history names unknown compartment '" + name + "'");
        HistoryAtom a;
        try {
            a.location = std::stod(tok.substr(p1 + 1, p2 - p1 - 1));
            a.mass = std::stod(tok.substr(p2 + 1));
        } catch (const std::exception&) {
            throw InputError("history atom '" + tok + "' has non-numeric fields");
        }
        h.atoms[it - names.begin()].push_back(a);
    }
    return h;
}

int cmd_spe(const std::string& file, const std::string& kernels, const std::string& hist, const Common& c) {
    const TimeGrid grid = require_grid(c);
    ScalarKernelSet sk;
    if (!kernels.empty()) {
        sk = read_scalar_kernels(kernels);
    } else {
        if (file.empty()) throw InputError("spe needs a network file or --kernels");
        const NetworkFile nf = read_network_file(file);
        const CompartmentSystem sys = nf.system();
        check_scalar(sys);
        std::vector<std::string> names;
        for (const auto& comp : sys.comps) names.push_back(comp.name);
        const HistoryMeasure h = parse_history(hist, names);
        const double span = std::ceil(h.span() / grid.dt - 1e-9) * grid.dt;
        sk = compute_scalar_kernels(sys, make_grid(grid.t_max + span, grid.dt));
    }
    const HistoryMeasure h = parse_history(hist, sk.names);
    const double tol = c.tol > 0 ? c.tol : 5.0 * grid.dt;
    const SpeRfeReport rep = spe_rfe_equivalence(sk, h, grid, tol);
    write_age_density(path_in(c, "age_density.tsv"), rep.spe);
    const int nc = sk.count();
    std::vector<std::string> hdr{"t"};
    for (int a = 0; a < nc; ++a) hdr.push_back("N_spe[" + sk.names[a] + "]");
    for (int a = 0; a < nc; ++a) hdr.push_back("N_rfe[" + sk.names[a] + "]");
    Mat tab(grid.nodes(), 1 + 2 * nc);
    for (int i = 0; i < grid.nodes(); ++i) tab(i, 0) = grid.t(i);
    tab.middleCols(1, nc) = rep.spe.N;
    tab.middleCols(1 + nc, nc) = rep.rfe.N;
    write_table(path_in(c, "spe_totals.tsv"), hdr, tab);
    for (int a = 0; a < nc; ++a)
        std::cout << sk.names[a] << ": sup |N_spe - N_rfe| = " << fmt12(rep.deviation[a]) << "\n";
    std::cout << (rep.pass ? "agreement within " : "deviation exceeds ") << fmt12(tol) << "\n";
    return rep.pass ? 0 : 3;
}

// ------------------------------------------------------------------ analyze

int cmd_analyze(const std::string& file, const std::string& kernels, const std::string& n0s, const Common& c,
                bool markov, bool db, bool mono, bool asym) {
    if (!markov && !db && !mono && !asym) markov = mono = true;
    std::optional<NetworkFile> nf;
    ScalarKernelSet sk;
    Vec N0;
    if (!kernels.empty()) {
        sk = read_scalar_kernels(kernels);
        N0 = parse_vector(n0s, sk.count(), "--N0");
    } else {
        if (file.empty()) throw InputError("analyze needs a network file or --kernels");
        nf = read_network_file(file);
        const CompartmentSystem sys = nf->system();
        check_scalar(sys);
        sk = compute_scalar_kernels(sys, require_grid(c), &nf->n0);
        N0 = compartment_totals(sys, nf->n0);
    }
    Json out;
    if (markov) {
        const MarkovVerdict v = markovianity_test(sk, c.tol > 0 ? c.tol : 1e-6);
        std::cout << "Markovian: " << (v.markovian ? "yes" : "no") << "\n";
        if (v.markovian) {
            std::cout << "recovered generator (columns sum to zero):\n";
            for (int i = 0; i < v.generator.rows(); ++i) {
                for (int j = 0; j < v.generator.cols(); ++j) std::cout << (j ? "\t" : "  ") << fmt12(v.generator(i, j));
                std::cout << "\n";
            }
        }
        for (const auto& e : v.evidence) std::cout << "  " << e << "\n";
        out["markovian"] = v.markovian;
        out["evidence"] = v.evidence;
    }
    if (db) {
        if (!nf) throw InputError("--detailed-balance needs the network file");
        const CompartmentSystem sys = nf->system();
        const DetailedBalanceCertificate cert = detect_detailed_balance(sys.network);
        std::cout << "detailed balance: " << (cert.present ? "yes" : "no") << " (residual " << fmt12(cert.residual) << ")\n";
        out["detailed_balance"] = cert.present;
        out["residual"] = cert.residual;
        if (cert.present) {
            for (int a = 0; a < sys.count(); ++a)
                for (int b = 0; b < sys.count(); ++b) {
                    if (a == b || sk.p(a, b) <= 0.0) continue;
                    const SpectralKernel k = detailed_balance_kernel(sys, cert, a, b);
                    double wmin = 0.0;
                    for (double w : k.weights) wmin = std::min(wmin, w);
                    std::cout << "  " << sys.comps[a].name << "->" << sys.comps[b].name << ": prefactor "
                              << fmt12(k.prefactor) << ", sum kappa^2 " << fmt12(k.weight_sum()) << ", min weight "
                              << fmt12(wmin) << "\n";
                }
        }
    }
    if (mono) {
        Json m = Json::array();
        for (int a = 0; a < sk.count(); ++a)
            for (int b = 0; b < sk.count(); ++b) {
                if (a == b || sk.p(a, b) <= 0.0) continue;
                const MonotonicityVerdict v = complete_monotonicity_check(sk.Phi(a, b), sk.grid.dt);
                std::cout << "completely monotone " << sk.names[a] << "->" << sk.names[b] << ": "
                          << (v.consistent ? "consistent" : "violated") << " (mixture residual "
                          << fmt12(v.fit.residual) << ")" << (v.message.empty() ? "" : "; " + v.message) << "\n";
                m.push_back({{"from", sk.names[a]}, {"to", sk.names[b]}, {"consistent", v.consistent}});
            }
        out["monotonicity"] = m;
    }
    if (asym) {
        const AsymptoticsResult r = long_time_limits(sk, N0);
        auto vec = [](const Vec& v) {
            std::string s;
            for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt12(v(i));
            return "(" + s + ")";
        };
        std::cout << "Perron v0 " << vec(r.v0) << ", u0 " << vec(r.u0) << "\n"
                  << "c0 (residue) " << fmt12(r.c0) << ", c0 (tail) " << fmt12(r.c0_tail) << "\n"
                  << "decay rate " << fmt12(r.decay_rate) << "\n"
                  << "N_inf " << vec(r.N_inf) << ", N(t_max) " << vec(r.N_tmax) << "\n";
        out["c0"] = r.c0;
        out["c0_tail"] = r.c0_tail;
        out["decay_rate"] = r.decay_rate;
        out["N_inf"] = std::vector<double>(r.N_inf.data(), r.N_inf.data() + r.N_inf.size());
    }
    write_json(path_in(c, "analysis.json"), out);
    return 0;
}

// ------------------------------------------------------------------ approx

TargetMeasure parse_target(const std::string& text) {
    std::vector<std::string> f;
    std::stringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ':')) f.push_back(tok);
    auto num = [&](size_t i) {
        try {
            return std::stod(f.at(i));
        } catch (const std::exception&) {
            throw InputError("target '" + text + "': bad field " + std::to_string(i));
        }
    };
    if (f.empty()) throw InputError("empty target");
    if (f[0] == "uniform" && (f.size() == 3 || f.size() == 4)) return uniform_target(num(1), num(2), f.size() == 4 ? num(3) : 1.0);
    if (f[0] == "point" && (f.size() == 2 || f.size() == 3)) return point_target(num(1), f.size() == 3 ? num(2) : 1.0);
    if (f[0] == "erlang" && (f.size() == 3 || f.size() == 4))
        return erlang_target(num(1), static_cast<int>(num(2)), f.size() == 4 ? num(3) : 1.0);
    throw InputError("target '" + text + "' is not uniform:a:b[:mass], point:x[:mass] or erlang:rate:m[:mass]");
}

// p_exact per pair from a mass report; empty when the file is absent.
std::map<std::pair<std::string, std::string>, double> read_exact_masses(const std::string& path) {
    std::map<std::pair<std::string, std::string>, double> out;
    if (path.empty() || !std::filesystem::exists(path)) return out;
    const Json doc = read_json(path);
    if (!doc.contains("pairs")) throw InputError(path + ": no pairs");
    for (const auto& row : doc["pairs"])
        if (row.contains("p_exact"))
            out[{row.at("from").get<std::string>(), row.at("to").get<std::string>()}] = row.at("p_exact").get<double>();
    return out;
}

int cmd_approx(const std::vector<std::string>& specs, const std::string& kernels, std::string masses, double eps, int M_cap,
               const Common& c) {
    std::vector<PairTarget> targets;
    std::vector<std::string> comps;
    auto add_comp = [&](const std::string& n) {
        if (std::find(comps.begin(), comps.end(), n) == comps.end()) comps.push_back(n);
    };
    if (!kernels.empty()) {
        const ScalarKernelSet sk = read_scalar_kernels(kernels);
        comps = sk.names;
        if (masses.empty()) {
            const auto sibling = std::filesystem::path(kernels).parent_path() / "mass_report.json";
            if (std::filesystem::exists(sibling)) masses = sibling.string();
        }
        const auto exact = read_exact_masses(masses);
        if (!exact.empty()) {
            // samples give the shape, the report gives the mass
            std::cout << "pair masses from " << masses << "\n";
            for (int a = 0; a < sk.count(); ++a)
                for (int b = 0; b < sk.count(); ++b) {
                    if (a == b) continue;
                    const auto it = exact.find({sk.names[a], sk.names[b]});
                    const double p = it == exact.end() ? 0.0 : it->second;
                    if (p <= 0.0 || sk.p(a, b) <= 0.0) continue;
                    targets.push_back({sk.names[a], sk.names[b], kernel_target(sk.Phi(a, b) * (p / sk.p(a, b)), sk.grid.dt)});
                }
        }
        // Sampled conservative kernels can exceed unit mass by trapezoid error; rescale those.
        const double excess_tol = std::max(1e-6, 0.1 * sk.grid.dt);
        for (int a = 0; exact.empty() && a < sk.count(); ++a) {
            const double scale = (sk.mass(a) > 1.0 && sk.mass(a) <= 1.0 + excess_tol) ? 1.0 / sk.mass(a) : 1.0;
            for (int b = 0; b < sk.count(); ++b)
                if (a != b && sk.p(a, b) > 0.0)
                    targets.push_back({sk.names[a], sk.names[b], kernel_target(sk.Phi(a, b) * scale, sk.grid.dt)});
        }
    }
    for (const auto& s : specs) {
        // [alpha>beta=]target
        std::string alpha = "A", beta = "B", t = s;
        if (const auto eq = s.find('='); eq != std::string::npos) {
            const std::string pair = s.substr(0, eq);
            const auto gt = pair.find('>');
            if (gt == std::string::npos) throw InputError("pair '" + pair + "' is not alpha>beta");
            alpha = pair.substr(0, gt);
            beta = pair.substr(gt + 1);
            t = s.substr(eq + 1);
        }
        add_comp(alpha);
        add_comp(beta);
        targets.push_back({alpha, beta, parse_target(t)});
    }
    if (targets.empty()) throw InputError("approx needs --target or --kernels");
    const PhaseTypeModel model = fit_phase_type(comps, targets, eps, M_cap);
    const BuiltNetwork built = build_network(model);
    write_json(path_in(c, "network.json"), network_to_json(built.network, built.partition, built.compartment_names));
    write_json(path_in(c, "phase_type.json"), phase_type_to_json(model));

    TimeGrid grid;
    if (auto g = parse_grid(c.grid)) {
        grid = *g;
    } else {
        double end = 0.0;
        for (const auto& p : model.pairs) {
            ErlangFit f;
            f.rate = model.rate;
            f.branches = p.branches;
            end = std::max(end, mixture_measure(f).quantile(1.0 - 1e-9));  // tail below the 1e-6 mass check
        }
        const double dt = std::min(1e-3, 0.05 / model.rate);
        grid = make_grid(std::ceil(end / dt) * dt, dt);
    }
    const ApproxReport rep = verify_approximation(targets, built, grid);
    std::cout << "M = " << model.M << ", Erlang rate " << fmt12(model.rate) << ", states " << built.network.size()
              << ", fitted distance " << fmt12(model.total_distance) << (model.attained ? "" : " (eps not attained)")
              << "\n";
    std::cout << "pair\tp_target\tp_built\tbounded_lipschitz\n";
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        std::cout << r.alpha << "->" << r.beta << '\t' << fmt12(r.p_target) << '\t' << fmt12(r.p_built) << '\t'
                  << fmt12(r.distance) << "\n";
        rows.push_back({{"alpha", r.alpha}, {"beta", r.beta}, {"p_target", r.p_target}, {"p_built", r.p_built},
                        {"distance", r.distance}});
    }
    std::cout << "total distance " << fmt12(rep.total_distance) << ", max mass error " << fmt12(rep.max_mass_error) << "\n";
    write_json(path_in(c, "approx_report.json"),
               {{"rows", rows}, {"total_distance", rep.total_distance}, {"max_mass_error", rep.max_mass_error},
                {"distance", "bounded-Lipschitz"}, {"t_max", grid.t_max}, {"dt", grid.dt}});
    if (!model.attained) {
        std::cerr << "eps = " << eps << " not attained within M <= " << M_cap << "; achieved " << fmt12(model.total_distance)
                  << "\n";
        return 3;
    }
    return 0;
}

// ------------------------------------------------------------------ sweep

int cmd_sweep(int count, const Common& c) {
    const TimeGrid grid = parse_grid(c.grid).value_or(make_grid(10.0, 1e-2));
    Rng rng(c.seed);
    std::uniform_int_distribution<int> S(3, 8);
    std::uniform_real_distribution<double> D(0.1, 0.6);
    double drift = 0.0, minN = 0.0;
    for (int k = 0; k < count; ++k) {
        const int n = S(rng);
        std::uniform_int_distribution<int> B(1, n);
        const RandomSystem rs = random_system(rng, n, B(rng), D(rng));
        const KernelSet ks = compute_kernels(rs.sys, grid);
        const RenewalSolution sol = solve_renewal(ks, compute_forcing(rs.sys, grid, rs.n0), compartment_totals(rs.sys, rs.n0));
        drift = std::max(drift, sol.mass_drift());
        minN = std::min(minN, sol.min_N());
    }
    std::cout << count << " systems, seed " << c.seed << ": max relative mass drift " << fmt12(drift) << ", min N "
              << fmt12(minN) << "\n";
    return 0;
}

// ------------------------------------------------------------------ demo

int cmd_demo(const std::string& name, const Common& c, bool write) {
    const PresetReport rep = run_preset(name);
    std::cout << "preset " << rep.name << "\n";
    std::cout << std::left << std::setw(72) << "claim" << ' ' << std::setw(20) << "target" << ' ' << std::setw(20)
              << "measured" << " status\n";
    for (const auto& r : rep.rows)
        std::cout << std::left << std::setw(72) << r.claim << ' ' << std::setw(20) << fmt12(r.target) << ' '
                  << std::setw(20) << fmt12(r.measured) << ' ' << (r.ok ? "ok" : "miss") << "\n";
    if (write) {
        for (size_t k = 0; k < rep.tables.size(); ++k)
            write_table(path_in(c, name + "_" + rep.tables[k].first + ".tsv"), rep.headers[k], rep.tables[k].second);
        Json rows = Json::array();
        for (const auto& r : rep.rows)
            rows.push_back({{"claim", r.claim}, {"target", r.target}, {"measured", r.measured}, {"ok", r.ok}});
        write_json(path_in(c, name + "_summary.json"), {{"preset", name}, {"claims", rows}});
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"renewalkit: response-function reduction, analysis and solvers for linear reaction networks"};
    app.require_subcommand(1);

    Common c;
    std::string file, kernels, masses, n0s, hist, preset;
    bool scalar = false, suggest = false, check_ode = false;
    bool markov = false, db = false, mono = false, asym = false, write = false;
    std::vector<std::string> targets;
    double eps = 0.05;
    int M_cap = 4096, count = 100;

    auto* reduce = app.add_subcommand("reduce", "compute kernels and the mass report");
    reduce->add_option("network", file, "network JSON file")->required();
    reduce->add_flag("--scalar", scalar, "one-entrance scalar kernels only");
    reduce->add_flag("--suggest-tmax", suggest, "print a horizon from the slowest block eigenvalue");
    add_common(reduce, c);

    auto* solve = app.add_subcommand("solve", "solve the renewal equations");
    solve->add_option("network", file, "network JSON file");
    solve->add_option("--kernels", kernels, "kernels.tsv written by reduce");
    solve->add_option("--N0", n0s, "initial compartment totals for --kernels, comma separated");
    solve->add_flag("--scalar", scalar, "use the scalar reduction");
    solve->add_flag("--check-ode", check_ode, "compare with the direct ODE solution");
    add_common(solve, c);

    auto* spe = app.add_subcommand("spe", "solve the age-structured equation and compare with the renewal solution");
    spe->add_option("network", file, "network JSON file");
    spe->add_option("--kernels", kernels, "kernels.tsv written by reduce");
    spe->add_option("--history", hist, "atoms name:location:mass separated by ';' (location <= 0)")->required();
    add_common(spe, c);

    auto* analyze = app.add_subcommand("analyze", "kernel diagnostics");
    analyze->add_option("network", file, "network JSON file");
    analyze->add_option("--kernels", kernels, "kernels.tsv written by reduce");
    analyze->add_option("--N0", n0s, "initial compartment totals for --kernels");
    analyze->add_flag("--markov", markov, "Markovianity test");
    analyze->add_flag("--detailed-balance", db, "detailed-balance certificate and spectral kernels");
    analyze->add_flag("--monotone", mono, "complete monotonicity check");
    analyze->add_flag("--asymptotics", asym, "long-time limits");
    add_common(analyze, c);

    auto* approx = app.add_subcommand("approx", "phase-type approximation and network construction");
    approx->add_option("--target", targets, "[alpha>beta=]uniform:a:b[:mass] | point:x[:mass] | erlang:rate:m[:mass]");
    approx->add_option("--kernels", kernels, "approximate every pair of a kernels.tsv");
    approx->add_option("--masses", masses, "mass_report.json with exact pair masses (default: next to --kernels)");
    approx->add_option("--eps", eps, "bounded-Lipschitz tolerance");
    approx->add_option("--max-M", M_cap, "cap on M");
    add_common(approx, c);

    auto* sweep = app.add_subcommand("sweep", "conservation and positivity over random conservative systems");
    sweep->add_option("--count", count, "number of systems");
    add_common(sweep, c);

    auto* demo = app.add_subcommand("demo", "run a model preset and print claim vs measured");
    std::string preset_help = "one of:";
    for (const auto& n : preset_names()) preset_help += " " + n;
    demo->add_option("preset", preset, preset_help)->required();
    demo->add_flag("--write", write, "write plot-ready tables to --out");
    add_common(demo, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*reduce) return cmd_reduce(file, c, scalar, suggest);
        if (*solve) return cmd_solve(file, kernels, n0s, c, scalar, check_ode);
        if (*spe) return cmd_spe(file, kernels, hist, c);
        if (*analyze) return cmd_analyze(file, kernels, n0s, c, markov, db, mono, asym);
        if (*approx) return cmd_approx(targets, kernels, masses, eps, M_cap, c);
        if (*sweep) return cmd_sweep(count, c);
        if (*demo) return cmd_demo(preset, c, write);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
