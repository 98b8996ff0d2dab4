#include "renewalkit/analysis.hpp"
#include "renewalkit/io.hpp"
#include "renewalkit/phasetype.hpp"
#include "renewalkit/renewal.hpp"
#include "renewalkit/zoo.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rk;

namespace {

NetworkFile load(const std::string& doc) { return parse_network(Json::parse(doc)); }

Mat series_rows(const std::vector<Series>& s) {
    Mat m(s.size(), s.empty() ? 0 : s[0].size());
    for (size_t i = 0; i < s.size(); ++i) m.row(i) = s[i].transpose();
    return m;
}

Vec nodes(const TimeGrid& g) {
    Vec t(g.nodes());
    for (int i = 0; i < g.nodes(); ++i) t(i) = g.t(i);
    return t;
}

py::dict scalar_kernels(const std::string& doc, double t_max, double dt) {
    const NetworkFile nf = load(doc);
    const CompartmentSystem sys = nf.system();
    const ScalarKernelSet sk = compute_scalar_kernels(sys, make_grid(t_max, dt), &nf.n0);
    py::dict out;
    out["names"] = sk.names;
    out["t"] = nodes(sk.grid);
    out["phi"] = series_rows(sk.phi);  // row a*nc + b is Phi_{a->b}
    out["p"] = sk.p;
    out["p_exact"] = exact_kernel_masses(sys);
    return out;
}

py::dict solve(const std::string& doc, double t_max, double dt, bool scalar) {
    const NetworkFile nf = load(doc);
    const CompartmentSystem sys = nf.system();
    const TimeGrid g = make_grid(t_max, dt);
    const Vec N0 = compartment_totals(sys, nf.n0);
    const RenewalSolution sol = scalar ? solve_renewal_scalar(compute_scalar_kernels(sys, g, &nf.n0), N0)
                                       : solve_renewal(compute_kernels(sys, g), compute_forcing(sys, g, nf.n0), N0);
    py::dict out;
    out["names"] = sol.names;
    out["t"] = nodes(g);
    out["N"] = sol.N;
    out["mass_drift"] = sol.mass_drift();
    return out;
}

double ode_deviation(const std::string& doc, double t_max, double dt) {
    const NetworkFile nf = load(doc);
    return equivalence_check(nf.system(), nf.n0, make_grid(t_max, dt), 1.0).max_dev_N;
}

py::dict markovianity(const std::string& doc, double t_max, double dt) {
    const NetworkFile nf = load(doc);
    const MarkovVerdict v = markovianity_test(compute_scalar_kernels(nf.system(), make_grid(t_max, dt)));
    py::dict out;
    out["markovian"] = v.markovian;
    out["generator"] = v.generator;
    out["evidence"] = v.evidence;
    return out;
}

py::dict detailed_balance(const std::string& doc) {
    const DetailedBalanceCertificate c = detect_detailed_balance(load(doc).network);
    py::dict out;
    out["present"] = c.present;
    out["mu"] = c.mu;
    out["residual"] = c.residual;
    return out;
}

py::dict approximate_uniform(double a, double b, double eps) {
    const std::vector<PairTarget> targets{{"A", "B", uniform_target(a, b)}};
    const PhaseTypeModel m = fit_phase_type({"A", "B"}, targets, eps);
    const BuiltNetwork built = build_network(m);
    py::dict out;
    out["M"] = m.M;
    out["distance"] = m.total_distance;
    out["attained"] = m.attained;
    out["network"] = network_to_json(built.network, built.partition, built.compartment_names).dump();
    return out;
}

std::vector<py::dict> demo(const std::string& name) {
    std::vector<py::dict> rows;
    for (const auto& r : run_preset(name).rows) {
        py::dict d;
        d["claim"] = r.claim;
        d["target"] = r.target;
        d["measured"] = r.measured;
        d["ok"] = r.ok;
        rows.push_back(d);
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_renewalkit, m) {
    m.doc() = "Response-function reduction and renewal solvers for linear reaction networks";
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("expm", [](const Mat& A, double t) { return expm(A, t); }, py::arg("A"), py::arg("t") = 1.0);
    m.def("scalar_kernels", &scalar_kernels, py::arg("network"), py::arg("t_max"), py::arg("dt"));
    m.def("solve", &solve, py::arg("network"), py::arg("t_max"), py::arg("dt"), py::arg("scalar") = false);
    m.def("ode_deviation", &ode_deviation, py::arg("network"), py::arg("t_max"), py::arg("dt"));
    m.def("markovianity", &markovianity, py::arg("network"), py::arg("t_max"), py::arg("dt"));
    m.def("detailed_balance", &detailed_balance, py::arg("network"));
    m.def("approximate_uniform", &approximate_uniform, py::arg("a"), py::arg("b"), py::arg("eps") = 0.05);
    m.def("presets", &preset_names);
    m.def("demo", &demo, py::arg("name"));
}
