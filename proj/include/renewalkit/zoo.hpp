#pragma once

#include "renewalkit/core.hpp"
#include "renewalkit/network.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rk {

// ---------------------------------------------------------------- kinetic proofreading

struct HopfieldParams {
    double k = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    double Q = 1.0;
    double mu = 0.0;
    double lambda = 0.0;
    double E1 = 0.0;  // free energies; rates use e^{E1}, e^{E2}
    double E2 = 0.0;

    double xi() const;   // e^{E1}
    double eta() const;  // e^{E2 - E1}
    double zeta() const;  // alpha lambda / (mu beta eta)
};

// Reference parameters: alpha = mu = eps, beta = eps^2, Q = 1/eps^2, lambda = 2 eps^2,
// e^{E1} = 2, e^{E2} = 4 / eps^s (correct substrate) or e^{E1} = 8, e^{E2} = 16 / eps^s.
HopfieldParams hopfield_fig4(bool wrong_substrate, double eps = 0.01, double s = 0.5);
double hopfield_theta(const HopfieldParams& p, const HopfieldParams& bar);

// States C, S, S*, P, 0 with the compartment {C, S, S*}.
ReactionNetwork hopfield_network(const HopfieldParams& p);

struct HopfieldResponse {
    TimeGrid grid;
    Series phi;                   // lambda S*(t) with C(0) = 1
    double P_quadrature = 0.0;    // int phi
    double P_laplace = 0.0;       // lambda x_{S*}, (-A) x = e_C
    double mean_quadrature = 0.0;  // int t phi / int phi
    double mean_laplace = 0.0;
    double tail = 0.0;            // phi(t_max) / max phi
};

// dt > 0 with t_max <= 0 picks the horizon from the slowest mode (residual e^{-r t} <= 1e-12).
HopfieldResponse hopfield_response(const HopfieldParams& p, double dt = 0.1, double t_max = 0.0);

struct HopfieldDiscrimination {
    double theta = 0.0;
    double ratio_laplace = 0.0;     // Pbar / P
    double ratio_quadrature = 0.0;
    double ratio_formula = 0.0;     // closed expression in theta, xi, eta
    double P = 0.0, P_bar = 0.0;
    double P_asymptotic = 0.0;      // zeta / xi^2
    double T = 0.0, T_bar = 0.0;    // mean production times with mu = 0
    double time_ratio = 0.0;        // T / Tbar
    double single_step_ratio = 0.0;  // alpha = 0: only C <-> S* -> P
    HopfieldResponse response, response_bar;
};

HopfieldDiscrimination hopfield_discrimination(const HopfieldParams& p, const HopfieldParams& bar, double dt = 0.1);

// ---------------------------------------------------------------- linear polymerization

struct PolymerFront {
    TimeGrid grid;
    double mean = 0.0;         // mu = int s Psi
    Mat n;                     // nodes x L_max, column l-1 is n_l
    std::vector<int> front;    // l*(t) = max { l : n_l(t) >= mu/2 }, 0 if none
    double speed = 0.0;        // slope of l*(t) over the final half
    double plateau = 0.0;      // n_l(t_max) at l = l*(t_max)/2
    bool boundary_reached = false;
};

PolymerFront polymer_front(const Series& psi, const TimeGrid& grid, int L_max);

// ---------------------------------------------------------------- adaptation

struct AdaptationResponse {
    TimeGrid grid;
    double lambda_plus = 0.0, lambda_minus = 0.0;
    Series phi;   // closed form
    Series X;     // 1 + (1/b) int phi(v) (s(t-v) - b) dv
    double integral = 0.0;  // int_0^{t_max} phi, closed form
};

AdaptationResponse adaptation_response(double a, double b, const TimeGrid& grid,
                                       const std::function<double(double)>& signal);

// ---------------------------------------------------------------- feed-forward loop

// K(eta, xi) for dX = S - aX, dY = X - bY, dZ = XY - cZ.
double ffl_kernel(double a, double b, double c, double eta, double xi);

struct FflResponse {
    TimeGrid grid;
    Series X, Y, Z;                 // ODE solution, zero initial data
    std::vector<int> kernel_nodes;  // grid nodes where the double integral was evaluated
    Series Z_kernel;
    double max_deviation = 0.0;     // over kernel_nodes
};

// samples: number of output nodes for the O(N^2) kernel quadrature (all nodes if <= 0).
FflResponse ffl_response(double a, double b, double c, const TimeGrid& grid,
                         const std::function<double(double)>& signal, int samples = 80);

struct FflLimitCheck {
    double a = 0.0, b = 0.0, c = 0.0;
    double t_off = 0.0;        // scaled time tau at which the signal is removed
    double delta_tau = 0.0;
    double response_after = 0.0;   // xi(t_off + delta_tau) of the ODE
    double response_before = 0.0;  // xi just before removal
    double limit_before = 0.0;     // 1 - e^{-t_off} from the limit kernel
    double step_on_error = 0.0;    // sup |xi - (1 - e^{-tau})| for tau in [1, t_off]
};

// Limit regime a = c >> 1: xi(tau) = a^2 b c Z / S_m^2 with tau = b t, step-off signal.
FflLimitCheck ffl_limit_check(double a, double b, double c, double t_off = 3.0, double delta_tau = 0.01);

// ---------------------------------------------------------------- nonlinear polymerization

struct NonlinearPolymer {
    TimeGrid grid;
    Mat n;                  // nodes x L_max, column l-1 is n_l
    Mat w;                  // nodes x L_max, column l-1 is w_l (column 0 unused)
    Series mass;            // sum l n_l + sum l w_l
    double mass_residual = 0.0;  // max |mass(t) - mass(0) - int S|
};

// Explicit Euler; I_l is the trapezoid history sum of Psi(t - s) n_1 n_{l-1}.
// Binding beyond L_max is disallowed. Throws NumericError with a suggested dt on negativity.
NonlinearPolymer nonlinear_polymer(const Series& psi, const std::function<double(double)>& source,
                                   const TimeGrid& grid, int L_max, const Vec& n0 = Vec());

// Markovian reference with I_l = n_1 n_{l-1} and no intermediates.
NonlinearPolymer becker_doring(const std::function<double(double)>& source, const TimeGrid& grid, int L_max,
                               const Vec& n0 = Vec());

// ---------------------------------------------------------------- presets

struct ClaimRow {
    std::string claim;
    double target = 0.0;
    double measured = 0.0;
    bool ok = false;
};

struct PresetReport {
    std::string name;
    std::vector<ClaimRow> rows;
    std::vector<std::pair<std::string, Mat>> tables;  // plot-ready data: first column is t
    std::vector<std::vector<std::string>> headers;
};

std::vector<std::string> preset_names();
PresetReport run_preset(const std::string& name);

}  // namespace rk
