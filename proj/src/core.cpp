#include "renewalkit/core.hpp"

#include <cmath>
#include <sstream>

namespace rk {

TimeGrid make_grid(double t_max, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("grid: dt must be positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("grid: t_max must be positive");
    const double ratio = t_max / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-6 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "grid: dt=" << dt << " does not divide t_max=" << t_max;
        throw InputError(os.str());
    }
    if (n < 1) throw InputError("grid: need at least two nodes");
    TimeGrid g;
    g.n = static_cast<int>(n);
    g.dt = dt;
    g.t_max = g.n * dt;
    return g;
}

double trapz(const Series& f, double dt) {
    const Eigen::Index n = f.size();
    if (n < 2) return 0.0;
    return dt * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

Series cumtrapz(const Series& f, double dt) {
    Series out = Series::Zero(f.size());
    for (Eigen::Index i = 1; i < f.size(); ++i) out(i) = out(i - 1) + 0.5 * dt * (f(i - 1) + f(i));
    return out;
}

double trapz_first_moment(const Series& f, double dt) {
    Series g(f.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) g(i) = i * dt * f(i);
    return trapz(g, dt);
}

int thread_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("RENEWALKIT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, hw));
    }
    return hw;
}

}  // namespace rk
