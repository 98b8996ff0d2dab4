#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rk {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
// Samples of a scalar function on a TimeGrid.
using Series = Eigen::VectorXd;

// Malformed input: mapped to exit code 2 by the CLI.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure (overflow, exhausted kernels, reducibility, ...): exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Uniform grid {0, dt, ..., n*dt}.
struct TimeGrid {
    double t_max = 0.0;
    double dt = 0.0;
    int n = 0;  // number of intervals

    int nodes() const { return n + 1; }
    double t(int i) const { return i * dt; }
};

TimeGrid make_grid(double t_max, double dt);

// Composite trapezoid over the whole series.
double trapz(const Series& f, double dt);
// Running trapezoid integral, out(0) = 0.
Series cumtrapz(const Series& f, double dt);
// Trapezoid of t*f(t).
double trapz_first_moment(const Series& f, double dt);

// Worker count: RENEWALKIT_THREADS if set, else hardware concurrency.
int thread_count();

template <class F>
void parallel_for(int count, F&& fn) {
    const int workers = std::min(thread_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::mutex m;
    std::exception_ptr err;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace rk
