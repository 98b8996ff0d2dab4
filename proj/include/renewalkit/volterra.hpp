#pragma once

#include "renewalkit/core.hpp"

#include <vector>

namespace rk {

// Matrix of sampled kernels W(t); missing entries are identically zero.
struct KernelMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<Series> entry;  // entry[i*cols + j], size 0 when zero

    KernelMatrix() = default;
    KernelMatrix(int r, int c) : rows(r), cols(c), entry(static_cast<size_t>(r) * c) {}
    Series& at(int i, int j) { return entry[static_cast<size_t>(i) * cols + j]; }
    const Series& at(int i, int j) const { return entry[static_cast<size_t>(i) * cols + j]; }
    bool nonzero(int i, int j) const { return at(i, j).size() > 0; }
};

// Solves x_n = F_n + dt * sum_{j=0}^{n} w_{nj} W_{n-j} x_j with trapezoid weights
// (1/2 at j = 0 and j = n). F and the result are nodes x m.
// History sums use a divide-and-conquer FFT scheme, O(N log^2 N).
Mat volterra_trapezoid(const KernelMatrix& W, const Mat& F, double dt);

// Trapezoid convolution of known data: y_n = dt * sum_j w_{nj} W_{n-j} x_j, y_0 = 0.
Mat convolve_trapezoid(const KernelMatrix& W, const Mat& X, double dt);

// Same rule evaluated by direct summation; O(N^2). Used for small problems and checks.
Mat volterra_trapezoid_direct(const KernelMatrix& W, const Mat& F, double dt);

}  // namespace rk
