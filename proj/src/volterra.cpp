#include "renewalkit/volterra.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace rk {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Real-to-complex transform pair of a fixed length.
class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        re_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        co_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        fwd_ = fftw_plan_dft_r2c_1d(n, re_, co_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(n, co_, re_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(re_);
        fftw_free(co_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return n_; }
    int bins() const { return n_ / 2 + 1; }

    // Forward transform of src[0..len) zero padded to n.
    void forward(const double* src, int len, std::vector<std::complex<double>>& out) {
        for (int i = 0; i < n_; ++i) re_[i] = i < len ? src[i] : 0.0;
        fftw_execute(fwd_);
        out.resize(bins());
        for (int k = 0; k < bins(); ++k) out[k] = {co_[k][0], co_[k][1]};
    }
    // Inverse transform, normalized; result in the internal buffer.
    const double* inverse(const std::vector<std::complex<double>>& in) {
        for (int k = 0; k < bins(); ++k) {
            co_[k][0] = in[k].real();
            co_[k][1] = in[k].imag();
        }
        fftw_execute(bwd_);
        const double s = 1.0 / n_;
        for (int i = 0; i < n_; ++i) re_[i] *= s;
        return re_;
    }

private:
    int n_;
    double* re_ = nullptr;
    fftw_complex* co_ = nullptr;
    fftw_plan fwd_{};
    fftw_plan bwd_{};
};

using Spectrum = std::vector<std::complex<double>>;

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

class OnlineSolver {
public:
    OnlineSolver(const KernelMatrix& W, const Mat& F, double dt)
        : W_(W), F_(F), dt_(dt), N_(static_cast<int>(F.rows())), m_(static_cast<int>(F.cols())) {
        X_ = Mat::Zero(N_, m_);
        Y_ = Mat::Zero(N_, m_);
        H_ = Mat::Zero(N_, m_);
        Mat W0 = Mat::Zero(m_, m_);
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j)
                if (W_.nonzero(i, j)) {
                    W0(i, j) = W_.at(i, j)(0);
                    nz_.emplace_back(i, j);
                }
        lu_.compute(Mat::Identity(m_, m_) - 0.5 * dt_ * W0);
        for (int i = 0; i < m_; ++i) {
            bool any = false;
            for (auto [a, b] : nz_)
                if (a == i) any = true;
            row_active_.push_back(any);
        }
        for (int j = 0; j < m_; ++j) {
            bool any = false;
            for (auto [a, b] : nz_)
                if (b == j) any = true;
            col_active_.push_back(any);
        }
    }

    Mat run(bool use_fft) {
        if (N_ == 0) return X_;
        if (!use_fft || N_ <= 2 * kLeaf || nz_.empty()) {
            leaf(0, N_);
        } else {
            recurse(0, next_pow2(N_));
        }
        return X_;
    }

private:
    static constexpr int kLeaf = 32;

    void finish_node(int n) {
        if (n == 0) {
            X_.row(0) = F_.row(0);
            Y_.row(0) = 0.5 * X_.row(0);
            return;
        }
        Vec rhs = F_.row(n).transpose() + dt_ * H_.row(n).transpose();
        X_.row(n) = lu_.solve(rhs).transpose();
        Y_.row(n) = X_.row(n);
    }

    void leaf(int l, int r) {
        r = std::min(r, N_);
        for (int n = l; n < r; ++n) {
            for (auto [i, j] : nz_) {
                const Series& w = W_.at(i, j);
                double s = 0.0;
                for (int q = l; q < n; ++q) s += w(n - q) * Y_(q, j);
                H_(n, i) += s;
            }
            finish_node(n);
        }
    }

    const std::vector<Spectrum>& kernel_spectra(int size) {
        auto it = kspec_.find(size);
        if (it != kspec_.end()) return it->second;
        RealFft& fft = plan(size);
        std::vector<Spectrum> specs(nz_.size());
        for (size_t e = 0; e < nz_.size(); ++e) {
            const Series& w = W_.at(nz_[e].first, nz_[e].second);
            fft.forward(w.data(), std::min<int>(size, static_cast<int>(w.size())), specs[e]);
        }
        return kspec_.emplace(size, std::move(specs)).first->second;
    }

    RealFft& plan(int size) {
        auto it = ffts_.find(size);
        if (it != ffts_.end()) return *it->second;
        return *ffts_.emplace(size, std::make_unique<RealFft>(size)).first->second;
    }

    void cross(int l, int mid, int r) {
        if (mid >= N_) return;
        const int h = mid - l;
        const int size = 2 * h;
        RealFft& fft = plan(size);
        const auto& ks = kernel_spectra(size);
        std::vector<Spectrum> ys(m_);
        std::vector<double> buf(h);
        for (int j = 0; j < m_; ++j) {
            if (!col_active_[j]) continue;
            for (int q = 0; q < h; ++q) buf[q] = Y_(l + q, j);
            fft.forward(buf.data(), h, ys[j]);
        }
        const int bins = fft.bins();
        const int hi = std::min(r, N_);
        Spectrum acc(bins);
        for (int i = 0; i < m_; ++i) {
            if (!row_active_[i]) continue;
            std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
            for (size_t e = 0; e < nz_.size(); ++e) {
                if (nz_[e].first != i) continue;
                const Spectrum& k = ks[e];
                const Spectrum& y = ys[nz_[e].second];
                for (int b = 0; b < bins; ++b) acc[b] += k[b] * y[b];
            }
            const double* out = fft.inverse(acc);
            for (int n = mid; n < hi; ++n) H_(n, i) += out[n - l];
        }
    }

    void recurse(int l, int r) {
        if (l >= N_) return;
        if (r - l <= kLeaf) {
            leaf(l, r);
            return;
        }
        const int mid = (l + r) / 2;
        recurse(l, mid);
        cross(l, mid, r);
        recurse(mid, r);
    }

    const KernelMatrix& W_;
    const Mat& F_;
    double dt_;
    int N_, m_;
    Mat X_, Y_, H_;
    Eigen::PartialPivLU<Mat> lu_;
    std::vector<std::pair<int, int>> nz_;
    std::vector<bool> row_active_, col_active_;
    std::map<int, std::unique_ptr<RealFft>> ffts_;
    std::map<int, std::vector<Spectrum>> kspec_;
};

void check_shapes(const KernelMatrix& W, const Mat& F, int in_cols) {
    if (W.cols != in_cols) throw InputError("kernel matrix column count does not match data");
    for (const auto& s : W.entry)
        if (s.size() != 0 && s.size() != F.rows()) throw InputError("kernel/grid mismatch: kernel samples do not match node count");
}

}  // namespace

Mat volterra_trapezoid(const KernelMatrix& W, const Mat& F, double dt) {
    if (W.rows != W.cols || W.rows != F.cols()) throw InputError("volterra: dimension mismatch");
    check_shapes(W, F, static_cast<int>(F.cols()));
    OnlineSolver s(W, F, dt);
    return s.run(true);
}

Mat volterra_trapezoid_direct(const KernelMatrix& W, const Mat& F, double dt) {
    if (W.rows != W.cols || W.rows != F.cols()) throw InputError("volterra: dimension mismatch");
    check_shapes(W, F, static_cast<int>(F.cols()));
    OnlineSolver s(W, F, dt);
    return s.run(false);
}

Mat convolve_trapezoid(const KernelMatrix& W, const Mat& X, double dt) {
    check_shapes(W, X, static_cast<int>(X.cols()));
    const int N = static_cast<int>(X.rows());
    Mat Y = Mat::Zero(N, W.rows);
    if (N < 2) return Y;
    const int size = next_pow2(2 * N);
    RealFft fft(size);
    std::vector<Spectrum> xs(W.cols);
    std::vector<double> buf(N);
    for (int j = 0; j < W.cols; ++j) {
        bool used = false;
        for (int i = 0; i < W.rows; ++i) used = used || W.nonzero(i, j);
        if (!used) continue;
        for (int q = 0; q < N; ++q) buf[q] = X(q, j);
        buf[0] *= 0.5;
        fft.forward(buf.data(), N, xs[j]);
    }
    Spectrum acc(fft.bins()), ks;
    for (int i = 0; i < W.rows; ++i) {
        bool any = false;
        std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
        for (int j = 0; j < W.cols; ++j) {
            if (!W.nonzero(i, j)) continue;
            any = true;
            fft.forward(W.at(i, j).data(), N, ks);
            for (int b = 0; b < fft.bins(); ++b) acc[b] += ks[b] * xs[j][b];
        }
        if (!any) continue;
        const double* out = fft.inverse(acc);
        for (int n = 1; n < N; ++n) {
            double corr = 0.0;
            for (int j = 0; j < W.cols; ++j)
                if (W.nonzero(i, j)) corr += W.at(i, j)(0) * X(n, j);
            Y(n, i) = dt * (out[n] - 0.5 * corr);
        }
    }
    return Y;
}

}  // namespace rk
