#include "flsmosaic/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace flsm::fft {

namespace {

// FFTW plan creation is not thread-safe; execution via the new-array
// interface is. Plans are cached per shape and kept for the process
// lifetime.
class PlanCache {
public:
    fftw_plan r2c(int rows, int cols) {
        std::scoped_lock lock(mutex_);
        auto key = std::make_tuple(rows, cols, 0);
        auto it = plans_.find(key);
        if (it != plans_.end())
            return it->second;
        std::vector<double> in(static_cast<size_t>(rows) * cols);
        std::vector<fftw_complex> out(static_cast<size_t>(rows) * (cols / 2 + 1));
        fftw_plan p = fftw_plan_dft_r2c_2d(rows, cols, in.data(), out.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[key] = p;
        return p;
    }

    fftw_plan c2r(int rows, int cols) {
        std::scoped_lock lock(mutex_);
        auto key = std::make_tuple(rows, cols, 1);
        auto it = plans_.find(key);
        if (it != plans_.end())
            return it->second;
        std::vector<fftw_complex> in(static_cast<size_t>(rows) * (cols / 2 + 1));
        std::vector<double> out(static_cast<size_t>(rows) * cols);
        fftw_plan p = fftw_plan_dft_c2r_2d(rows, cols, in.data(), out.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[key] = p;
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

} // namespace

int next_fast_size(int n) {
    if (n <= 1)
        return 1;
    for (;; ++n) {
        int m = n;
        for (int f : {2, 3, 5, 7})
            while (m % f == 0)
                m /= f;
        if (m == 1)
            return n;
    }
}

Grid<std::complex<double>> forward_r2c(const Image& in) {
    const int rows = in.rows();
    const int cols = in.cols();
    Grid<std::complex<double>> out(rows, cols / 2 + 1);
    // Out-of-place r2c leaves the input intact, but the planner wants a
    // mutable pointer.
    std::vector<double> buf(in.data(), in.data() + in.size());
    fftw_execute_dft_r2c(cache().r2c(rows, cols), buf.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

Image inverse_c2r(const Grid<std::complex<double>>& half, int cols) {
    const int rows = half.rows();
    if (half.cols() != cols / 2 + 1)
        throw std::invalid_argument("inverse_c2r: half-plane width mismatch");
    // c2r destroys its input; work on a copy.
    std::vector<std::complex<double>> buf(half.data(), half.data() + half.size());
    Image out(rows, cols);
    fftw_execute_dft_c2r(cache().c2r(rows, cols), reinterpret_cast<fftw_complex*>(buf.data()),
                         out.data());
    const double scale = 1.0 / (static_cast<double>(rows) * cols);
    for (double& v : out)
        v *= scale;
    return out;
}

Image magnitude_centered(const Image& in) {
    const int rows = in.rows();
    const int cols = in.cols();
    const auto half = forward_r2c(in);
    const int hc = half.cols();

    Image mag(rows, cols);
    // Centered index i holds frequency (i - n/2) mod n, so the zero
    // frequency lands at n/2.
    const int row_shift = rows / 2;
    const int col_shift = cols / 2;
    for (int r = 0; r < rows; ++r) {
        const int rc = (r + rows - row_shift) % rows;
        for (int c = 0; c < cols; ++c) {
            const int cc = (c + cols - col_shift) % cols;
            double m;
            if (cc < hc) {
                m = std::abs(half(rc, cc));
            } else {
                // Hermitian completion: F(r, c) = conj(F(-r, -c)).
                const int rr = rc == 0 ? 0 : rows - rc;
                m = std::abs(half(rr, cols - cc));
            }
            mag(r, c) = m;
        }
    }
    return mag;
}

} // namespace flsm::fft
