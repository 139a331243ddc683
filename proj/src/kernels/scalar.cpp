#include <algorithm>
#include <complex>

#include "slowlight/kernels/kernels.hpp"

namespace slowlight::kernels {

namespace {

void project_scale_scalar(const cplx* eta, const double* ux, const double* uy, double vx, double vy, cplx* out,
                          std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = eta[i] * (ux[i] * vx + uy[i] * vy);
}

void complex_axpy_scalar(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

IntensityStats weighted_intensity_scalar(const double* w, const cplx* ex, const cplx* ey, std::size_t n) {
    IntensityStats s;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = w[i] * (std::norm(ex[i]) + std::norm(ey[i]));
        s.weighted_sum += v;
        s.weighted_max = std::max(s.weighted_max, v);
    }
    return s;
}

void lorentzian_sum_scalar(const double* x, std::size_t n, const double* centers, const double* half_widths,
                           const double* amplitudes, std::size_t n_peaks, double offset, double* out) {
    for (std::size_t j = 0; j < n; ++j) {
        double acc = offset;
        for (std::size_t p = 0; p < n_peaks; ++p) {
            const double d = x[j] - centers[p];
            const double hw2 = half_widths[p] * half_widths[p];
            acc += amplitudes[p] * hw2 / (d * d + hw2);
        }
        out[j] = acc;
    }
}

constexpr KernelTable kScalar{
    Isa::scalar, project_scale_scalar, complex_axpy_scalar, weighted_intensity_scalar, lorentzian_sum_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace slowlight::kernels
