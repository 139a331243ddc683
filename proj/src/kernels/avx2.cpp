// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <complex>

#include "slowlight/kernels/kernels.hpp"

namespace slowlight::kernels {

namespace {

void project_scale_avx2(const cplx* eta, const double* ux, const double* uy, double vx, double vy, cplx* out,
                        std::size_t n) {
    const double* e = reinterpret_cast<const double*>(eta);
    double* o = reinterpret_cast<double*>(out);
    const __m256d vxv = _mm256_set1_pd(vx);
    const __m256d vyv = _mm256_set1_pd(vy);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d w = _mm256_fmadd_pd(_mm256_loadu_pd(ux + i), vxv, _mm256_mul_pd(_mm256_loadu_pd(uy + i), vyv));
        const __m256d lo = _mm256_permute4x64_pd(w, 0x50);  // w0 w0 w1 w1
        const __m256d hi = _mm256_permute4x64_pd(w, 0xFA);  // w2 w2 w3 w3
        _mm256_storeu_pd(o + 2 * i, _mm256_mul_pd(_mm256_loadu_pd(e + 2 * i), lo));
        _mm256_storeu_pd(o + 2 * i + 4, _mm256_mul_pd(_mm256_loadu_pd(e + 2 * i + 4), hi));
    }
    for (; i < n; ++i) out[i] = eta[i] * (ux[i] * vx + uy[i] * vy);
}

void complex_axpy_avx2(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const double* xd = reinterpret_cast<const double*>(x);
    double* yd = reinterpret_cast<double*>(y);
    const __m256d ar = _mm256_set1_pd(alpha.real());
    const __m256d ai = _mm256_set1_pd(alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
        const __m256d xs = _mm256_permute_pd(xv, 0x5);  // swap re/im
        const __m256d prod = _mm256_fmaddsub_pd(ar, xv, _mm256_mul_pd(ai, xs));
        _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

IntensityStats weighted_intensity_avx2(const double* w, const cplx* ex, const cplx* ey, std::size_t n) {
    const double* exd = reinterpret_cast<const double*>(ex);
    const double* eyd = reinterpret_cast<const double*>(ey);
    __m256d sum = _mm256_setzero_pd();
    __m256d mx = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d a = _mm256_loadu_pd(exd + 2 * i);
        const __m256d b = _mm256_loadu_pd(eyd + 2 * i);
        const __m256d sq = _mm256_fmadd_pd(a, a, _mm256_mul_pd(b, b));
        const __m256d mag = _mm256_hadd_pd(sq, sq);  // m0 m0 m1 m1
        const __m256d wv = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0x50);
        const __m256d v = _mm256_mul_pd(wv, mag);
        sum = _mm256_add_pd(sum, v);
        mx = _mm256_max_pd(mx, v);
    }
    alignas(32) double s[4];
    alignas(32) double m[4];
    _mm256_store_pd(s, sum);
    _mm256_store_pd(m, mx);
    // Each point was counted in two lanes.
    IntensityStats out{s[0] + s[2], std::max(m[0], m[2])};
    for (; i < n; ++i) {
        const double v = w[i] * (std::norm(ex[i]) + std::norm(ey[i]));
        out.weighted_sum += v;
        out.weighted_max = std::max(out.weighted_max, v);
    }
    return out;
}

void lorentzian_sum_avx2(const double* x, std::size_t n, const double* centers, const double* half_widths,
                         const double* amplitudes, std::size_t n_peaks, double offset, double* out) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d xv = _mm256_loadu_pd(x + j);
        __m256d acc = _mm256_set1_pd(offset);
        for (std::size_t p = 0; p < n_peaks; ++p) {
            const __m256d d = _mm256_sub_pd(xv, _mm256_set1_pd(centers[p]));
            const double hw2s = half_widths[p] * half_widths[p];
            const __m256d hw2 = _mm256_set1_pd(hw2s);
            const __m256d num = _mm256_set1_pd(amplitudes[p] * hw2s);
            acc = _mm256_add_pd(acc, _mm256_div_pd(num, _mm256_fmadd_pd(d, d, hw2)));
        }
        _mm256_storeu_pd(out + j, acc);
    }
    for (; j < n; ++j) {
        double acc = offset;
        for (std::size_t p = 0; p < n_peaks; ++p) {
            const double d = x[j] - centers[p];
            const double hw2 = half_widths[p] * half_widths[p];
            acc += amplitudes[p] * hw2 / (d * d + hw2);
        }
        out[j] = acc;
    }
}

constexpr KernelTable kAvx2{
    Isa::avx2, project_scale_avx2, complex_axpy_avx2, weighted_intensity_avx2, lorentzian_sum_avx2,
};

}  // namespace

const KernelTable* avx2_table_impl() { return &kAvx2; }

}  // namespace slowlight::kernels
