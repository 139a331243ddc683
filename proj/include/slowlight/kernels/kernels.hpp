#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Every kernel has a portable scalar reference and,
// on x86-64, an AVX2/FMA variant. The variant is chosen once at startup from
// CPUID; SLOWLIGHT_ISA=scalar in the environment forces the reference path.

namespace slowlight::kernels {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

struct IntensityStats {
    double weighted_sum = 0.0;  // sum_i w_i (|ex_i|^2 + |ey_i|^2)
    double weighted_max = 0.0;  // max_i w_i (|ex_i|^2 + |ey_i|^2)
};

struct KernelTable {
    Isa isa;
    // out_i = eta_i * (ux_i * vx + uy_i * vy)
    void (*project_scale)(const cplx* eta, const double* ux, const double* uy, double vx, double vy,
                          cplx* out, std::size_t n);
    // y_i += alpha * x_i
    void (*complex_axpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
    IntensityStats (*weighted_intensity)(const double* w, const cplx* ex, const cplx* ey, std::size_t n);
    // out_j = offset + sum_p amp_p * hw_p^2 / ((x_j - c_p)^2 + hw_p^2)
    void (*lorentzian_sum)(const double* x, std::size_t n, const double* centers, const double* half_widths,
                           const double* amplitudes, std::size_t n_peaks, double offset, double* out);
};

const KernelTable& scalar_table();
// Null when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);
Isa active_isa();
const KernelTable& active();
std::string_view isa_name(Isa isa);

// Span-based front ends over the active table.
void project_scale(std::span<const cplx> eta, std::span<const double> ux, std::span<const double> uy, double vx,
                   double vy, std::span<cplx> out);
void complex_axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
IntensityStats weighted_intensity(std::span<const double> w, std::span<const cplx> ex, std::span<const cplx> ey);
void lorentzian_sum(std::span<const double> x, std::span<const double> centers, std::span<const double> half_widths,
                    std::span<const double> amplitudes, double offset, std::span<double> out);

}  // namespace slowlight::kernels
