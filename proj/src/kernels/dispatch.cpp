#include <cassert>
#include <cstdlib>
#include <string_view>

#include "slowlight/kernels/kernels.hpp"

namespace slowlight::kernels {

#ifdef SLOWLIGHT_HAVE_AVX2
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#ifdef SLOWLIGHT_HAVE_AVX2
    return avx2_table_impl();
#else
    return nullptr;
#endif
}

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(SLOWLIGHT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("SLOWLIGHT_ISA"); env != nullptr && std::string_view(env) == "scalar")
        return scalar_table();
    if (avx2_table() != nullptr && cpu_supports(Isa::avx2)) return *avx2_table();
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

Isa active_isa() { return active().isa; }

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
    }
    return "unknown";
}

void project_scale(std::span<const cplx> eta, std::span<const double> ux, std::span<const double> uy, double vx,
                   double vy, std::span<cplx> out) {
    assert(eta.size() == ux.size() && ux.size() == uy.size() && out.size() == eta.size());
    active().project_scale(eta.data(), ux.data(), uy.data(), vx, vy, out.data(), out.size());
}

void complex_axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
    assert(x.size() == y.size());
    active().complex_axpy(alpha, x.data(), y.data(), y.size());
}

IntensityStats weighted_intensity(std::span<const double> w, std::span<const cplx> ex, std::span<const cplx> ey) {
    assert(w.size() == ex.size() && ex.size() == ey.size());
    return active().weighted_intensity(w.data(), ex.data(), ey.data(), w.size());
}

void lorentzian_sum(std::span<const double> x, std::span<const double> centers, std::span<const double> half_widths,
                    std::span<const double> amplitudes, double offset, std::span<double> out) {
    assert(centers.size() == half_widths.size() && centers.size() == amplitudes.size() && out.size() == x.size());
    active().lorentzian_sum(x.data(), x.size(), centers.data(), half_widths.data(), amplitudes.data(), centers.size(),
                            offset, out.data());
}

}  // namespace slowlight::kernels
