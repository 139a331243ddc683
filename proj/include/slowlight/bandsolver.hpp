#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "slowlight/geometry.hpp"

namespace slowlight {

enum class Parity { even, odd, unclassified };
std::string_view parity_name(Parity p);

// Bloch wavevector along the waveguide axis in units of 2 pi / a.
class BlochK {
public:
    explicit BlochK(double k_norm);
    double k_norm() const { return k_norm_; }
    double kx(double a_nm) const { return kTwoPi * k_norm_ / a_nm; }
    Vec2 vector(double a_nm) const { return {kx(a_nm), 0.0}; }

private:
    double k_norm_;
};

// n evenly spaced samples over [lo, hi], inclusive.
std::vector<BlochK> uniform_k_path(int n, double lo = 0.25, double hi = 0.5);

// Theta[i][j] = eta(G_i - G_j) (k + G_i).(k + G_j), symmetrised.
Eigen::MatrixXcd assemble_operator(const PlaneWaveBasis& basis, const EpsilonOperator& eps_op, Vec2 k);

struct Eigenpairs {
    Eigen::VectorXd mu;        // (omega / c)^2 in rad^2/nm^2, ascending
    Eigen::MatrixXcd vectors;  // orthonormal columns
};

// Lowest n_bands eigenpairs of a Hermitian matrix (LAPACK zheevr).
Eigenpairs solve_bands(const Eigen::MatrixXcd& theta, int n_bands);

inline double a_over_lambda(double mu, double a_nm) {
    return a_nm * std::sqrt(std::max(mu, 0.0)) / kTwoPi;
}

struct ParityResult {
    Parity parity = Parity::unclassified;
    double overlap = 0.0;  // <Ey, M Ey> / <Ey, Ey> with M the y -> -y mirror
};

inline constexpr double kParityThreshold = 0.9;

// Mirror parity of the mode's Ey. Ey's Fourier coefficients are built with the
// inverse-rule operator, so the overlap is evaluated exactly in the basis.
ParityResult classify_parity(const Eigen::VectorXcd& h, const PlaneWaveBasis& basis, const EpsilonOperator& eps_op,
                             Vec2 k);

struct ModeField {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double dx = 0.0;
    double dy = 0.0;
    double x0 = 0.0;
    double y0 = 0.0;
    std::vector<std::complex<double>> hz;
    std::vector<std::complex<double>> ex;
    std::vector<std::complex<double>> ey;

    double x(std::size_t ix) const { return x0 + static_cast<double>(ix) * dx; }
    double y(std::size_t iy) const { return y0 + static_cast<double>(iy) * dy; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
    double intensity(std::size_t i) const { return std::norm(ex[i]) + std::norm(ey[i]); }
};

// Hz(r) = sum_G h_G exp(i (k+G).r) at a single point.
std::complex<double> evaluate_hz(const Eigen::VectorXcd& h, const PlaneWaveBasis& basis, Vec2 k, Vec2 r);

// Hz and in-plane E = (1/eps)(dHz/dy, -dHz/dx) on the pixel centres of `grid`,
// scaled so that max |E| = 1. By default the spectral curl is divided by the
// rasterised eps. With eps_op the division is done in the basis (E = eta D,
// the inverse rule the operator itself uses), which gives a continuous
// truncated series without the Gibbs spikes of D/eps at hole edges.
ModeField reconstruct_field(const Eigen::VectorXcd& h, const PlaneWaveBasis& basis, Vec2 k, const EpsilonGrid& grid,
                            const EpsilonOperator* eps_op = nullptr);

struct SolverParams {
    int cutoff = 4;
    int n_bands = 24;
    int threads = 0;  // 0: hardware concurrency
    // Fixed 2D background index. When empty the slab effective index at
    // band_center_a_over_lambda is used.
    std::optional<double> n_eff;
    double band_center_a_over_lambda = 0.37;
};

struct ModeSample {
    double a_over_lambda = 0.0;
    double mu = 0.0;
    ParityResult parity;
    Eigen::VectorXcd eigvec;
};

struct KSample {
    Vec2 k;
    double k_norm = 0.0;  // kx * a / 2 pi
    std::vector<ModeSample> modes;
};

struct BandStructure {
    WaveguideGeometry geom;
    Supercell cell;
    PlaneWaveBasis basis;
    std::shared_ptr<const EpsilonOperator> eps;
    double n_eff = 0.0;
    std::vector<KSample> samples;
    // tracks[b][ik] is the index into samples[ik].modes followed by band b.
    std::vector<std::vector<std::size_t>> tracks;

    double a() const { return geom.lattice_constant_nm; }
    const ModeSample& tracked(std::size_t band, std::size_t ik) const { return samples[ik].modes[tracks[band][ik]]; }
};

double resolve_n_eff(const WaveguideGeometry& geom, const SolverParams& params);

// Band structure of an arbitrary cell over a list of 2D wavevectors.
BandStructure sweep_cell(const Supercell& cell, const WaveguideGeometry& geom, const SolverParams& params,
                         std::span<const Vec2> ks, double n_eff);

// Waveguide supercell sweep along kx.
BandStructure band_sweep(const WaveguideGeometry& geom, const SolverParams& params, std::span<const BlochK> k_path);

// Follow bands across k by maximal eigenvector overlap with the previous k,
// falling back to frequency order for anything below the threshold.
std::vector<std::vector<std::size_t>> track_bands(const std::vector<KSample>& samples, double threshold = 0.5);

}  // namespace slowlight
