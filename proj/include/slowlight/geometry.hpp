#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "slowlight/vec2.hpp"

namespace slowlight {

// W1 line-defect waveguide in a triangular lattice of air holes. Lengths in nm.
struct WaveguideGeometry {
    double lattice_constant_nm = 261.0;
    double hole_radius_nm = 65.0;
    double slab_thickness_nm = 160.0;
    double n_bulk = 2.4;
    double n_clad = 1.0;
    int rows_per_side = 5;
    double emitter_depth_nm = 40.0;

    // Throws ParameterError naming the first offending field.
    void validate() const;
};

enum class InclusionShape {
    disk,
    // Infinite along x, full width 2 * radius along y. Used for the 1D stack limit.
    stripe,
};

// Periodic cell holding low-index inclusions in a background medium.
// lattice_x is always (a, 0); lattice_y may be oblique (primitive cell).
struct Supercell {
    Vec2 lattice_x;
    Vec2 lattice_y;
    std::vector<Vec2> hole_centers;
    double hole_radius_nm = 0.0;
    InclusionShape shape = InclusionShape::disk;

    double area() const { return std::abs(cross(lattice_x, lattice_y)); }
    double period() const { return lattice_x.x; }
    // Height of the rectangular fundamental domain [-a/2, a/2) x [-h/2, h/2).
    double height() const { return lattice_y.y; }
};

// The waveguide supercell: rows j = -N..N at y = j*sqrt(3)/2*a with x offset
// (j mod 2)*a/2, row j = 0 removed, plus the boundary row j = -(N+1).
// lattice_y = (0, (2N+2)*sqrt(3)/2*a): rectangular, so kx = pi/a is a true
// zone edge, and the stacking continues across the boundary without a fault.
Supercell build_supercell(const WaveguideGeometry& geom);

// Defect-free triangular primitive cell with one hole at the origin.
Supercell build_bulk_cell(const WaveguideGeometry& geom);

// Reciprocal lattice vectors b1, b2 with a_i . b_j = 2 pi delta_ij.
struct ReciprocalLattice {
    Vec2 b1;
    Vec2 b2;
};
ReciprocalLattice reciprocal(const Supercell& cell);

struct PlaneWaveBasis {
    std::vector<Vec2> g;                  // rad/nm
    std::vector<std::array<int, 2>> orders;  // (m, n): G = m*b1 + n*b2
    std::vector<std::size_t> mirror;     // index of (Gx, -Gy), or npos when absent
    int cutoff = 0;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t size() const { return g.size(); }
    std::size_t index_of_zero() const;
    bool mirror_closed() const;
};

// All reciprocal vectors with |G| <= (cutoff + 1/2) * 2 pi / a. The count per
// axis along x is 2*cutoff + 1; along y it scales with the cell aspect ratio.
PlaneWaveBasis build_basis(const Supercell& cell, int cutoff);

// Basis restricted to an explicit list of integer orders.
PlaneWaveBasis basis_from_orders(const Supercell& cell, std::vector<std::array<int, 2>> orders);

struct EpsilonOperator {
    Eigen::MatrixXcd eps;  // eps(G_i - G_j)
    Eigen::MatrixXcd eta;  // inverse of eps
    double n_eff = 0.0;
    double n_clad = 1.0;
};

// Closed-form Fourier coefficient of the cell permittivity at reciprocal vector g.
std::complex<double> epsilon_coefficient(const Supercell& cell, Vec2 g, double n_background,
                                         double n_inclusion);

EpsilonOperator epsilon_fourier(const Supercell& cell, const WaveguideGeometry& geom,
                                const PlaneWaveBasis& basis, double n_eff);

// Effective index of the fundamental even TE mode of a symmetric slab.
double slab_effective_index(double thickness_nm, double n_core, double n_clad, double wavelength_nm);

// Hard-edged permittivity samples at pixel centres over the rectangular
// fundamental domain. Row-major, index = iy * nx + ix.
struct EpsilonGrid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double dx = 0.0;
    double dy = 0.0;
    double x0 = 0.0;  // centre of the first pixel
    double y0 = 0.0;
    std::vector<double> eps;

    double x(std::size_t ix) const { return x0 + static_cast<double>(ix) * dx; }
    double y(std::size_t iy) const { return y0 + static_cast<double>(iy) * dy; }
    double at(std::size_t ix, std::size_t iy) const { return eps[iy * nx + ix]; }
};

EpsilonGrid rasterize_epsilon(const Supercell& cell, const WaveguideGeometry& geom, double n_eff,
                              int pixels_per_a);

}  // namespace slowlight
