#pragma once

// Independent reference calculations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slowlight/bandsolver.hpp"

namespace slowlight::oracle {

// Folded free-photon lines |k + G| a / (2 pi n) for a rectangular a x h cell,
// enumerated independently of the library's basis construction.
inline std::vector<double> folded_light_lines(double a, double h, Vec2 k, double n, std::size_t count) {
    std::vector<double> f;
    for (int m = -6; m <= 6; ++m)
        for (int l = -60; l <= 60; ++l) {
            const double gx = k.x + 2.0 * M_PI * m / a;
            const double gy = k.y + 2.0 * M_PI * l / h;
            f.push_back(std::hypot(gx, gy) * a / (2.0 * M_PI * n));
        }
    std::sort(f.begin(), f.end());
    f.resize(count);
    return f;
}

// Transfer-matrix dispersion of a two-layer stack for fields parallel to the
// layers: cos(K h) = cos(k1 d1) cos(k2 d2) - (n1/n2 + n2/n1)/2 sin(k1 d1) sin(k2 d2).
inline double stack_rhs(double omega, double n1, double d1, double n2, double d2) {
    const double p = omega * n1 * d1;
    const double q = omega * n2 * d2;
    return std::cos(p) * std::cos(q) - 0.5 * (n1 / n2 + n2 / n1) * std::sin(p) * std::sin(q);
}

// Edges (omega / c, rad/nm) of the first gap at K = pi / h: the first two roots of rhs = -1.
inline std::pair<double, double> first_gap_edges(double n1, double d1, double n2, double d2) {
    auto f = [&](double w) { return stack_rhs(w, n1, d1, n2, d2) + 1.0; };
    std::vector<double> roots;
    const double h = d1 + d2;
    const double w_max = 2.0 * M_PI / (h * std::min(n1, n2));
    const int steps = 200000;
    double prev = f(1e-9);
    double w_prev = 1e-9;
    for (int i = 1; i <= steps && roots.size() < 2; ++i) {
        const double w = w_max * i / steps;
        const double v = f(w);
        if ((v > 0.0) != (prev > 0.0)) {
            double lo = w_prev, hi = w;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                ((f(mid) > 0.0) == (f(lo) > 0.0) ? lo : hi) = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev = v;
        w_prev = w;
    }
    if (roots.size() != 2) throw std::runtime_error("transfer-matrix gap edges not bracketed");
    return {roots[0], roots[1]};
}

// A stripe of width 2 r (index 1) in a layer of index n1, period h along y,
// solved with a G_y-only basis at the zone edge. Returns sqrt(mu) of the two
// lowest bands next to the transfer-matrix edges.
struct StripeComparison {
    double pwe_lo = 0.0, pwe_hi = 0.0;
    double tm_lo = 0.0, tm_hi = 0.0;
};

inline StripeComparison stripe_vs_transfer_matrix(double n1 = 2.4, double h = 300.0, double r = 60.0, int orders = 400) {
    WaveguideGeometry g;
    Supercell cell;
    cell.lattice_x = {g.lattice_constant_nm, 0.0};
    cell.lattice_y = {0.0, h};
    cell.hole_centers = {{0.0, 0.0}};
    cell.hole_radius_nm = r;
    cell.shape = InclusionShape::stripe;
    std::vector<std::array<int, 2>> o;
    for (int l = -orders; l <= orders; ++l) o.push_back({0, l});
    const auto basis = basis_from_orders(cell, o);
    const auto op = epsilon_fourier(cell, g, basis, n1);
    const auto pairs = solve_bands(assemble_operator(basis, op, {0.0, M_PI / h}), 2);
    const auto [lo, hi] = first_gap_edges(n1, h - 2.0 * r, 1.0, 2.0 * r);
    return {std::sqrt(pairs.mu(0)), std::sqrt(pairs.mu(1)), lo, hi};
}

// n_g = |dk_norm / d(a/lambda)| from a central difference of half-width dk
// (in units of 2 pi / a) around sample ik, re-solving the operator at k +- dk
// and following the mode by eigenvector overlap.
inline double fine_fd_group_index(const BandStructure& bs, std::size_t track, std::size_t ik, double dk = 1e-4) {
    const auto& mode = bs.tracked(track, ik);
    const double a = bs.a();
    const int n_bands = static_cast<int>(bs.samples[ik].modes.size());
    double f[2];
    for (int s = 0; s < 2; ++s) {
        Vec2 k = bs.samples[ik].k;
        k.x += (s == 0 ? -1.0 : 1.0) * dk * 2.0 * M_PI / a;
        const auto pairs = solve_bands(assemble_operator(bs.basis, *bs.eps, k), n_bands);
        Eigen::Index best = 0;
        double best_overlap = -1.0;
        for (Eigen::Index j = 0; j < pairs.vectors.cols(); ++j) {
            const double o = std::abs(pairs.vectors.col(j).dot(mode.eigvec));
            if (o > best_overlap) {
                best_overlap = o;
                best = j;
            }
        }
        f[s] = a_over_lambda(pairs.mu(best), a);
    }
    return std::abs(2.0 * dk / (f[1] - f[0]));
}

}  // namespace slowlight::oracle
