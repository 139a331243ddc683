#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "slowlight/errors.hpp"
#include "slowlight/geometry.hpp"
#include "support.hpp"

using namespace slowlight;

namespace {

WaveguideGeometry paper() { return {}; }

bool contains_modulo(const Supercell& cell, Vec2 p, double tol = 1e-9) {
    for (const Vec2& c : cell.hole_centers) {
        const Vec2 d = p - c;
        // d must be an integer combination of the lattice vectors.
        const double ny = d.y / cell.lattice_y.y;
        const double nx = (d.x - std::round(ny) * cell.lattice_y.x) / cell.lattice_x.x;
        if (std::abs(ny - std::round(ny)) < tol && std::abs(nx - std::round(nx)) < tol) return true;
    }
    return false;
}

std::string failing_field(const WaveguideGeometry& g) {
    try {
        g.validate();
    } catch (const ParameterError& e) {
        return e.field();
    }
    return "";
}

// Bisection on u tan u = sqrt(V^2 - u^2): an oracle independent of the library's root finder.
double bisection_neff(double d, double n_core, double n_clad, double lambda) {
    const double k0 = 2.0 * M_PI / lambda;
    const double v = 0.5 * k0 * d * std::sqrt(n_core * n_core - n_clad * n_clad);
    double lo = 0.0;
    double hi = std::min(v, M_PI / 2.0 - 1e-15);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid * std::tan(mid) - std::sqrt(v * v - mid * mid);
        (f > 0.0 ? hi : lo) = mid;
    }
    const double kappa = 2.0 * 0.5 * (lo + hi) / d;
    return std::sqrt(n_core * n_core - (kappa / k0) * (kappa / k0));
}

// Fourier coefficients of f(eps) on a rasterised rectangular cell by direct quadrature.
std::map<std::pair<int, int>, std::complex<double>> quadrature_coefficients(const Supercell& cell,
                                                                           const EpsilonGrid& grid, int dm, int dn,
                                                                           bool inverse) {
    const auto rl = reciprocal(cell);
    std::vector<std::vector<std::complex<double>>> rows(2 * dm + 1, std::vector<std::complex<double>>(grid.ny));
    for (int m = -dm; m <= dm; ++m)
        for (std::size_t iy = 0; iy < grid.ny; ++iy) {
            std::complex<double> s = 0.0;
            for (std::size_t ix = 0; ix < grid.nx; ++ix) {
                const double f = inverse ? 1.0 / grid.at(ix, iy) : grid.at(ix, iy);
                s += std::polar(f, -m * rl.b1.x * grid.x(ix));
            }
            rows[m + dm][iy] = s;
        }
    std::map<std::pair<int, int>, std::complex<double>> c;
    for (int m = -dm; m <= dm; ++m)
        for (int n = -dn; n <= dn; ++n) {
            std::complex<double> s = 0.0;
            for (std::size_t iy = 0; iy < grid.ny; ++iy) s += rows[m + dm][iy] * std::polar(1.0, -n * rl.b2.y * grid.y(iy));
            c[{m, n}] = s / static_cast<double>(grid.nx * grid.ny);
        }
    return c;
}

}  // namespace

TEST_CASE("geometry validation names the offending field") {
    CHECK_NOTHROW(paper().validate());
    auto g = paper();
    g.hole_radius_nm = 140.0;
    CHECK(failing_field(g) == "r_nm");
    CHECK_THROWS_AS(build_supercell(g), ParameterError);
    g = paper();
    g.slab_thickness_nm = 0.0;
    CHECK(failing_field(g) == "d_nm");
    g = paper();
    g.n_bulk = 1.0;
    CHECK(failing_field(g) == "n_bulk");
    g = paper();
    g.n_clad = 0.9;
    CHECK(failing_field(g) == "n_clad");
    g = paper();
    g.rows_per_side = 2;
    CHECK(failing_field(g) == "rows_per_side");
    g = paper();
    g.emitter_depth_nm = 161.0;
    CHECK(failing_field(g) == "emitter_depth_nm");
    g = paper();
    g.lattice_constant_nm = -1.0;
    CHECK(failing_field(g) == "a_nm");
}

TEST_CASE("W1 supercell layout") {
    const auto g = paper();
    const auto cell = build_supercell(g);
    const double pitch = std::sqrt(3.0) / 2.0 * g.lattice_constant_nm;
    CHECK(cell.lattice_x.x == g.lattice_constant_nm);
    CHECK(cell.lattice_x.y == 0.0);
    CHECK(cell.lattice_y.x == 0.0);
    CHECK_REL(cell.lattice_y.y, 12.0 * pitch, 1e-12);

    // 2 x 5 rows flank the defect; the boundary row at y = -W/2 is shared with
    // the neighbouring cell and completes the stacking.
    std::size_t interior = 0;
    for (const Vec2& c : cell.hole_centers) {
        CHECK(std::abs(c.y) > 0.5 * pitch);
        CHECK(c.x >= -g.lattice_constant_nm / 2.0);
        CHECK(c.x < g.lattice_constant_nm / 2.0);
        if (std::abs(c.y) < cell.height() / 2.0 - 1e-9) ++interior;
    }
    CHECK(interior == 10);
    CHECK(cell.hole_centers.size() == 11);

    SUBCASE("mirror symmetric in y") {
        for (const Vec2& c : cell.hole_centers) CHECK(contains_modulo(cell, {c.x, -c.y}));
    }
    SUBCASE("invariant under x -> x + a") {
        for (const Vec2& c : cell.hole_centers) CHECK(contains_modulo(cell, {c.x + g.lattice_constant_nm, c.y}));
    }
    SUBCASE("triangular stacking: every hole has six neighbours at distance a") {
        for (const Vec2& c : cell.hole_centers) {
            if (std::abs(c.y) < 1.5 * pitch) continue;  // rows next to the defect lose two
            int neighbours = 0;
            for (int i = -2; i <= 2; ++i)
                for (int j = -1; j <= 1; ++j)
                    for (const Vec2& o : cell.hole_centers) {
                        const Vec2 p = o + static_cast<double>(i) * cell.lattice_x + static_cast<double>(j) * cell.lattice_y;
                        if (std::abs(norm(p - c) - g.lattice_constant_nm) < 1e-6) ++neighbours;
                    }
            CHECK(neighbours == 6);
        }
    }
}

TEST_CASE("plane-wave basis") {
    const auto cell = build_supercell(paper());
    const auto basis = build_basis(cell, 4);
    REQUIRE(basis.index_of_zero() != PlaneWaveBasis::npos);
    CHECK(basis.mirror_closed());
    int max_m = 0;
    for (const auto& o : basis.orders) {
        max_m = std::max(max_m, std::abs(o[0]));
        const bool has_negative = std::any_of(basis.orders.begin(), basis.orders.end(),
                                              [&](const auto& p) { return p[0] == -o[0] && p[1] == -o[1]; });
        CHECK(has_negative);
    }
    CHECK(2 * max_m + 1 == 9);  // nine orders along x at the default cutoff
    CHECK_THROWS_AS(build_basis(cell, 0), ParameterError);
}

TEST_CASE("permittivity Fourier coefficients") {
    const auto g = paper();
    const double n_eff = 2.0;

    SUBCASE("no holes -> n_eff^2 identity") {
        auto u = g;
        u.hole_radius_nm = 0.0;
        const auto cell = build_supercell(u);
        const auto basis = build_basis(cell, 3);
        const auto op = epsilon_fourier(cell, u, basis, n_eff);
        const auto id = Eigen::MatrixXcd::Identity(op.eps.rows(), op.eps.cols());
        CHECK((op.eps - n_eff * n_eff * id).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((op.eta - id / (n_eff * n_eff)).cwiseAbs().maxCoeff() < 1e-15);
    }

    SUBCASE("single hole: G = 0 entry is the area-weighted mean") {
        const auto cell = build_bulk_cell(g);
        const double fill = M_PI * 65.0 * 65.0 / cell.area();
        const auto e0 = epsilon_coefficient(cell, {0.0, 0.0}, n_eff, 1.0);
        CHECK_REL(e0.real(), n_eff * n_eff + (1.0 - n_eff * n_eff) * fill, 1e-14);
        CHECK(e0.imag() == 0.0);
    }

    const auto cell = build_supercell(g);
    const auto basis = build_basis(cell, 4);
    const auto op = epsilon_fourier(cell, g, basis, n_eff);

    SUBCASE("Hermitian, eps(-G) = eps(G)*, eta eps = 1") {
        CHECK((op.eps - op.eps.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        const auto rl = reciprocal(cell);
        for (int m = -3; m <= 3; ++m)
            for (int n = -10; n <= 10; ++n) {
                const Vec2 gv = static_cast<double>(m) * rl.b1 + static_cast<double>(n) * rl.b2;
                const auto a = epsilon_coefficient(cell, gv, n_eff, 1.0);
                const auto b = epsilon_coefficient(cell, -gv, n_eff, 1.0);
                CHECK(std::abs(a - std::conj(b)) < 1e-14);
            }
        const auto id = Eigen::MatrixXcd::Identity(op.eps.rows(), op.eps.cols());
        CHECK((op.eta * op.eps - id).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("coefficients do not depend on the cutoff") {
        const auto bulk = build_bulk_cell(g);
        const auto small = build_basis(bulk, 4);
        const auto big = build_basis(bulk, 8);
        const auto op4 = epsilon_fourier(bulk, g, small, n_eff);
        const auto op8 = epsilon_fourier(bulk, g, big, n_eff);
        // Match the low-|G| differences present in both bases.
        double worst = 0.0;
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 20; ++j) {
                std::size_t bi = 0, bj = 0;
                for (std::size_t k = 0; k < big.size(); ++k) {
                    if (big.orders[k] == small.orders[i]) bi = k;
                    if (big.orders[k] == small.orders[j]) bj = k;
                }
                worst = std::max(worst, std::abs(op4.eps(i, j) - op8.eps(bi, bj)));
            }
        CHECK(worst < 1e-12);
    }

    SUBCASE("closed form against quadrature of the rasterised permittivity") {
        const auto grid = rasterize_epsilon(cell, g, n_eff, 128);
        const auto q = quadrature_coefficients(cell, grid, 3, 10, false);
        const auto rl = reciprocal(cell);
        double worst = 0.0;
        for (const auto& [mn, v] : q) {
            const Vec2 gv = static_cast<double>(mn.first) * rl.b1 + static_cast<double>(mn.second) * rl.b2;
            worst = std::max(worst, std::abs(v - epsilon_coefficient(cell, gv, n_eff, 1.0)));
        }
        // Pixelation error of hard-edged disks at 128 px/a, relative to the contrast.
        CHECK(worst / (n_eff * n_eff - 1.0) < 2e-3);
    }

    SUBCASE("eta spectrum brackets 1/n_eff^2 .. 1/n_clad^2, as the quadrature of 1/eps does") {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.eta, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        CHECK_REL(lo, 1.0 / (n_eff * n_eff), 0.05);
        CHECK_REL(hi, 1.0, 0.05);

        int dm = 0, dn = 0;
        for (const auto& o : basis.orders) {
            dm = std::max(dm, 2 * std::abs(o[0]));
            dn = std::max(dn, 2 * std::abs(o[1]));
        }
        const auto grid = rasterize_epsilon(cell, g, n_eff, 128);
        const auto q = quadrature_coefficients(cell, grid, dm, dn, true);
        Eigen::MatrixXcd laurent(basis.size(), basis.size());
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = 0; j < basis.size(); ++j)
                laurent(i, j) = q.at({basis.orders[i][0] - basis.orders[j][0], basis.orders[i][1] - basis.orders[j][1]});
        laurent = (0.5 * (laurent + laurent.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> el(laurent, Eigen::EigenvaluesOnly);
        CHECK_REL(lo, el.eigenvalues().minCoeff(), 0.05);
        CHECK_REL(hi, el.eigenvalues().maxCoeff(), 0.05);
    }

    SUBCASE("n_eff outside (n_clad, n_bulk] is rejected") {
        CHECK_THROWS_AS(epsilon_fourier(cell, g, basis, 1.0), ParameterError);
        CHECK_THROWS_AS(epsilon_fourier(cell, g, basis, 2.5), ParameterError);
    }
}

TEST_CASE("slab effective index") {
    CHECK(slab_effective_index(160.0, 2.4, 2.4, 707.0) == 2.4);
    CHECK_REL(slab_effective_index(7070.0, 2.4, 1.0, 707.0), 2.4, 1e-3 / 2.4);
    const double n = slab_effective_index(160.0, 2.4, 1.0, 707.0);
    CHECK(n > 1.0);
    CHECK(n < 2.4);
    CHECK(std::abs(n - bisection_neff(160.0, 2.4, 1.0, 707.0)) < 1e-9);

    double prev = 1.0;
    for (double d = 20.0; d <= 1000.0; d += 20.0) {
        const double v = slab_effective_index(d, 2.4, 1.0, 707.0);
        CHECK(v > prev);
        prev = v;
    }
    prev = 1.0;
    for (double core = 1.2; core <= 3.5; core += 0.1) {
        const double v = slab_effective_index(160.0, core, 1.0, 707.0);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(slab_effective_index(0.0, 2.4, 1.0, 707.0), ParameterError);
    CHECK_THROWS_AS(slab_effective_index(160.0, 2.4, 1.0, -1.0), ParameterError);
}

TEST_CASE("rasterised permittivity") {
    const auto g = paper();
    const auto cell = build_supercell(g);
    const double n_eff = 2.0;

    SUBCASE("no holes -> uniform") {
        auto u = g;
        u.hole_radius_nm = 0.0;
        const auto grid = rasterize_epsilon(build_supercell(u), u, n_eff, 32);
        CHECK(std::all_of(grid.eps.begin(), grid.eps.end(), [&](double e) { return e == n_eff * n_eff; }));
    }
    SUBCASE("hole area fraction within 2% at 64 px/a") {
        const auto grid = rasterize_epsilon(cell, g, n_eff, 64);
        std::size_t holes = 0;
        for (double e : grid.eps) holes += e == 1.0;
        CHECK(std::all_of(grid.eps.begin(), grid.eps.end(), [&](double e) { return e == 1.0 || e == n_eff * n_eff; }));
        const double frac = static_cast<double>(holes) / static_cast<double>(grid.eps.size());
        // The boundary-row disk is split between the top and bottom edges.
        const double expected = M_PI * 65.0 * 65.0 * 11.0 / cell.area();
        CHECK_REL(frac, expected, 0.02);
    }
    SUBCASE("mirror symmetric in y") {
        const auto grid = rasterize_epsilon(cell, g, n_eff, 64);
        std::size_t mismatched = 0;
        for (std::size_t iy = 0; iy < grid.ny; ++iy)
            for (std::size_t ix = 0; ix < grid.nx; ++ix) mismatched += grid.at(ix, iy) != grid.at(ix, grid.ny - 1 - iy);
        CHECK(mismatched == 0);
    }
    CHECK_THROWS_AS(rasterize_epsilon(cell, g, n_eff, 8), ParameterError);
}
