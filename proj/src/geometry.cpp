#include "slowlight/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/tools/roots.hpp>

#include "slowlight/errors.hpp"

namespace slowlight {

namespace {

const double kSqrt3 = std::sqrt(3.0);

}  // namespace

void WaveguideGeometry::validate() const {
    if (!(lattice_constant_nm > 0.0)) throw ParameterError("a_nm", "lattice constant must be positive");
    if (!(hole_radius_nm >= 0.0)) throw ParameterError("r_nm", "hole radius must not be negative");
    if (!(hole_radius_nm < lattice_constant_nm / 2.0))
        throw ParameterError("r_nm", "hole radius must be below a/2 so holes do not overlap");
    if (!(slab_thickness_nm > 0.0)) throw ParameterError("d_nm", "slab thickness must be positive");
    if (!(n_clad >= 1.0)) throw ParameterError("n_clad", "cladding index must be >= 1");
    if (!(n_bulk > n_clad)) throw ParameterError("n_bulk", "slab index must exceed the cladding index");
    if (rows_per_side < 3) throw ParameterError("rows_per_side", "need at least 3 rows per side");
    if (!(emitter_depth_nm >= 0.0 && emitter_depth_nm <= slab_thickness_nm))
        throw ParameterError("emitter_depth_nm", "emitter depth must lie within the slab");
}

Supercell build_supercell(const WaveguideGeometry& geom) {
    geom.validate();
    const double a = geom.lattice_constant_nm;
    const int rows = geom.rows_per_side;
    const double row_pitch = kSqrt3 / 2.0 * a;

    Supercell cell;
    cell.lattice_x = {a, 0.0};
    // An even number of row pitches keeps the A/B stacking intact across the
    // boundary; the row at y = -W/2 is shared with the next cell.
    cell.lattice_y = {0.0, (2 * rows + 2) * row_pitch};
    cell.hole_centers.push_back({((rows + 1) % 2 == 1) ? -a / 2.0 : 0.0, -(rows + 1) * row_pitch});
    cell.hole_radius_nm = geom.hole_radius_nm;
    cell.shape = InclusionShape::disk;
    for (int j = -rows; j <= rows; ++j) {
        if (j == 0) continue;
        const double x = (std::abs(j) % 2 == 1) ? a / 2.0 : 0.0;
        // Fold into [-a/2, a/2) so the centres sit inside the rectangular domain.
        cell.hole_centers.push_back({x >= a / 2.0 ? x - a : x, j * row_pitch});
    }
    return cell;
}

Supercell build_bulk_cell(const WaveguideGeometry& geom) {
    geom.validate();
    const double a = geom.lattice_constant_nm;
    Supercell cell;
    cell.lattice_x = {a, 0.0};
    cell.lattice_y = {a / 2.0, kSqrt3 / 2.0 * a};
    cell.hole_radius_nm = geom.hole_radius_nm;
    cell.hole_centers = {{0.0, 0.0}};
    return cell;
}

ReciprocalLattice reciprocal(const Supercell& cell) {
    const Vec2 a1 = cell.lattice_x;
    const Vec2 a2 = cell.lattice_y;
    const double det = cross(a1, a2);
    // b1 is orthogonal to a2, b2 orthogonal to a1.
    return {{kTwoPi * a2.y / det, -kTwoPi * a2.x / det}, {-kTwoPi * a1.y / det, kTwoPi * a1.x / det}};
}

std::size_t PlaneWaveBasis::index_of_zero() const {
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (orders[i][0] == 0 && orders[i][1] == 0) return i;
    return npos;
}

bool PlaneWaveBasis::mirror_closed() const {
    return std::none_of(mirror.begin(), mirror.end(), [](std::size_t i) { return i == npos; });
}

namespace {

void fill_mirror_map(PlaneWaveBasis& basis, const Supercell& cell) {
    const double tol = 1e-9 * kTwoPi / cell.period();
    std::map<std::pair<long long, long long>, std::size_t> lookup;
    auto key = [tol](Vec2 g) {
        return std::make_pair(std::llround(g.x / tol), std::llround(g.y / tol));
    };
    for (std::size_t i = 0; i < basis.g.size(); ++i) lookup.emplace(key(basis.g[i]), i);
    basis.mirror.assign(basis.g.size(), PlaneWaveBasis::npos);
    for (std::size_t i = 0; i < basis.g.size(); ++i) {
        const auto it = lookup.find(key({basis.g[i].x, -basis.g[i].y}));
        if (it != lookup.end()) basis.mirror[i] = it->second;
    }
}

}  // namespace

PlaneWaveBasis basis_from_orders(const Supercell& cell, std::vector<std::array<int, 2>> orders) {
    const auto rl = reciprocal(cell);
    PlaneWaveBasis basis;
    basis.orders = std::move(orders);
    basis.g.reserve(basis.orders.size());
    int max_m = 0;
    for (const auto& o : basis.orders) {
        basis.g.push_back(static_cast<double>(o[0]) * rl.b1 + static_cast<double>(o[1]) * rl.b2);
        max_m = std::max(max_m, std::abs(o[0]));
    }
    basis.cutoff = max_m;
    fill_mirror_map(basis, cell);
    return basis;
}

PlaneWaveBasis build_basis(const Supercell& cell, int cutoff) {
    if (cutoff < 1) throw ParameterError("cutoff", "plane-wave cutoff must be >= 1");
    const auto rl = reciprocal(cell);
    const double g_max = (cutoff + 0.5) * kTwoPi / cell.period();
    // Bounds on the integer orders from |G| <= g_max; generous, then filtered.
    const int m_max = static_cast<int>(std::ceil(g_max * norm(cell.lattice_x) / kTwoPi)) + 1;
    const int n_max = static_cast<int>(std::ceil(g_max * norm(cell.lattice_y) / kTwoPi)) + m_max + 1;

    std::vector<std::array<int, 2>> orders;
    for (int m = -m_max; m <= m_max; ++m) {
        for (int n = -n_max; n <= n_max; ++n) {
            const Vec2 g = static_cast<double>(m) * rl.b1 + static_cast<double>(n) * rl.b2;
            if (norm(g) <= g_max * (1.0 + 1e-12)) orders.push_back({m, n});
        }
    }
    // Order by |G| then by orders so the basis layout is deterministic.
    std::sort(orders.begin(), orders.end(), [&](const auto& p, const auto& q) {
        const double gp = norm(static_cast<double>(p[0]) * rl.b1 + static_cast<double>(p[1]) * rl.b2);
        const double gq = norm(static_cast<double>(q[0]) * rl.b1 + static_cast<double>(q[1]) * rl.b2);
        if (std::abs(gp - gq) > 1e-12 * g_max) return gp < gq;
        return p < q;
    });
    auto basis = basis_from_orders(cell, std::move(orders));
    basis.cutoff = cutoff;
    return basis;
}

std::complex<double> epsilon_coefficient(const Supercell& cell, Vec2 g, double n_background,
                                         double n_inclusion) {
    const double eps_bg = n_background * n_background;
    const double contrast = n_inclusion * n_inclusion - eps_bg;
    const double r = cell.hole_radius_nm;
    const double g_len = norm(g);
    const bool is_zero = g_len < 1e-14 * kTwoPi / cell.period();

    double fill = 0.0;
    double form = 0.0;
    if (cell.shape == InclusionShape::disk) {
        fill = kPi * r * r / cell.area();
        const double gr = g_len * r;
        form = gr < 1e-8 ? 1.0 - gr * gr / 8.0 : 2.0 * std::cyl_bessel_j(1.0, gr) / gr;
    } else {
        // Stripes have no x dependence: only Gx = 0 survives.
        if (std::abs(g.x) > 1e-12 * kTwoPi / cell.period()) return is_zero ? eps_bg : 0.0;
        fill = 2.0 * r * cell.period() / cell.area();
        const double gr = g.y * r;
        form = std::abs(gr) < 1e-8 ? 1.0 - gr * gr / 6.0 : std::sin(gr) / gr;
    }

    std::complex<double> structure{0.0, 0.0};
    for (const Vec2& c : cell.hole_centers) structure += std::polar(1.0, -dot(g, c));

    std::complex<double> value = contrast * fill * form * structure;
    if (is_zero) value += eps_bg;
    return value;
}

EpsilonOperator epsilon_fourier(const Supercell& cell, const WaveguideGeometry& geom,
                                const PlaneWaveBasis& basis, double n_eff) {
    if (!(n_eff > geom.n_clad && n_eff <= geom.n_bulk))
        throw ParameterError("n_eff", "effective index must lie in (n_clad, n_bulk]");
    const std::size_t n = basis.size();
    const auto rl = reciprocal(cell);

    int dm_max = 0;
    int dn_max = 0;
    for (const auto& o : basis.orders) {
        dm_max = std::max(dm_max, 2 * std::abs(o[0]));
        dn_max = std::max(dn_max, 2 * std::abs(o[1]));
    }
    const std::size_t width = static_cast<std::size_t>(2 * dn_max + 1);
    std::vector<std::complex<double>> table(static_cast<std::size_t>(2 * dm_max + 1) * width);
    for (int dm = -dm_max; dm <= dm_max; ++dm) {
        for (int dn = -dn_max; dn <= dn_max; ++dn) {
            const Vec2 g = static_cast<double>(dm) * rl.b1 + static_cast<double>(dn) * rl.b2;
            table[static_cast<std::size_t>(dm + dm_max) * width + static_cast<std::size_t>(dn + dn_max)] =
                epsilon_coefficient(cell, g, n_eff, geom.n_clad);
        }
    }

    EpsilonOperator op;
    op.n_eff = n_eff;
    op.n_clad = geom.n_clad;
    op.eps.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const int dm = basis.orders[i][0] - basis.orders[j][0];
            const int dn = basis.orders[i][1] - basis.orders[j][1];
            op.eps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                table[static_cast<std::size_t>(dm + dm_max) * width + static_cast<std::size_t>(dn + dn_max)];
        }
    }

    Eigen::LLT<Eigen::MatrixXcd> llt(op.eps);
    if (llt.info() != Eigen::Success)
        throw NumericalError("permittivity matrix is not positive definite; increase the plane-wave cutoff");
    op.eta = llt.solve(Eigen::MatrixXcd::Identity(op.eps.rows(), op.eps.cols()));
    op.eta = (0.5 * (op.eta + op.eta.adjoint())).eval();
    if (!op.eta.allFinite())
        throw NumericalError("permittivity matrix is singular; increase the plane-wave cutoff");
    return op;
}

double slab_effective_index(double thickness_nm, double n_core, double n_clad, double wavelength_nm) {
    if (!(thickness_nm > 0.0)) throw ParameterError("d_nm", "slab thickness must be positive");
    if (!(wavelength_nm > 0.0)) throw ParameterError("wavelength_nm", "wavelength must be positive");
    if (!(n_core >= n_clad)) throw ParameterError("n_core", "core index must not be below the cladding");
    if (n_core == n_clad) return n_core;

    const double k0 = kTwoPi / wavelength_nm;
    const double v = 0.5 * k0 * thickness_nm * std::sqrt(n_core * n_core - n_clad * n_clad);
    // u = kappa d / 2 solves u tan u = sqrt(V^2 - u^2) on (0, min(V, pi/2)).
    auto f = [v](double u) { return u * std::tan(u) - std::sqrt(std::max(v * v - u * u, 0.0)); };
    const double hi = std::min(v, std::nextafter(kPi / 2.0, 0.0));
    double lo = 0.0;
    if (f(hi) <= 0.0) {
        // Only reachable through rounding when V is tiny; the root sits at hi.
        lo = hi;
    }
    double u = hi;
    if (lo < hi) {
        std::uintmax_t iterations = 200;
        const auto bracket = boost::math::tools::toms748_solve(
            f, lo, hi, f(lo), f(hi), boost::math::tools::eps_tolerance<double>(52), iterations);
        u = 0.5 * (bracket.first + bracket.second);
    }
    const double kappa = 2.0 * u / thickness_nm;
    const double ratio = kappa / k0;
    double n_eff = std::sqrt(std::max(n_core * n_core - ratio * ratio, n_clad * n_clad));
    return std::clamp(n_eff, n_clad, n_core);
}

EpsilonGrid rasterize_epsilon(const Supercell& cell, const WaveguideGeometry& geom, double n_eff,
                              int pixels_per_a) {
    if (pixels_per_a < 16) throw ParameterError("grid_resolution", "need at least 16 pixels per lattice constant");
    EpsilonGrid grid;
    const double a = cell.period();
    const double h = cell.height();
    grid.nx = static_cast<std::size_t>(pixels_per_a);
    grid.dx = a / static_cast<double>(grid.nx);
    grid.ny = static_cast<std::size_t>(std::max(1.0, std::round(h / grid.dx)));
    grid.dy = h / static_cast<double>(grid.ny);
    grid.x0 = -a / 2.0 + grid.dx / 2.0;
    grid.y0 = -h / 2.0 + grid.dy / 2.0;

    const double eps_bg = n_eff * n_eff;
    const double eps_hole = geom.n_clad * geom.n_clad;
    grid.eps.assign(grid.nx * grid.ny, eps_bg);
    const double r = cell.hole_radius_nm;
    if (r <= 0.0) return grid;

    // Hole images that can reach the fundamental domain.
    std::vector<Vec2> images;
    for (const Vec2& c : cell.hole_centers) {
        for (int j = -1; j <= 1; ++j) {
            for (int i = -2; i <= 2; ++i) {
                const Vec2 p = c + static_cast<double>(i) * cell.lattice_x + static_cast<double>(j) * cell.lattice_y;
                if (cell.shape == InclusionShape::stripe && i != 0) continue;
                if (std::abs(p.y) <= h / 2.0 + r && (cell.shape == InclusionShape::stripe || std::abs(p.x) <= a / 2.0 + r))
                    images.push_back(p);
            }
        }
    }

    for (std::size_t iy = 0; iy < grid.ny; ++iy) {
        const double y = grid.y(iy);
        for (const Vec2& p : images) {
            const double dy = y - p.y;
            if (std::abs(dy) >= r) continue;
            if (cell.shape == InclusionShape::stripe) {
                for (std::size_t ix = 0; ix < grid.nx; ++ix) grid.eps[iy * grid.nx + ix] = eps_hole;
                continue;
            }
            const double half = std::sqrt(r * r - dy * dy);
            for (std::size_t ix = 0; ix < grid.nx; ++ix) {
                if (std::abs(grid.x(ix) - p.x) < half) grid.eps[iy * grid.nx + ix] = eps_hole;
            }
        }
    }
    return grid;
}

}  // namespace slowlight
