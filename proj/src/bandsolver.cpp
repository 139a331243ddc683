#include "slowlight/bandsolver.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "slowlight/errors.hpp"
#include "slowlight/kernels/kernels.hpp"

namespace slowlight {

using cplx = std::complex<double>;

std::string_view parity_name(Parity p) {
    switch (p) {
        case Parity::even:
            return "even";
        case Parity::odd:
            return "odd";
        case Parity::unclassified:
            return "unclassified";
    }
    return "unclassified";
}

BlochK::BlochK(double k_norm) : k_norm_(k_norm) {
    if (!(k_norm >= 0.0 && k_norm <= 0.5 + 1e-12))
        throw ParameterError("k_norm", "Bloch wavevector must lie in [0, 0.5] (units of 2 pi / a)");
    k_norm_ = std::min(k_norm, 0.5);
}

std::vector<BlochK> uniform_k_path(int n, double lo, double hi) {
    if (n < 1) throw ParameterError("k_points", "need at least one k-point");
    if (!(hi >= lo)) throw ParameterError("k_path", "k path must be monotone");
    std::vector<BlochK> path;
    path.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        path.emplace_back(i == n - 1 ? hi : lo + (hi - lo) * t);
    }
    return path;
}

Eigen::MatrixXcd assemble_operator(const PlaneWaveBasis& basis, const EpsilonOperator& eps_op, Vec2 k) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    if (eps_op.eta.rows() != n || eps_op.eta.cols() != n)
        throw NumericalError("assemble_operator: basis and inverse permittivity differ in dimension");
    std::vector<double> ux(basis.size());
    std::vector<double> uy(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        ux[i] = k.x + basis.g[i].x;
        uy[i] = k.y + basis.g[i].y;
    }
    Eigen::MatrixXcd theta(n, n);
    const auto size = basis.size();
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto col = static_cast<std::size_t>(j);
        kernels::project_scale({eps_op.eta.col(j).data(), size}, ux, uy, ux[col], uy[col],
                               {theta.col(j).data(), size});
    }
    return 0.5 * (theta + theta.adjoint());
}

Eigenpairs solve_bands(const Eigen::MatrixXcd& theta, int n_bands) {
    const auto n = static_cast<lapack_int>(theta.rows());
    if (theta.cols() != theta.rows()) throw NumericalError("solve_bands: operator is not square");
    if (n_bands < 1) throw ParameterError("n_bands", "need at least one band");
    const lapack_int wanted = std::min<lapack_int>(n_bands, n);

    Eigen::MatrixXcd work = theta;
    Eigen::VectorXd w(n);
    Eigen::MatrixXcd z(n, wanted);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max<lapack_int>(wanted, 1)));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1, wanted,
                                           0.0, &found, w.data(), z.data(), n, support.data());
    if (info != 0 || found != wanted) {
        std::ostringstream msg;
        msg << "Hermitian eigensolve failed (info=" << info << ", found " << found << " of " << wanted
            << "); operator max |entry| = " << theta.cwiseAbs().maxCoeff()
            << ", Hermiticity residual = " << (theta - theta.adjoint()).cwiseAbs().maxCoeff();
        throw NumericalError(msg.str());
    }
    return {w.head(wanted), z};
}

ParityResult classify_parity(const Eigen::VectorXcd& h, const PlaneWaveBasis& basis, const EpsilonOperator& eps_op,
                             Vec2 k) {
    ParityResult result;
    if (!basis.mirror_closed()) return result;
    Eigen::VectorXcd dx(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) dx(i) = (k.x + basis.g[static_cast<std::size_t>(i)].x) * h(i);
    const Eigen::VectorXcd ey = eps_op.eta * dx;
    const double norm2 = ey.squaredNorm();
    if (!(norm2 > 0.0)) return result;
    cplx overlap{0.0, 0.0};
    for (Eigen::Index i = 0; i < ey.size(); ++i)
        overlap += std::conj(ey(i)) * ey(static_cast<Eigen::Index>(basis.mirror[static_cast<std::size_t>(i)]));
    result.overlap = std::clamp(overlap.real() / norm2, -1.0, 1.0);
    if (result.overlap > kParityThreshold)
        result.parity = Parity::even;
    else if (result.overlap < -kParityThreshold)
        result.parity = Parity::odd;
    return result;
}

cplx evaluate_hz(const Eigen::VectorXcd& h, const PlaneWaveBasis& basis, Vec2 k, Vec2 r) {
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < basis.size(); ++i)
        acc += h(static_cast<Eigen::Index>(i)) * std::polar(1.0, dot(k + basis.g[i], r));
    return acc;
}

ModeField reconstruct_field(const Eigen::VectorXcd& h, const PlaneWaveBasis& basis, Vec2 k, const EpsilonGrid& grid,
                            const EpsilonOperator* eps_op) {
    ModeField field;
    field.nx = grid.nx;
    field.ny = grid.ny;
    field.dx = grid.dx;
    field.dy = grid.dy;
    field.x0 = grid.x0;
    field.y0 = grid.y0;
    const std::size_t nx = grid.nx;
    const std::size_t ny = grid.ny;
    const auto n = static_cast<Eigen::Index>(basis.size());
    const cplx i_unit{0.0, 1.0};

    // Coefficients of curl H, i.e. of D up to a constant: (dHz/dy, -dHz/dx).
    Eigen::VectorXcd cx(n), cy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec2 q = k + basis.g[static_cast<std::size_t>(i)];
        cx(i) = i_unit * q.y * h(i);
        cy(i) = -i_unit * q.x * h(i);
    }
    if (eps_op) {
        cx = eps_op->eta * cx;
        cy = eps_op->eta * cy;
    }

    // Group plane waves sharing the same Gx; each group contributes
    // exp(i (kx+Gx) x) * F(y).
    std::map<long long, std::vector<std::size_t>> groups;
    const double key_scale = 1e9 / (kTwoPi / (grid.dx * static_cast<double>(nx)));
    for (std::size_t i = 0; i < basis.size(); ++i) groups[std::llround(basis.g[i].x * key_scale)].push_back(i);

    std::vector<cplx> phase_y(ny);
    std::vector<cplx> phase_x(nx);
    std::vector<cplx> f_hz(ny), f_x(ny), f_y(ny);
    field.hz.assign(nx * ny, {0.0, 0.0});
    field.ex.assign(nx * ny, {0.0, 0.0});
    field.ey.assign(nx * ny, {0.0, 0.0});

    for (const auto& [key, members] : groups) {
        std::fill(f_hz.begin(), f_hz.end(), cplx{});
        std::fill(f_x.begin(), f_x.end(), cplx{});
        std::fill(f_y.begin(), f_y.end(), cplx{});
        const double qx = k.x + basis.g[members.front()].x;
        for (std::size_t idx : members) {
            const double qy = k.y + basis.g[idx].y;
            for (std::size_t iy = 0; iy < ny; ++iy) phase_y[iy] = std::polar(1.0, qy * grid.y(iy));
            const auto e = static_cast<Eigen::Index>(idx);
            kernels::complex_axpy(h(e), phase_y, f_hz);
            kernels::complex_axpy(cx(e), phase_y, f_x);
            kernels::complex_axpy(cy(e), phase_y, f_y);
        }
        for (std::size_t ix = 0; ix < nx; ++ix) phase_x[ix] = std::polar(1.0, qx * grid.x(ix));
        for (std::size_t iy = 0; iy < ny; ++iy) {
            kernels::complex_axpy(f_hz[iy], phase_x, {field.hz.data() + iy * nx, nx});
            kernels::complex_axpy(f_x[iy], phase_x, {field.ex.data() + iy * nx, nx});
            kernels::complex_axpy(f_y[iy], phase_x, {field.ey.data() + iy * nx, nx});
        }
    }

    double max_e2 = 0.0;
    for (std::size_t i = 0; i < nx * ny; ++i) {
        if (!eps_op) {
            const double inv_eps = 1.0 / grid.eps[i];
            field.ex[i] *= inv_eps;
            field.ey[i] *= inv_eps;
        }
        max_e2 = std::max(max_e2, field.intensity(i));
    }
    if (max_e2 > 0.0) {
        const double s = 1.0 / std::sqrt(max_e2);
        for (std::size_t i = 0; i < nx * ny; ++i) {
            field.hz[i] *= s;
            field.ex[i] *= s;
            field.ey[i] *= s;
        }
    }
    return field;
}

double resolve_n_eff(const WaveguideGeometry& geom, const SolverParams& params) {
    if (params.n_eff) return *params.n_eff;
    if (!(params.band_center_a_over_lambda > 0.0))
        throw ParameterError("band_center_a_over_lambda", "must be positive");
    return slab_effective_index(geom.slab_thickness_nm, geom.n_bulk, geom.n_clad,
                                geom.lattice_constant_nm / params.band_center_a_over_lambda);
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

BandStructure sweep_cell(const Supercell& cell, const WaveguideGeometry& geom, const SolverParams& params,
                         std::span<const Vec2> ks, double n_eff) {
    if (ks.empty()) throw ParameterError("k_path", "empty k path");
    BandStructure bs;
    bs.geom = geom;
    bs.cell = cell;
    bs.basis = build_basis(cell, params.cutoff);
    bs.eps = std::make_shared<const EpsilonOperator>(epsilon_fourier(cell, geom, bs.basis, n_eff));
    bs.n_eff = n_eff;
    bs.samples.resize(ks.size());

    const double a = geom.lattice_constant_nm;
    parallel_for(ks.size(), params.threads, [&](std::size_t ik) {
        KSample& sample = bs.samples[ik];
        sample.k = ks[ik];
        sample.k_norm = ks[ik].x * a / kTwoPi;
        const auto theta = assemble_operator(bs.basis, *bs.eps, ks[ik]);
        const auto pairs = solve_bands(theta, params.n_bands);
        sample.modes.resize(static_cast<std::size_t>(pairs.mu.size()));
        for (Eigen::Index b = 0; b < pairs.mu.size(); ++b) {
            ModeSample& m = sample.modes[static_cast<std::size_t>(b)];
            m.mu = std::max(pairs.mu(b), 0.0);
            m.a_over_lambda = a_over_lambda(m.mu, a);
            m.eigvec = pairs.vectors.col(b);
            m.parity = classify_parity(m.eigvec, bs.basis, *bs.eps, ks[ik]);
        }
    });
    bs.tracks = track_bands(bs.samples);
    return bs;
}

BandStructure band_sweep(const WaveguideGeometry& geom, const SolverParams& params, std::span<const BlochK> k_path) {
    for (std::size_t i = 1; i < k_path.size(); ++i)
        if (k_path[i].k_norm() < k_path[i - 1].k_norm())
            throw ParameterError("k_path", "k path must be monotone in kx");
    const double n_eff = resolve_n_eff(geom, params);
    std::vector<Vec2> ks;
    ks.reserve(k_path.size());
    for (const auto& k : k_path) ks.push_back(k.vector(geom.lattice_constant_nm));
    return sweep_cell(build_supercell(geom), geom, params, ks, n_eff);
}

std::vector<std::vector<std::size_t>> track_bands(const std::vector<KSample>& samples, double threshold) {
    if (samples.empty()) return {};
    std::size_t n_bands = samples.front().modes.size();
    for (const auto& s : samples) n_bands = std::min(n_bands, s.modes.size());
    std::vector<std::vector<std::size_t>> tracks(n_bands, std::vector<std::size_t>(samples.size()));
    for (std::size_t b = 0; b < n_bands; ++b) tracks[b][0] = b;

    for (std::size_t ik = 1; ik < samples.size(); ++ik) {
        const auto& prev = samples[ik - 1].modes;
        const auto& cur = samples[ik].modes;
        struct Pair {
            double overlap;
            std::size_t band;
            std::size_t mode;
        };
        std::vector<Pair> pairs;
        for (std::size_t b = 0; b < n_bands; ++b) {
            const auto& v = prev[tracks[b][ik - 1]].eigvec;
            for (std::size_t m = 0; m < n_bands; ++m) {
                const double ov = std::abs(v.dot(cur[m].eigvec));
                if (ov >= threshold) pairs.push_back({ov, b, m});
            }
        }
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) { return p.overlap > q.overlap; });
        std::vector<bool> band_done(n_bands, false);
        std::vector<bool> mode_used(n_bands, false);
        for (const auto& p : pairs) {
            if (band_done[p.band] || mode_used[p.mode]) continue;
            tracks[p.band][ik] = p.mode;
            band_done[p.band] = true;
            mode_used[p.mode] = true;
        }
        // Frequency-order fallback: leftover bands (in previous-frequency order)
        // take leftover modes in ascending order.
        std::vector<std::size_t> left_bands;
        for (std::size_t b = 0; b < n_bands; ++b)
            if (!band_done[b]) left_bands.push_back(b);
        std::stable_sort(left_bands.begin(), left_bands.end(), [&](std::size_t p, std::size_t q) {
            return prev[tracks[p][ik - 1]].mu < prev[tracks[q][ik - 1]].mu;
        });
        std::size_t next_mode = 0;
        for (std::size_t b : left_bands) {
            while (mode_used[next_mode]) ++next_mode;
            tracks[b][ik] = next_mode;
            mode_used[next_mode] = true;
        }
    }
    return tracks;
}

}  // namespace slowlight
