#include "slowlight/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slowlight/errors.hpp"

namespace slowlight {

GroupIndexCurve group_index_fd(std::span<const BandPoint> band, double a_nm, Parity label, double offset_nm) {
    if (band.size() < 3) throw ParameterError("band", "need at least 3 k-samples for a group index");
    GroupIndexCurve curve;
    curve.band_label = label;
    const std::size_t n = band.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i == n - 1 ? n - 1 : i + 1;
        const double dk = band[hi].k_norm - band[lo].k_norm;
        const double df = band[hi].a_over_lambda - band[lo].a_over_lambda;
        if (df == 0.0 || !std::isfinite(dk / df)) {
            curve.divergent_k_norms.push_back(band[i].k_norm);
            continue;
        }
        GroupIndexPoint p;
        p.k_norm = band[i].k_norm;
        p.a_over_lambda = band[i].a_over_lambda;
        p.wavelength_nm = to_wavelength(a_nm, p.a_over_lambda, offset_nm);
        p.n_g = std::abs(dk / df);
        if (i > 0 && i < n - 1) {
            const double left = band[i].a_over_lambda - band[i - 1].a_over_lambda;
            const double right = band[i + 1].a_over_lambda - band[i].a_over_lambda;
            p.flagged = left * right <= 0.0;
        }
        curve.points.push_back(p);
    }
    return curve;
}

HfGroupIndex group_index_hf(const Eigen::VectorXcd& h, const EpsilonOperator& eps_op, const PlaneWaveBasis& basis,
                            Vec2 k, double mu, double period_nm) {
    // dTheta/dkx [i][j] = eta_ij ((kx + G_ix) + (kx + G_jx)), so
    // <h|dTheta|h> = 2 Re[(u h)^H eta h] with u_i = kx + G_ix.
    Eigen::VectorXcd uh(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) uh(i) = (k.x + basis.g[static_cast<std::size_t>(i)].x) * h(i);
    const double dmu_dk = 2.0 * uh.dot(eps_op.eta * h).real() / h.squaredNorm();
    HfGroupIndex out;
    const double omega = std::sqrt(std::max(mu, 0.0));
    out.vg_over_c = omega > 0.0 ? dmu_dk / (2.0 * omega) : 0.0;
    out.divergent = std::abs(out.vg_over_c) < kDivergentVelocity;
    if (period_nm > 0.0) {
        const double kn = std::abs(k.x) * period_nm / kTwoPi;
        if (std::abs(kn - std::floor(kn) - 0.5) < 1e-12) out.divergent = true;
    }
    out.n_g = out.divergent ? std::numeric_limits<double>::infinity() : 1.0 / std::abs(out.vg_over_c);
    return out;
}

namespace {

struct Window {
    double lo;
    double hi;
};

// Band b is the b-th eigenvalue at every k, so the union of band ranges is
// covered up to hi[b]; a gap opens where the running maximum stays below
// every later minimum.
std::vector<Window> band_gaps(const std::vector<std::vector<double>>& freqs_per_k) {
    std::vector<Window> gaps;
    if (freqs_per_k.empty()) return gaps;
    std::size_t n_bands = freqs_per_k.front().size();
    for (const auto& f : freqs_per_k) n_bands = std::min(n_bands, f.size());
    std::vector<double> lo(n_bands, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n_bands, -std::numeric_limits<double>::infinity());
    for (const auto& f : freqs_per_k) {
        for (std::size_t b = 0; b < n_bands; ++b) {
            lo[b] = std::min(lo[b], f[b]);
            hi[b] = std::max(hi[b], f[b]);
        }
    }
    double running_max = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b + 1 < n_bands; ++b) {
        running_max = std::max(running_max, hi[b]);
        double later_min = std::numeric_limits<double>::infinity();
        for (std::size_t c = b + 1; c < n_bands; ++c) later_min = std::min(later_min, lo[c]);
        if (later_min - running_max > 1e-6 * std::max(later_min, 1e-12)) gaps.push_back({running_max, later_min});
    }
    return gaps;
}

std::vector<std::vector<double>> frequencies(const BandStructure& bs) {
    std::vector<std::vector<double>> out;
    out.reserve(bs.samples.size());
    for (const auto& s : bs.samples) {
        std::vector<double> f;
        f.reserve(s.modes.size());
        for (const auto& m : s.modes) f.push_back(m.a_over_lambda);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace

GapReport detect_gap(const BandStructure& bulk) {
    GapReport report;
    for (const auto& w : band_gaps(frequencies(bulk))) {
        if (!report.has_gap || w.hi - w.lo > report.gap_hi - report.gap_lo) {
            report.has_gap = true;
            report.gap_lo = w.lo;
            report.gap_hi = w.hi;
        }
    }
    return report;
}

std::vector<ProjectedGap> projected_gaps(const WaveguideGeometry& geom, const SolverParams& params, double n_eff,
                                         std::span<const double> k_norms, const GapReport& complete,
                                         int ky_samples) {
    if (ky_samples < 2) throw ParameterError("ky_samples", "need at least 2 ky samples");
    const double a = geom.lattice_constant_nm;
    // ky over half the reciprocal period along y covers the zone by mirror symmetry.
    const double ky_max = kTwoPi / (std::sqrt(3.0) * a);
    std::vector<Vec2> ks;
    for (double kn : k_norms)
        for (int j = 0; j < ky_samples; ++j)
            ks.push_back({kTwoPi * kn / a, ky_max * static_cast<double>(j) / (ky_samples - 1)});
    SolverParams bulk = params;
    bulk.n_bands = std::min(params.n_bands, 8);
    const auto bs = sweep_cell(build_bulk_cell(geom), geom, bulk, ks, n_eff);
    const auto freqs = frequencies(bs);

    std::vector<ProjectedGap> out;
    for (std::size_t i = 0; i < k_norms.size(); ++i) {
        const std::vector<std::vector<double>> slice(freqs.begin() + static_cast<std::ptrdiff_t>(i * ky_samples),
                                                     freqs.begin() + static_cast<std::ptrdiff_t>((i + 1) * ky_samples));
        const auto gaps = band_gaps(slice);
        ProjectedGap pg{k_norms[i], 0.0, 0.0};
        const Window* pick = nullptr;
        for (const auto& w : gaps) {
            const bool overlaps = complete.has_gap && w.lo < complete.gap_hi && w.hi > complete.gap_lo;
            if (overlaps) {
                pick = &w;
                break;
            }
            if (!complete.has_gap && (!pick || w.hi - w.lo > pick->hi - pick->lo)) pick = &w;
        }
        if (pick) {
            pg.lo = pick->lo;
            pg.hi = pick->hi;
        }
        out.push_back(pg);
    }
    return out;
}

std::vector<GuidedWindow> guided_windows(const BandStructure& defect, const GapReport& gap) {
    std::vector<GuidedWindow> out;
    if (!gap.has_gap && gap.projected.empty()) return out;
    for (std::size_t t = 0; t < defect.tracks.size(); ++t) {
        GuidedWindow w;
        w.track = t;
        w.lo = std::numeric_limits<double>::infinity();
        w.hi = -std::numeric_limits<double>::infinity();
        int even = 0;
        int odd = 0;
        int inside = 0;
        for (std::size_t ik = 0; ik < defect.samples.size(); ++ik) {
            const auto& m = defect.tracked(t, ik);
            if (!gap.guided_at(ik, m.a_over_lambda)) continue;
            ++inside;
            w.lo = std::min(w.lo, m.a_over_lambda);
            w.hi = std::max(w.hi, m.a_over_lambda);
            even += m.parity.parity == Parity::even;
            odd += m.parity.parity == Parity::odd;
        }
        if (inside == 0) continue;
        if (2 * even > inside)
            w.parity = Parity::even;
        else if (2 * odd > inside)
            w.parity = Parity::odd;
        out.push_back(w);
    }
    return out;
}

std::vector<Vec2> bulk_k_path(double a_nm, int points_per_segment) {
    if (points_per_segment < 2) throw ParameterError("points_per_segment", "need at least 2 points per segment");
    const Vec2 gamma{0.0, 0.0};
    const Vec2 m{0.0, kTwoPi / (std::sqrt(3.0) * a_nm)};
    const Vec2 k{kTwoPi / (3.0 * a_nm), kTwoPi / (std::sqrt(3.0) * a_nm)};
    const Vec2 corners[] = {gamma, m, k, gamma};
    std::vector<Vec2> path;
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < points_per_segment; ++i) {
            const double t = static_cast<double>(i) / points_per_segment;
            path.push_back(corners[s] + t * (corners[s + 1] - corners[s]));
        }
    }
    path.push_back(gamma);
    return path;
}

BandStructure bulk_band_sweep(const WaveguideGeometry& geom, const SolverParams& params, double n_eff,
                              int points_per_segment) {
    SolverParams bulk = params;
    bulk.n_bands = std::min(params.n_bands, 8);
    const auto ks = bulk_k_path(geom.lattice_constant_nm, points_per_segment);
    return sweep_cell(build_bulk_cell(geom), geom, bulk, ks, n_eff);
}

double to_wavelength(double a_nm, double a_over_lambda, double offset_nm) {
    if (!(a_over_lambda > 0.0)) throw ParameterError("a_over_lambda", "normalised frequency must be positive");
    return a_nm / a_over_lambda + offset_nm;
}

std::optional<GuidedBand> find_guided_band(const BandStructure& bands, const GapReport& gap, Parity parity) {
    if ((!gap.has_gap && gap.projected.empty()) || bands.samples.empty() || bands.tracks.empty()) return std::nullopt;
    const std::size_t last = bands.samples.size() - 1;
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < bands.tracks.size(); ++t) {
        const auto& m = bands.tracked(t, last);
        if (!gap.guided_at(last, m.a_over_lambda) || m.parity.parity != parity) continue;
        if (!best || m.a_over_lambda < bands.tracked(*best, last).a_over_lambda) best = t;
    }
    if (!best) return std::nullopt;

    const Parity opposite = parity == Parity::even ? Parity::odd : Parity::even;
    GuidedBand g;
    g.parity = parity;
    g.track = *best;
    for (std::size_t ik = last + 1; ik-- > 0;) {
        const auto& m = bands.tracked(*best, ik);
        if (!gap.guided_at(ik, m.a_over_lambda) || m.parity.parity == opposite) break;
        g.k_indices.push_back(ik);
    }
    std::reverse(g.k_indices.begin(), g.k_indices.end());
    return g;
}

std::vector<BandPoint> band_points(const BandStructure& bands, const GuidedBand& guided) {
    std::vector<BandPoint> pts;
    pts.reserve(guided.k_indices.size());
    for (std::size_t ik : guided.k_indices)
        pts.push_back({bands.samples[ik].k_norm, bands.tracked(guided.track, ik).a_over_lambda});
    return pts;
}

GroupIndexCurve guided_group_index(const BandStructure& bands, const GuidedBand& guided, double offset_nm) {
    const auto pts = band_points(bands, guided);
    auto curve = group_index_fd(pts, bands.a(), guided.parity, offset_nm);
    std::vector<GroupIndexPoint> kept;
    for (const auto& p : curve.points) {
        // Recover the sample this point came from.
        std::size_t pos = 0;
        while (pos < pts.size() && pts[pos].k_norm != p.k_norm) ++pos;
        const std::size_t ik = guided.k_indices[pos];
        const auto& mode = bands.tracked(guided.track, ik);
        const auto hf = group_index_hf(mode.eigvec, *bands.eps, bands.basis, bands.samples[ik].k, mode.mu, bands.a());
        if (hf.divergent)
            curve.divergent_k_norms.push_back(p.k_norm);
        else
            kept.push_back(p);
    }
    curve.points = std::move(kept);
    std::sort(curve.divergent_k_norms.begin(), curve.divergent_k_norms.end());
    return curve;
}

namespace {

struct Pass {
    GapReport gap;
    BandStructure bands;
};

Pass run_pass(const WaveguideGeometry& geom, const SolverParams& params, std::span<const BlochK> k_path,
              double n_eff) {
    SolverParams fixed = params;
    fixed.n_eff = n_eff;
    Pass pass;
    const auto bulk = bulk_band_sweep(geom, fixed, n_eff);
    pass.gap = detect_gap(bulk);
    pass.bands = band_sweep(geom, fixed, k_path);
    std::vector<double> k_norms;
    for (const auto& s : pass.bands.samples) k_norms.push_back(s.k_norm);
    pass.gap.projected = projected_gaps(geom, fixed, n_eff, k_norms, pass.gap);
    pass.gap.guided = guided_windows(pass.bands, pass.gap);
    return pass;
}

}  // namespace

WaveguideAnalysis analyze_waveguide(const WaveguideGeometry& geom, const SolverParams& params,
                                    std::span<const BlochK> k_path) {
    geom.validate();
    WaveguideAnalysis out;
    double n_eff = resolve_n_eff(geom, params);
    out.n_eff_history.push_back(n_eff);

    if (!params.n_eff) {
        const auto coarse_path = uniform_k_path(9, k_path.front().k_norm(), k_path.back().k_norm());
        const auto coarse = run_pass(geom, params, coarse_path, n_eff);
        if (!coarse.gap.guided.empty()) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& w : coarse.gap.guided) {
                lo = std::min(lo, w.lo);
                hi = std::max(hi, w.hi);
            }
            const double centre = 0.5 * (lo + hi);
            n_eff = slab_effective_index(geom.slab_thickness_nm, geom.n_bulk, geom.n_clad,
                                         geom.lattice_constant_nm / centre);
            out.n_eff_history.push_back(n_eff);
        }
    }

    auto pass = run_pass(geom, params, k_path, n_eff);
    out.gap = std::move(pass.gap);
    out.bands = std::move(pass.bands);
    out.even = find_guided_band(out.bands, out.gap, Parity::even);
    out.odd = find_guided_band(out.bands, out.gap, Parity::odd);
    return out;
}

}  // namespace slowlight
