#pragma once

#include <optional>
#include <span>
#include <vector>

#include "slowlight/bandsolver.hpp"

namespace slowlight {

struct BandPoint {
    double k_norm = 0.0;
    double a_over_lambda = 0.0;
};

struct GroupIndexPoint {
    double wavelength_nm = 0.0;
    double a_over_lambda = 0.0;
    double k_norm = 0.0;
    double n_g = 0.0;
    // Frequency is not monotone across the difference stencil.
    bool flagged = false;
};

struct GroupIndexCurve {
    Parity band_label = Parity::unclassified;
    std::vector<GroupIndexPoint> points;
    // Samples where the group velocity vanishes (zone edge); kept off the curve.
    std::vector<double> divergent_k_norms;
};

// n_g = |dk_norm / d(a/lambda)| by central differences (one-sided at the ends).
GroupIndexCurve group_index_fd(std::span<const BandPoint> band, double a_nm, Parity label, double offset_nm = 0.0);

struct HfGroupIndex {
    double n_g = 0.0;         // c / |v_g|; infinite when divergent
    double vg_over_c = 0.0;   // signed
    bool divergent = false;   // |v_g| / c < 1e-12
};

inline constexpr double kDivergentVelocity = 1e-12;

// Group index from the Hellmann-Feynman derivative d(mu)/d(kx) = <h| dTheta/dkx |h>.
// With period_nm > 0, kx = pi/a is reported divergent: time reversal plus
// lattice periodicity force v_g = 0 there, but a finite basis closed under
// G -> -G cannot also be closed under the zone-edge reflection, so the
// computed velocity keeps a truncation residual (~1e-4 c at the default cutoff).
HfGroupIndex group_index_hf(const Eigen::VectorXcd& h, const EpsilonOperator& eps_op, const PlaneWaveBasis& basis,
                            Vec2 k, double mu, double period_nm = 0.0);

struct GuidedWindow {
    std::size_t track = 0;
    Parity parity = Parity::unclassified;
    double lo = 0.0;
    double hi = 0.0;
};

// Gap of the bulk bands projected onto one kx (all ky folded in).
struct ProjectedGap {
    double k_norm = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct GapReport {
    bool has_gap = false;
    double gap_lo = 0.0;  // a / lambda, complete gap of the bulk crystal
    double gap_hi = 0.0;
    // Optional, one entry per defect k-sample. When present, guided modes are
    // those outside the bulk continuum at their own kx.
    std::vector<ProjectedGap> projected;
    std::vector<GuidedWindow> guided;

    bool contains(double f) const { return has_gap && f > gap_lo && f < gap_hi; }
    bool guided_at(std::size_t ik, double f) const {
        if (projected.empty()) return contains(f);
        return f > projected[ik].lo && f < projected[ik].hi;
    }
};

// Largest window free of bulk bands. Needs a defect-free sweep.
GapReport detect_gap(const BandStructure& bulk);

// Bulk continuum edges at each kx: primitive-cell bands sampled over ky and
// reduced to the gap that overlaps the complete gap (or the widest one).
std::vector<ProjectedGap> projected_gaps(const WaveguideGeometry& geom, const SolverParams& params, double n_eff,
                                         std::span<const double> k_norms, const GapReport& complete,
                                         int ky_samples = 16);

// Windows of defect bands (per tracked band) that are guided.
std::vector<GuidedWindow> guided_windows(const BandStructure& defect, const GapReport& gap);

// Gamma -> M -> K -> Gamma for the triangular lattice with a1 along x.
std::vector<Vec2> bulk_k_path(double a_nm, int points_per_segment);

BandStructure bulk_band_sweep(const WaveguideGeometry& geom, const SolverParams& params, double n_eff,
                              int points_per_segment = 12);

double to_wavelength(double a_nm, double a_over_lambda, double offset_nm = 0.0);

// A defect band followed from the zone edge back along k for as long as it
// stays in the gap with the requested parity.
struct GuidedBand {
    Parity parity = Parity::unclassified;
    std::size_t track = 0;
    std::vector<std::size_t> k_indices;  // ascending k
};

std::optional<GuidedBand> find_guided_band(const BandStructure& bands, const GapReport& gap, Parity parity);
std::vector<BandPoint> band_points(const BandStructure& bands, const GuidedBand& guided);

// Finite-difference curve for a guided band with zone-edge points (vanishing
// Hellmann-Feynman velocity) moved to divergent_k_norms.
GroupIndexCurve guided_group_index(const BandStructure& bands, const GuidedBand& guided, double offset_nm = 0.0);

struct WaveguideAnalysis {
    std::vector<double> n_eff_history;  // initial guess, then the self-consistent value
    GapReport gap;
    BandStructure bands;
    std::optional<GuidedBand> even;
    std::optional<GuidedBand> odd;

    double n_eff() const { return bands.n_eff; }
};

// Effective index at the band-centre guess, a coarse pass to locate the guided
// window, one self-consistent update of the index, then the full sweep.
WaveguideAnalysis analyze_waveguide(const WaveguideGeometry& geom, const SolverParams& params,
                                    std::span<const BlochK> k_path);

}  // namespace slowlight
