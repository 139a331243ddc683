#pragma once

#include <array>
#include <optional>
#include <vector>

#include "slowlight/bandsolver.hpp"
#include "slowlight/dispersion.hpp"
#include "slowlight/geometry.hpp"

namespace slowlight {

using Axis3 = std::array<double, 3>;

// SiV emitter and its environment. Axes are in the crystal frame and are
// normalised by validate().
struct EmitterParams {
    Axis3 dipole_axis{1.0, 1.0, 1.0};
    Axis3 field_axis{1.0, 1.0, 0.0};
    double debye_waller = 0.70;
    double branching_fraction = 0.452;  // C line; 0.325 for B
    double tau_bulk_ns = 1.7;
    double gamma_phc_per_ns = 0.38;
    double gamma_bulk_per_ns = 0.59;

    void validate() const;
    EmitterParams normalized() const;
};

// Sum n^2 |E|^2 dA / max(n^2 |E|^2) over the grid (midpoint rule), nm^2.
double effective_mode_area(const ModeField& field, const EpsilonGrid& eps);

// S_eff of band `track` at k-sample ik, on a grid of pixels_per_a.
double guided_mode_area(const BandStructure& bands, std::size_t track, std::size_t ik, int pixels_per_a = 64);

// Walking towards the zone edge, the first point with n_g >= target or its
// predecessor, whichever is closer in n_g; the last point when the target is
// never reached. Empty curve -> nullopt.
std::optional<std::size_t> point_near_group_index(const GroupIndexCurve& curve, double target);

// |field . dipole|^2 for unit axes. Inputs are normalised here.
double orientation_factor(const Axis3& dipole_axis, const Axis3& field_axis);

// cos^2(kappa (z - d/2)) of the slab's TE0 profile at the emitter depth,
// relative to the midplane.
double depth_factor(const WaveguideGeometry& geom, double wavelength_nm);

// Gamma_wg / Gamma_0 = 3/(4 pi) (lambda/n)^2 / S_eff * (n_g / n) * factors.
double waveguide_rate_enhancement(double n_g, double s_eff_nm2, double wavelength_nm, double n,
                                  double orientation, double depth, double local_field_ratio = 1.0);

double beta_factor(double gamma_wg_per_ns, double gamma_phc_per_ns);

// (tau_off / tau_on - 1) / (debye_waller * branching_fraction)
double f_zpl(double tau_off_ns, double tau_on_ns, double debye_waller, double branching_fraction);
// Inverse of f_zpl for tau_on with zeta = debye_waller * branching_fraction.
double tau_on_from_f_zpl(double f, double tau_off_ns, double zeta);

struct AchievablePoint {
    double wavelength_nm = 0.0;
    double n_g = 0.0;
    double purcell = 0.0;
    double beta = 0.0;
};

// Per group-index point: F_p at the field maximum (depth factor 1) with the
// emitter's orientation factor, gamma_wg = F_p * gamma_bulk, then beta.
std::vector<AchievablePoint> achievable_beta_curve(const GroupIndexCurve& curve, double s_eff_nm2, double n,
                                                   const EmitterParams& emitter);

struct CouplingInputs {
    double n_g = 70.0;
    double s_eff_nm2 = 0.0;
    double wavelength_nm = 737.0;
    double n = 2.4;
    double local_field_ratio = 1.0;
    std::optional<double> tau_on_ns;      // measured lifetime in the waveguide
    std::optional<double> gamma_wg_per_ns;  // measured waveguide rate for the beta estimate
};

struct CouplingReport {
    CouplingInputs inputs;
    EmitterParams emitter;
    double orientation_factor = 0.0;
    double depth_factor = 0.0;
    // With orientation and depth factors: the emitter as implanted.
    double rate_enhancement = 0.0;
    // At the field maximum (depth factor 1), the achievable-beta convention.
    double purcell_fp = 0.0;
    double beta = 0.0;  // from purcell_fp * gamma_bulk
    std::optional<double> f_zpl;
    std::optional<double> measured_beta;  // from inputs.gamma_wg_per_ns
};

CouplingReport coupling_report(const WaveguideGeometry& geom, const CouplingInputs& inputs,
                               const EmitterParams& emitter);

}  // namespace slowlight
