#include "slowlight/coupling.hpp"

#include <cmath>
#include <string>

#include "slowlight/errors.hpp"
#include "slowlight/kernels/kernels.hpp"

namespace slowlight {

namespace {

double length(const Axis3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Axis3 unit(const Axis3& v, const char* field) {
    const double n = length(v);
    if (!(n > 0.0) || !std::isfinite(n)) throw ParameterError(field, "axis must be a non-zero finite vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

void require_fraction(double v, const char* field) {
    if (!(v > 0.0 && v <= 1.0)) throw ParameterError(field, "must lie in (0, 1]");
}

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(field, "must be positive");
}

void require_unit_interval(double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(field, "must lie in [0, 1]");
}

}  // namespace

void EmitterParams::validate() const {
    unit(dipole_axis, "dipole_axis");
    unit(field_axis, "field_axis");
    require_fraction(debye_waller, "debye_waller");
    require_fraction(branching_fraction, "branching_fraction");
    require_positive(tau_bulk_ns, "tau_bulk_ns");
    require_positive(gamma_phc_per_ns, "gamma_phc_per_ns");
    require_positive(gamma_bulk_per_ns, "gamma_bulk_per_ns");
}

EmitterParams EmitterParams::normalized() const {
    validate();
    EmitterParams p = *this;
    p.dipole_axis = unit(dipole_axis, "dipole_axis");
    p.field_axis = unit(field_axis, "field_axis");
    return p;
}

double effective_mode_area(const ModeField& field, const EpsilonGrid& eps) {
    if (field.nx != eps.nx || field.ny != eps.ny || field.ex.size() != eps.eps.size() ||
        field.ey.size() != eps.eps.size())
        throw DataError("mode field and permittivity grid differ in shape");
    const auto stats = kernels::weighted_intensity(eps.eps, field.ex, field.ey);
    if (!(stats.weighted_max > 0.0)) throw DataError("mode field is identically zero");
    return stats.weighted_sum * eps.dx * eps.dy / stats.weighted_max;
}

double guided_mode_area(const BandStructure& bands, std::size_t track, std::size_t ik, int pixels_per_a) {
    if (track >= bands.tracks.size() || ik >= bands.samples.size()) throw ParameterError("mode", "index out of range");
    const auto grid = rasterize_epsilon(bands.cell, bands.geom, bands.n_eff, pixels_per_a);
    const auto& mode = bands.tracked(track, ik);
    const auto field = reconstruct_field(mode.eigvec, bands.basis, bands.samples[ik].k, grid);
    return effective_mode_area(field, grid);
}

std::optional<std::size_t> point_near_group_index(const GroupIndexCurve& curve, double target) {
    if (curve.points.empty()) return std::nullopt;
    // Points are in ascending k; slow light sits at the end.
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        if (curve.points[i].n_g >= target) {
            if (i > 0 && target - curve.points[i - 1].n_g < curve.points[i].n_g - target) return i - 1;
            return i;
        }
    return curve.points.size() - 1;
}

double orientation_factor(const Axis3& dipole_axis, const Axis3& field_axis) {
    const Axis3 d = unit(dipole_axis, "dipole_axis");
    const Axis3 e = unit(field_axis, "field_axis");
    const double c = d[0] * e[0] + d[1] * e[1] + d[2] * e[2];
    return std::min(1.0, c * c);
}

double depth_factor(const WaveguideGeometry& geom, double wavelength_nm) {
    geom.validate();
    require_positive(wavelength_nm, "wavelength_nm");
    const double d = geom.slab_thickness_nm;
    const double n_eff = slab_effective_index(d, geom.n_bulk, geom.n_clad, wavelength_nm);
    const double k0 = kTwoPi / wavelength_nm;
    const double kappa = k0 * std::sqrt(std::max(geom.n_bulk * geom.n_bulk - n_eff * n_eff, 0.0));
    const double c = std::cos(kappa * (geom.emitter_depth_nm - d / 2.0));
    return c * c;
}

double waveguide_rate_enhancement(double n_g, double s_eff_nm2, double wavelength_nm, double n, double orientation,
                                  double depth, double local_field_ratio) {
    require_positive(n_g, "n_g");
    require_positive(s_eff_nm2, "s_eff_nm2");
    require_positive(wavelength_nm, "wavelength_nm");
    require_positive(n, "n");
    require_unit_interval(orientation, "orientation_factor");
    require_unit_interval(depth, "depth_factor");
    require_unit_interval(local_field_ratio, "local_field_ratio");
    const double lam_n = wavelength_nm / n;
    return 3.0 / (4.0 * kPi) * lam_n * lam_n / s_eff_nm2 * (n_g / n) * orientation * depth * local_field_ratio;
}

double beta_factor(double gamma_wg_per_ns, double gamma_phc_per_ns) {
    if (!(gamma_wg_per_ns >= 0.0) || !(gamma_phc_per_ns >= 0.0))
        throw ParameterError("gamma", "rates must be non-negative");
    const double total = gamma_wg_per_ns + gamma_phc_per_ns;
    if (total == 0.0) throw ParameterError("gamma", "both rates are zero");
    return gamma_wg_per_ns / total;
}

double f_zpl(double tau_off_ns, double tau_on_ns, double debye_waller, double branching_fraction) {
    require_positive(tau_off_ns, "tau_off_ns");
    require_positive(tau_on_ns, "tau_on_ns");
    require_fraction(debye_waller, "debye_waller");
    require_fraction(branching_fraction, "branching_fraction");
    return (tau_off_ns / tau_on_ns - 1.0) / (debye_waller * branching_fraction);
}

double tau_on_from_f_zpl(double f, double tau_off_ns, double zeta) {
    require_positive(tau_off_ns, "tau_off_ns");
    require_fraction(zeta, "zeta");
    const double ratio = 1.0 + f * zeta;
    if (!(ratio > 0.0)) throw ParameterError("f_zpl", "implies a non-positive lifetime");
    return tau_off_ns / ratio;
}

std::vector<AchievablePoint> achievable_beta_curve(const GroupIndexCurve& curve, double s_eff_nm2, double n,
                                                   const EmitterParams& emitter) {
    const auto e = emitter.normalized();
    const double orient = orientation_factor(e.dipole_axis, e.field_axis);
    std::vector<AchievablePoint> out;
    out.reserve(curve.points.size());
    for (const auto& p : curve.points) {
        AchievablePoint a;
        a.wavelength_nm = p.wavelength_nm;
        a.n_g = p.n_g;
        a.purcell = waveguide_rate_enhancement(p.n_g, s_eff_nm2, p.wavelength_nm, n, orient, 1.0);
        a.beta = beta_factor(a.purcell * e.gamma_bulk_per_ns, e.gamma_phc_per_ns);
        out.push_back(a);
    }
    return out;
}

CouplingReport coupling_report(const WaveguideGeometry& geom, const CouplingInputs& inputs,
                               const EmitterParams& emitter) {
    geom.validate();
    CouplingReport r;
    r.inputs = inputs;
    r.emitter = emitter.normalized();
    r.orientation_factor = orientation_factor(r.emitter.dipole_axis, r.emitter.field_axis);
    r.depth_factor = depth_factor(geom, inputs.wavelength_nm);
    r.rate_enhancement = waveguide_rate_enhancement(inputs.n_g, inputs.s_eff_nm2, inputs.wavelength_nm, inputs.n,
                                                    r.orientation_factor, r.depth_factor, inputs.local_field_ratio);
    r.purcell_fp = waveguide_rate_enhancement(inputs.n_g, inputs.s_eff_nm2, inputs.wavelength_nm, inputs.n,
                                              r.orientation_factor, 1.0, inputs.local_field_ratio);
    r.beta = beta_factor(r.purcell_fp * r.emitter.gamma_bulk_per_ns, r.emitter.gamma_phc_per_ns);
    if (inputs.tau_on_ns)
        r.f_zpl = f_zpl(r.emitter.tau_bulk_ns, *inputs.tau_on_ns, r.emitter.debye_waller, r.emitter.branching_fraction);
    if (inputs.gamma_wg_per_ns) r.measured_beta = beta_factor(*inputs.gamma_wg_per_ns, r.emitter.gamma_phc_per_ns);
    return r;
}

}  // namespace slowlight
