#include "slowlight/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "slowlight/dispersion.hpp"
#include "slowlight/errors.hpp"
#include "slowlight/io.hpp"
#include "slowlight/spectra.hpp"
#include "slowlight/timetrace.hpp"

namespace slowlight::cli {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ---- config -------------------------------------------------------------

class Block {
public:
    Block(const nlohmann::json& root, const char* name, std::set<std::string> keys)
        : name_(name), keys_(std::move(keys)) {
        if (!root.contains(name)) return;
        const auto& b = root.at(name);
        if (!b.is_object()) throw ParameterError(name_, "must be an object");
        for (const auto& [k, v] : b.items()) {
            if (!keys_.count(k)) throw ParameterError(name_ + "." + k, "unknown key");
        }
        obj_ = &b;
    }

    void get(const char* key, double& out) const {
        if (const auto* v = find(key)) {
            if (!v->is_number()) throw ParameterError(field(key), "must be a number");
            out = v->get<double>();
        }
    }
    void get(const char* key, std::optional<double>& out) const {
        if (const auto* v = find(key)) {
            if (v->is_null()) return;
            if (!v->is_number()) throw ParameterError(field(key), "must be a number");
            out = v->get<double>();
        }
    }
    void get(const char* key, int& out) const {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer()) throw ParameterError(field(key), "must be an integer");
            out = v->get<int>();
        }
    }
    void get(const char* key, std::uint64_t& out) const {
        if (const auto* v = find(key)) {
            if (!v->is_number_unsigned()) throw ParameterError(field(key), "must be a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void get(const char* key, bool& out) const {
        if (const auto* v = find(key)) {
            if (!v->is_boolean()) throw ParameterError(field(key), "must be true or false");
            out = v->get<bool>();
        }
    }
    void get(const char* key, Axis3& out) const {
        if (const auto* v = find(key)) {
            if (!v->is_array() || v->size() != 3) throw ParameterError(field(key), "must be an array of 3 numbers");
            for (std::size_t i = 0; i < 3; ++i) {
                if (!(*v)[i].is_number()) throw ParameterError(field(key), "must be an array of 3 numbers");
                out[i] = (*v)[i].get<double>();
            }
        }
    }

private:
    const nlohmann::json* find(const char* key) const {
        if (!obj_ || !obj_->contains(key)) return nullptr;
        return &obj_->at(key);
    }
    std::string field(const char* key) const { return name_ + "." + key; }

    std::string name_;
    std::set<std::string> keys_;
    const nlohmann::json* obj_ = nullptr;
};

void require(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) throw ParameterError(field, msg);
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& source) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ParameterError("config", "top level must be an object");
    for (const auto& [k, v] : root.items()) {
        static const std::set<std::string> top{"schema_version", "geometry", "solver", "emitter", "analysis"};
        if (!top.count(k)) throw ParameterError(k, "unknown top-level key");
    }
    if (root.contains("schema_version")) {
        const auto& v = root.at("schema_version");
        if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
            throw ParameterError("schema_version", "unsupported, expected " + std::to_string(kSchemaVersion));
    }

    RunConfig c;
    {
        Block b(root, "geometry", {"a_nm", "r_nm", "d_nm", "n_bulk", "n_clad", "rows_per_side", "emitter_depth_nm"});
        b.get("a_nm", c.geometry.lattice_constant_nm);
        b.get("r_nm", c.geometry.hole_radius_nm);
        b.get("d_nm", c.geometry.slab_thickness_nm);
        b.get("n_bulk", c.geometry.n_bulk);
        b.get("n_clad", c.geometry.n_clad);
        b.get("rows_per_side", c.geometry.rows_per_side);
        b.get("emitter_depth_nm", c.geometry.emitter_depth_nm);
    }
    {
        Block b(root, "solver",
                {"cutoff", "rows_per_side", "k_points", "n_bands", "k_min", "k_max", "n_eff",
                 "band_center_a_over_lambda", "threads"});
        b.get("cutoff", c.solver.cutoff);
        b.get("rows_per_side", c.geometry.rows_per_side);
        b.get("k_points", c.solver.k_points);
        b.get("n_bands", c.solver.n_bands);
        b.get("k_min", c.solver.k_min);
        b.get("k_max", c.solver.k_max);
        b.get("n_eff", c.solver.n_eff);
        b.get("band_center_a_over_lambda", c.solver.band_center_a_over_lambda);
        b.get("threads", c.solver.threads);
    }
    {
        Block b(root, "emitter",
                {"dipole_axis", "field_axis", "debye_waller", "branching_fraction", "tau_bulk_ns", "gamma_phc_per_ns",
                 "gamma_bulk_per_ns"});
        b.get("dipole_axis", c.emitter.dipole_axis);
        b.get("field_axis", c.emitter.field_axis);
        b.get("debye_waller", c.emitter.debye_waller);
        b.get("branching_fraction", c.emitter.branching_fraction);
        b.get("tau_bulk_ns", c.emitter.tau_bulk_ns);
        b.get("gamma_phc_per_ns", c.emitter.gamma_phc_per_ns);
        b.get("gamma_bulk_per_ns", c.emitter.gamma_bulk_per_ns);
    }
    {
        auto& a = c.analysis;
        Block b(root, "analysis",
                {"L_in_lattice_constants", "min_prominence_fraction", "min_separation_nm", "subtract_background",
                 "fit_ftol", "fit_max_iterations", "offset_nm", "pixels_per_a", "field_k_norm", "n_g_target",
                 "s_eff_nm2", "wavelength_nm", "tau_on_ns", "gamma_wg_per_ns", "local_field_ratio", "t_start_ns",
                 "t_end_ns", "bootstrap", "bootstrap_resamples", "seed", "rep_period_ns", "half_window_ns"});
        b.get("L_in_lattice_constants", a.waveguide_length_a);
        b.get("min_prominence_fraction", a.min_prominence_fraction);
        b.get("min_separation_nm", a.min_separation_nm);
        b.get("subtract_background", a.subtract_background);
        b.get("fit_ftol", a.fit_ftol);
        b.get("fit_max_iterations", a.fit_max_iterations);
        b.get("offset_nm", a.offset_nm);
        b.get("pixels_per_a", a.pixels_per_a);
        b.get("field_k_norm", a.field_k_norm);
        b.get("n_g_target", a.n_g_target);
        b.get("s_eff_nm2", a.s_eff_nm2);
        b.get("wavelength_nm", a.wavelength_nm);
        b.get("tau_on_ns", a.tau_on_ns);
        b.get("gamma_wg_per_ns", a.gamma_wg_per_ns);
        b.get("local_field_ratio", a.local_field_ratio);
        b.get("t_start_ns", a.t_start_ns);
        b.get("t_end_ns", a.t_end_ns);
        b.get("bootstrap", a.bootstrap);
        b.get("bootstrap_resamples", a.bootstrap_resamples);
        b.get("seed", a.seed);
        b.get("rep_period_ns", a.rep_period_ns);
        b.get("half_window_ns", a.half_window_ns);
    }
    c.validate();
    return c;
}

RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ParameterError("config", path.string() + ": no such file");
    return parse_config(io::read_text(path), path.string());
}

void RunConfig::validate() const {
    geometry.validate();
    require(solver.cutoff >= 1 && solver.cutoff <= 12, "solver.cutoff", "must lie in [1, 12]");
    require(solver.k_points >= 3, "solver.k_points", "need at least 3 k-points");
    require(solver.n_bands >= 2, "solver.n_bands", "need at least 2 bands");
    require(solver.k_min >= 0.0 && solver.k_min < solver.k_max && solver.k_max <= 0.5, "solver.k_min",
            "need 0 <= k_min < k_max <= 0.5");
    if (solver.n_eff)
        require(*solver.n_eff > geometry.n_clad && *solver.n_eff <= geometry.n_bulk, "solver.n_eff",
                "must lie in (n_clad, n_bulk]");
    require(solver.band_center_a_over_lambda > 0.0, "solver.band_center_a_over_lambda", "must be positive");
    require(solver.threads >= 0, "solver.threads", "must be non-negative");
    emitter.validate();
    const auto& a = analysis;
    require(a.waveguide_length_a > 0.0, "analysis.L_in_lattice_constants", "must be positive");
    require(a.min_prominence_fraction >= 0.0 && a.min_prominence_fraction < 1.0, "analysis.min_prominence_fraction",
            "must lie in [0, 1)");
    require(a.min_separation_nm >= 0.0, "analysis.min_separation_nm", "must be non-negative");
    require(a.fit_ftol > 0.0, "analysis.fit_ftol", "must be positive");
    require(a.fit_max_iterations >= 1, "analysis.fit_max_iterations", "must be at least 1");
    require(std::isfinite(a.offset_nm), "analysis.offset_nm", "must be finite");
    require(a.pixels_per_a >= 16, "analysis.pixels_per_a", "need at least 16 pixels per lattice constant");
    require(a.field_k_norm >= 0.0 && a.field_k_norm <= 0.5, "analysis.field_k_norm", "must lie in [0, 0.5]");
    require(a.n_g_target > 0.0, "analysis.n_g_target", "must be positive");
    if (a.s_eff_nm2) require(*a.s_eff_nm2 > 0.0, "analysis.s_eff_nm2", "must be positive");
    if (a.wavelength_nm) require(*a.wavelength_nm > 0.0, "analysis.wavelength_nm", "must be positive");
    if (a.tau_on_ns) require(*a.tau_on_ns > 0.0, "analysis.tau_on_ns", "must be positive");
    if (a.gamma_wg_per_ns) require(*a.gamma_wg_per_ns >= 0.0, "analysis.gamma_wg_per_ns", "must be non-negative");
    require(a.local_field_ratio >= 0.0 && a.local_field_ratio <= 1.0, "analysis.local_field_ratio", "must lie in [0, 1]");
    if (a.t_start_ns && a.t_end_ns)
        require(*a.t_start_ns < *a.t_end_ns, "analysis.t_start_ns", "must be before t_end_ns");
    require(a.bootstrap_resamples >= 2, "analysis.bootstrap_resamples", "need at least 2 resamples");
    require(a.rep_period_ns > 0.0, "analysis.rep_period_ns", "must be positive");
    if (a.half_window_ns)
        require(*a.half_window_ns > 0.0 && *a.half_window_ns < a.rep_period_ns / 2.0, "analysis.half_window_ns",
                "must lie in (0, rep_period_ns / 2)");
}

SolverParams RunConfig::solver_params() const {
    SolverParams p;
    p.cutoff = solver.cutoff;
    p.n_bands = solver.n_bands;
    p.threads = solver.threads;
    p.n_eff = solver.n_eff;
    p.band_center_a_over_lambda = solver.band_center_a_over_lambda;
    return p;
}

namespace {

// ---- output helpers -----------------------------------------------------

Json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return io::round12(v);
}

template <class T>
Json opt(const std::optional<T>& v) {
    if (!v) return nullptr;
    return num(*v);
}

std::string cell(double v) { return io::format_number(v); }

Json header(const char* command) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    return j;
}

Json geometry_json(const WaveguideGeometry& g) {
    Json j;
    j["a_nm"] = num(g.lattice_constant_nm);
    j["r_nm"] = num(g.hole_radius_nm);
    j["d_nm"] = num(g.slab_thickness_nm);
    j["n_bulk"] = num(g.n_bulk);
    j["n_clad"] = num(g.n_clad);
    j["rows_per_side"] = g.rows_per_side;
    j["emitter_depth_nm"] = num(g.emitter_depth_nm);
    return j;
}

Json solver_json(const SolverConfig& s) {
    Json j;
    j["cutoff"] = s.cutoff;
    j["k_points"] = s.k_points;
    j["n_bands"] = s.n_bands;
    j["k_min"] = num(s.k_min);
    j["k_max"] = num(s.k_max);
    j["n_eff"] = opt(s.n_eff);
    j["band_center_a_over_lambda"] = num(s.band_center_a_over_lambda);
    return j;
}

Json emitter_json(const EmitterParams& e) {
    Json j;
    j["dipole_axis"] = {num(e.dipole_axis[0]), num(e.dipole_axis[1]), num(e.dipole_axis[2])};
    j["field_axis"] = {num(e.field_axis[0]), num(e.field_axis[1]), num(e.field_axis[2])};
    j["debye_waller"] = num(e.debye_waller);
    j["branching_fraction"] = num(e.branching_fraction);
    j["tau_bulk_ns"] = num(e.tau_bulk_ns);
    j["gamma_phc_per_ns"] = num(e.gamma_phc_per_ns);
    j["gamma_bulk_per_ns"] = num(e.gamma_bulk_per_ns);
    return j;
}

struct Context {
    RunConfig config;
    fs::path out_dir;
    std::ostream& out;
};

void emit_json(const Context& ctx, const Json& j, const char* file) {
    const std::string text = j.dump(2) + "\n";
    io::write_text(ctx.out_dir / file, text);
    ctx.out << text;
}

WaveguideAnalysis run_analysis(const RunConfig& c) {
    const auto path = uniform_k_path(c.solver.k_points, c.solver.k_min, c.solver.k_max);
    return analyze_waveguide(c.geometry, c.solver_params(), path);
}

Json analysis_json(const WaveguideAnalysis& an) {
    Json j;
    j["n_eff_history"] = Json::array();
    for (double n : an.n_eff_history) j["n_eff_history"].push_back(num(n));
    j["basis_size"] = an.bands.basis.size();
    j["gap"] = {{"has_gap", an.gap.has_gap}, {"gap_lo", num(an.gap.gap_lo)}, {"gap_hi", num(an.gap.gap_hi)}};
    j["guided_windows"] = Json::array();
    for (const auto& w : an.gap.guided)
        j["guided_windows"].push_back({{"band_index", w.track},
                                       {"parity", std::string(parity_name(w.parity))},
                                       {"a_over_lambda_lo", num(w.lo)},
                                       {"a_over_lambda_hi", num(w.hi)}});
    for (const auto* g : {&an.even, &an.odd}) {
        const char* key = g == &an.even ? "even" : "odd";
        if (!*g) {
            j[key] = nullptr;
            continue;
        }
        const auto pts = band_points(an.bands, **g);
        Json b;
        b["band_index"] = (*g)->track;
        b["a_over_lambda_lo"] = num(std::min_element(pts.begin(), pts.end(), [](auto& x, auto& y) {
                                        return x.a_over_lambda < y.a_over_lambda;
                                    })->a_over_lambda);
        b["a_over_lambda_hi"] = num(std::max_element(pts.begin(), pts.end(), [](auto& x, auto& y) {
                                        return x.a_over_lambda < y.a_over_lambda;
                                    })->a_over_lambda);
        b["k_norm"] = Json::array();
        b["a_over_lambda"] = Json::array();
        for (const auto& p : pts) {
            b["k_norm"].push_back(num(p.k_norm));
            b["a_over_lambda"].push_back(num(p.a_over_lambda));
        }
        j[key] = b;
    }
    return j;
}

void write_field_csv(const fs::path& path, const ModeField& f) {
    std::string text = "x_nm,y_nm,re_hz,im_hz,re_ex,im_ex,re_ey,im_ey\n";
    for (std::size_t iy = 0; iy < f.ny; ++iy)
        for (std::size_t ix = 0; ix < f.nx; ++ix) {
            const std::size_t i = f.index(ix, iy);
            text += cell(f.x(ix)) + ',' + cell(f.y(iy)) + ',' + cell(f.hz[i].real()) + ',' + cell(f.hz[i].imag()) +
                    ',' + cell(f.ex[i].real()) + ',' + cell(f.ex[i].imag()) + ',' + cell(f.ey[i].real()) + ',' +
                    cell(f.ey[i].imag()) + '\n';
        }
    io::write_text(path, text);
}

// ---- commands -----------------------------------------------------------

int cmd_bands(const Context& ctx) {
    const auto an = run_analysis(ctx.config);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t ik = 0; ik < an.bands.samples.size(); ++ik)
        for (std::size_t b = 0; b < an.bands.tracks.size(); ++b) {
            const auto& m = an.bands.tracked(b, ik);
            rows.push_back({cell(an.bands.samples[ik].k_norm), std::to_string(b), cell(m.a_over_lambda),
                            std::string(parity_name(m.parity.parity))});
        }
    io::write_text(ctx.out_dir / "bands.csv", io::csv_document({"k_norm", "band_index", "a_over_lambda", "parity"}, rows));

    // Fields of the guided modes at the sample nearest field_k_norm.
    const auto grid = rasterize_epsilon(an.bands.cell, an.bands.geom, an.bands.n_eff, ctx.config.analysis.pixels_per_a);
    Json fields = Json::object();
    for (const auto* g : {&an.even, &an.odd}) {
        if (!*g) continue;
        std::size_t best = (*g)->k_indices.front();
        for (std::size_t ik : (*g)->k_indices)
            if (std::abs(an.bands.samples[ik].k_norm - ctx.config.analysis.field_k_norm) <
                std::abs(an.bands.samples[best].k_norm - ctx.config.analysis.field_k_norm))
                best = ik;
        const auto& m = an.bands.tracked((*g)->track, best);
        const auto f = reconstruct_field(m.eigvec, an.bands.basis, an.bands.samples[best].k, grid);
        const std::string name = std::string("field_") + std::string(parity_name((*g)->parity)) + ".csv";
        write_field_csv(ctx.out_dir / name, f);
        fields[std::string(parity_name((*g)->parity))] = {{"file", name}, {"k_norm", num(an.bands.samples[best].k_norm)},
                                                          {"a_over_lambda", num(m.a_over_lambda)}};
    }

    Json j = header("bands");
    j["geometry"] = geometry_json(ctx.config.geometry);
    j["solver"] = solver_json(ctx.config.solver);
    j["result"] = analysis_json(an);
    j["fields"] = fields;
    j["files"] = {"bands.csv"};
    emit_json(ctx, j, "bands.json");
    return kExitOk;
}

int cmd_ngroup(const Context& ctx) {
    const auto an = run_analysis(ctx.config);
    const double offset = ctx.config.analysis.offset_nm;
    std::vector<std::vector<std::string>> rows;
    Json bands = Json::object();
    const double k_step = (ctx.config.solver.k_max - ctx.config.solver.k_min) / (ctx.config.solver.k_points - 1);
    for (const auto* g : {&an.even, &an.odd}) {
        if (!*g) continue;
        const auto curve = guided_group_index(an.bands, **g, offset);
        const std::string label(parity_name(curve.band_label));
        Json b;
        double max_ng = 0.0;
        double max_k = 0.0;
        for (const auto& p : curve.points) {
            rows.push_back({cell(p.wavelength_nm), cell(p.n_g), label, cell(p.k_norm), p.flagged ? "1" : "0"});
            if (p.n_g > max_ng) {
                max_ng = p.n_g;
                max_k = p.k_norm;
            }
        }
        b["max_n_g"] = num(max_ng);
        b["k_norm_at_max"] = num(max_k);
        b["points"] = curve.points.size();
        b["flagged_points"] = std::count_if(curve.points.begin(), curve.points.end(), [](auto& p) { return p.flagged; });
        b["divergent_k_norms"] = Json::array();
        for (double k : curve.divergent_k_norms) b["divergent_k_norms"].push_back(num(k));
        bands[label] = b;
    }
    io::write_text(ctx.out_dir / "ngroup.csv",
                   io::csv_document({"wavelength_nm", "n_g", "band", "k_norm", "flagged"}, rows));
    Json j = header("ngroup");
    j["geometry"] = geometry_json(ctx.config.geometry);
    j["solver"] = solver_json(ctx.config.solver);
    j["offset_nm"] = num(offset);
    j["k_step"] = num(k_step);  // the reported maxima are resolution-limited
    j["n_eff"] = num(an.n_eff());
    j["bands"] = bands;
    j["files"] = {"ngroup.csv"};
    emit_json(ctx, j, "ngroup.json");
    return kExitOk;
}

int cmd_coupling(const Context& ctx) {
    const auto& c = ctx.config;
    CouplingInputs in;
    in.n_g = c.analysis.n_g_target;
    in.n = c.geometry.n_bulk;
    in.local_field_ratio = c.analysis.local_field_ratio;
    in.tau_on_ns = c.analysis.tau_on_ns;
    in.gamma_wg_per_ns = c.analysis.gamma_wg_per_ns;

    Json solver_part = nullptr;
    std::vector<AchievablePoint> curve_pts;
    if (!c.analysis.s_eff_nm2 || !c.analysis.wavelength_nm) {
        const auto an = run_analysis(c);
        if (!an.even) throw NumericalError("no even guided band found; cannot take S_eff from the solver");
        const auto curve = guided_group_index(an.bands, *an.even, c.analysis.offset_nm);
        const auto idx = point_near_group_index(curve, c.analysis.n_g_target);
        if (!idx) throw NumericalError("even band has no group-index points");
        const auto& p = curve.points[*idx];
        std::size_t ik = 0;
        while (an.bands.samples[ik].k_norm != p.k_norm) ++ik;
        const double s_eff = guided_mode_area(an.bands, an.even->track, ik, c.analysis.pixels_per_a);
        in.s_eff_nm2 = c.analysis.s_eff_nm2.value_or(s_eff);
        in.wavelength_nm = c.analysis.wavelength_nm.value_or(p.wavelength_nm);
        solver_part = {{"n_eff", num(an.n_eff())},
                       {"k_norm", num(p.k_norm)},
                       {"n_g_at_point", num(p.n_g)},
                       {"wavelength_nm", num(p.wavelength_nm)},
                       {"s_eff_nm2", num(s_eff)},
                       {"pixels_per_a", c.analysis.pixels_per_a}};
        curve_pts = achievable_beta_curve(curve, in.s_eff_nm2, in.n, c.emitter);
    } else {
        in.s_eff_nm2 = *c.analysis.s_eff_nm2;
        in.wavelength_nm = *c.analysis.wavelength_nm;
    }
    const auto r = coupling_report(c.geometry, in, c.emitter);

    Json j = header("coupling");
    j["inputs"] = {{"n_g", num(in.n_g)},
                   {"s_eff_nm2", num(in.s_eff_nm2)},
                   {"wavelength_nm", num(in.wavelength_nm)},
                   {"n", num(in.n)},
                   {"local_field_ratio", num(in.local_field_ratio)},
                   {"tau_on_ns", opt(in.tau_on_ns)},
                   {"gamma_wg_per_ns", opt(in.gamma_wg_per_ns)}};
    j["emitter"] = emitter_json(r.emitter);
    j["geometry"] = geometry_json(c.geometry);
    j["solver"] = solver_part;
    j["report"] = {{"n_g", num(in.n_g)},
                   {"S_eff_nm2", num(in.s_eff_nm2)},
                   {"orientation_factor", num(r.orientation_factor)},
                   {"depth_factor", num(r.depth_factor)},
                   {"rate_enhancement", num(r.rate_enhancement)},
                   {"purcell_Fp", num(r.purcell_fp)},
                   {"beta", num(r.beta)},
                   {"F_ZPL", opt(r.f_zpl)},
                   {"measured_beta", opt(r.measured_beta)}};
    if (!curve_pts.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& p : curve_pts) rows.push_back({cell(p.wavelength_nm), cell(p.n_g), cell(p.purcell), cell(p.beta)});
        io::write_text(ctx.out_dir / "achievable_beta.csv", io::csv_document({"wavelength_nm", "n_g", "Fp", "beta"}, rows));
        j["files"] = {"achievable_beta.csv"};
    }
    emit_json(ctx, j, "coupling.json");
    return kExitOk;
}

LsqOptions lsq_options(const AnalysisConfig& a) {
    LsqOptions o;
    o.ftol = a.fit_ftol;
    o.max_iterations = a.fit_max_iterations;
    return o;
}

int cmd_fit_spectrum(const Context& ctx, const fs::path& input) {
    const auto& a = ctx.config.analysis;
    const auto s = load_spectrum(input);
    FringeOptions o;
    o.waveguide_length_nm = a.waveguide_length_a * ctx.config.geometry.lattice_constant_nm;
    o.min_prominence_fraction = a.min_prominence_fraction;
    o.min_separation_nm = a.min_separation_nm;
    o.subtract_background = a.subtract_background;
    o.lsq = lsq_options(a);
    const auto fa = analyze_fringes(s, o);

    Json j = header("fit-spectrum");
    j["input"] = input.filename().string();
    j["waveguide_length_nm"] = num(fa.waveguide_length_nm);
    if (fa.background)
        j["background"] = {{"amplitude", num(fa.background->amplitude())},
                           {"center_nm", num(fa.background->center_nm)},
                           {"sigma_nm", num(fa.background->sigma_nm())},
                           {"offset", num(fa.background->offset())},
                           {"peak", num(fa.background->peak)},
                           {"curvature", num(fa.background->curvature)}};
    else
        j["background"] = nullptr;
    j["fit_offset"] = num(fa.fit_offset);
    j["fit_iterations"] = fa.fit_iterations;
    j["peaks"] = Json::array();
    for (const auto& p : fa.peaks)
        j["peaks"].push_back({{"center_nm", num(p.center_nm)},
                              {"center_sigma_nm", num(p.center_sigma_nm)},
                              {"fwhm_nm", num(p.fwhm_nm)},
                              {"fwhm_sigma_nm", num(p.fwhm_sigma_nm)},
                              {"amplitude", num(p.amplitude)},
                              {"amplitude_sigma", num(p.amplitude_sigma)}});
    std::vector<std::vector<std::string>> ng_rows, q_rows;
    double max_ng = 0.0;
    for (const auto& p : fa.ng_points) {
        ng_rows.push_back({cell(p.wavelength_nm), cell(p.n_g)});
        max_ng = std::max(max_ng, p.n_g);
    }
    for (const auto& p : fa.q_points) q_rows.push_back({cell(p.wavelength_nm), cell(p.q)});
    j["ng_points"] = Json::array();
    for (const auto& p : fa.ng_points) j["ng_points"].push_back({{"wavelength_nm", num(p.wavelength_nm)}, {"n_g", num(p.n_g)}});
    j["q_points"] = Json::array();
    for (const auto& p : fa.q_points) j["q_points"].push_back({{"wavelength_nm", num(p.wavelength_nm)}, {"Q", num(p.q)}});
    j["max_n_g"] = num(max_ng);
    io::write_text(ctx.out_dir / "ng.csv", io::csv_document({"lambda_nm", "ng"}, ng_rows));
    io::write_text(ctx.out_dir / "q.csv", io::csv_document({"lambda_nm", "Q"}, q_rows));
    j["files"] = {"ng.csv", "q.csv"};
    emit_json(ctx, j, "fit_spectrum.json");
    return kExitOk;
}

int cmd_fit_lifetime(const Context& ctx, const fs::path& input) {
    const auto& a = ctx.config.analysis;
    const auto trace = load_decay_trace(input);
    DecayWindow w{a.t_start_ns, a.t_end_ns};
    std::optional<BootstrapOptions> boot;
    if (a.bootstrap) boot = BootstrapOptions{a.bootstrap_resamples, a.seed};
    const auto f = fit_decay(trace, w, boot, lsq_options(a));
    Json j = header("fit-lifetime");
    j["input"] = input.filename().string();
    j["tau_ns"] = num(f.tau_ns);
    j["tau_sigma_ns"] = num(f.tau_sigma_ns);
    j["tau_bootstrap_sigma_ns"] = opt(f.tau_bootstrap_sigma_ns);
    j["bootstrap_seed"] = boot ? Json(boot->seed) : Json(nullptr);
    j["amplitude"] = num(f.amplitude);
    j["amplitude_sigma"] = num(f.amplitude_sigma);
    j["offset"] = num(f.offset);
    j["offset_sigma"] = num(f.offset_sigma);
    j["window_ns"] = {num(f.t_start_ns), num(f.t_end_ns)};
    j["bins"] = f.bins;
    j["reduced_chi2"] = num(f.reduced_chi2);
    j["iterations"] = f.iterations;
    emit_json(ctx, j, "fit_lifetime.json");
    return kExitOk;
}

int cmd_fit_g2(const Context& ctx, const fs::path& input) {
    const auto& a = ctx.config.analysis;
    const auto hist = load_g2_histogram(input, a.rep_period_ns);
    const double hw = a.half_window_ns.value_or(a.rep_period_ns / 4.0);
    const auto areas = g2_peak_areas(hist, hw);
    const auto r = g2_zero(areas);
    Json j = header("fit-g2");
    j["input"] = input.filename().string();
    j["rep_period_ns"] = num(a.rep_period_ns);
    j["half_window_ns"] = num(hw);
    j["g2_zero"] = num(r.g2_zero);
    j["g2_sigma"] = num(r.g2_sigma);
    j["central_area"] = num(r.central_area);
    j["side_mean"] = num(r.side_mean);
    j["side_peaks_used"] = r.side_peaks_used;
    j["bunching_excluded"] = r.bunching_excluded;
    j["peaks"] = Json::array();
    for (const auto& p : areas)
        j["peaks"].push_back({{"order", p.order}, {"center_ns", num(p.center_ns)}, {"area", num(p.area)}});
    emit_json(ctx, j, "fit_g2.json");
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Slow-light photonic-crystal waveguide modelling and measurement analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    std::optional<double> offset_nm;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory (created if missing)");
    app.add_option("--offset-nm", offset_nm, "additive wavelength offset for simulated curves");
    app.add_option("--seed", seed, "enable the lifetime bootstrap with this seed");
    app.add_option("--threads", threads, "worker threads for the band sweep (0: all cores)");

    std::string input;
    auto* bands = app.add_subcommand("bands", "band structure, guided windows and mode fields");
    auto* ngroup = app.add_subcommand("ngroup", "group-index curves of the guided bands");
    auto* coupling = app.add_subcommand("coupling", "Purcell, beta and F_ZPL report");
    auto* fit_spec = app.add_subcommand("fit-spectrum", "Fabry-Perot fringe fit: n_g and Q");
    auto* fit_life = app.add_subcommand("fit-lifetime", "single-exponential lifetime fit");
    auto* fit_g2 = app.add_subcommand("fit-g2", "pulsed g2(0) from peak areas");
    for (auto* sub : {fit_spec, fit_life, fit_g2}) sub->add_option("input", input, "two-column CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        Context ctx{config_path.empty() ? RunConfig{} : load_config(config_path), out_dir, out};
        if (offset_nm) ctx.config.analysis.offset_nm = *offset_nm;
        if (threads) ctx.config.solver.threads = *threads;
        if (seed) {
            ctx.config.analysis.bootstrap = true;
            ctx.config.analysis.seed = *seed;
        }
        ctx.config.validate();
        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec) throw ParameterError("--out", ctx.out_dir.string() + ": " + ec.message());

        if (*bands) return cmd_bands(ctx);
        if (*ngroup) return cmd_ngroup(ctx);
        if (*coupling) return cmd_coupling(ctx);
        if (*fit_spec) return cmd_fit_spectrum(ctx, input);
        if (*fit_life) return cmd_fit_lifetime(ctx, input);
        if (*fit_g2) return cmd_fit_g2(ctx, input);
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}

}  // namespace slowlight::cli
