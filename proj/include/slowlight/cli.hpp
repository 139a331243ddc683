#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "slowlight/bandsolver.hpp"
#include "slowlight/coupling.hpp"
#include "slowlight/geometry.hpp"

namespace slowlight::cli {

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

struct SolverConfig {
    int cutoff = 4;
    int k_points = 64;
    int n_bands = 24;
    double k_min = 0.25;
    double k_max = 0.5;
    std::optional<double> n_eff;
    double band_center_a_over_lambda = 0.37;
    int threads = 0;
};

struct AnalysisConfig {
    double waveguide_length_a = 51.0;  // L in lattice constants
    double min_prominence_fraction = 0.05;
    double min_separation_nm = 0.0;
    bool subtract_background = true;
    double fit_ftol = 1e-10;
    int fit_max_iterations = 200;
    double offset_nm = 0.0;
    int pixels_per_a = 64;
    double field_k_norm = 0.45;
    // Coupling
    double n_g_target = 70.0;
    std::optional<double> s_eff_nm2;      // otherwise from the solver's even mode
    std::optional<double> wavelength_nm;  // otherwise from the even band at n_g_target
    std::optional<double> tau_on_ns;
    std::optional<double> gamma_wg_per_ns;
    double local_field_ratio = 1.0;
    // Time traces
    std::optional<double> t_start_ns;
    std::optional<double> t_end_ns;
    bool bootstrap = false;
    int bootstrap_resamples = 200;
    std::uint64_t seed = 1;
    double rep_period_ns = 1e3 / 78.0;
    std::optional<double> half_window_ns;  // default rep_period / 4
};

struct RunConfig {
    WaveguideGeometry geometry;
    SolverConfig solver;
    EmitterParams emitter;
    AnalysisConfig analysis;

    // Every field against the preconditions of the modules that use it.
    void validate() const;
    SolverParams solver_params() const;
};

// JSON with optional blocks "geometry", "solver", "emitter", "analysis".
// Unknown keys and wrongly typed values are ParameterErrors naming the key.
RunConfig parse_config(const std::string& json_text, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

// Entry point of the slowlight executable. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slowlight::cli
