#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "slowlight/least_squares.hpp"

namespace slowlight {

struct Spectrum {
    std::vector<double> wavelength_nm;  // strictly increasing
    std::vector<double> intensity;      // counts, >= 0

    std::size_t size() const { return wavelength_nm.size(); }
    // Throws DataError on length mismatch, non-finite or negative counts, or
    // wavelengths that are not strictly increasing.
    void validate() const;
};

// Two-column CSV (wavelength_nm, counts). Rows are sorted by wavelength;
// duplicated wavelengths and negative counts are data errors.
Spectrum load_spectrum(const std::filesystem::path& path);
Spectrum spectrum_from_columns(std::vector<double> wavelength_nm, std::vector<double> intensity);

// A exp(-(x - c)^2 / (2 sigma^2)) + B, held as the value at the centre
// (A + B), the curvature there (A / sigma^2) and kappa = 1 / sigma^2. The
// form stays finite as sigma -> infinity, where it becomes a parabola.
struct GaussianBackground {
    double center_nm = 0.0;
    double peak = 0.0;
    double curvature = 0.0;
    double kappa = 1.0;
    std::vector<double> cost_history;  // of the final pass

    static GaussianBackground from_gaussian(double amplitude, double center_nm, double sigma_nm, double offset);
    // Infinite when kappa == 0.
    double amplitude() const { return curvature / kappa; }
    double sigma_nm() const { return 1.0 / std::sqrt(kappa); }
    double offset() const { return peak - amplitude(); }
    double operator()(double wavelength_nm) const;
};

struct BackgroundResult {
    Spectrum corrected;  // input - background, clamped at 0
    GaussianBackground background;
};

// Gaussian + constant fitted to the whole spectrum, with two sigma-clipping
// passes that drop points sitting well above the current model (the fringes).
BackgroundResult subtract_background(const Spectrum& s, const LsqOptions& lsq = {});

// Local maxima whose prominence exceeds min_prominence_fraction of the global
// maximum, thinned to min_separation_nm (taller peaks win), in wavelength order.
std::vector<double> find_peaks(const Spectrum& s, double min_prominence_fraction = 0.05,
                               double min_separation_nm = 0.0);

struct LorentzianPeak {
    double center_nm = 0.0;
    double fwhm_nm = 0.0;
    double amplitude = 0.0;
    double center_sigma_nm = 0.0;
    double fwhm_sigma_nm = 0.0;
    double amplitude_sigma = 0.0;
};

struct LorentzianFit {
    std::vector<LorentzianPeak> peaks;  // wavelength order
    double offset = 0.0;
    double offset_sigma = 0.0;
    double cost = 0.0;
    int iterations = 0;
};

// Simultaneous fit of sum_i A_i (g_i/2)^2 / ((x - x_i)^2 + (g_i/2)^2) + c.
LorentzianFit fit_lorentzians(const Spectrum& s, std::span<const double> candidates, const LsqOptions& lsq = {});

struct NgPoint {
    double wavelength_nm = 0.0;
    double n_g = 0.0;
};

struct QPoint {
    double wavelength_nm = 0.0;
    double q = 0.0;
};

// Adjacent fringes l1 < l2: n_g = l1 l2 / (2 L (l2 - l1)) at the midpoint.
std::vector<NgPoint> fringe_group_index(std::span<const LorentzianPeak> peaks, double waveguide_length_nm);
std::vector<QPoint> q_factors(std::span<const LorentzianPeak> peaks);

struct FringeOptions {
    double waveguide_length_nm = 51.0 * 261.0;
    double min_prominence_fraction = 0.05;
    double min_separation_nm = 0.0;
    bool subtract_background = true;
    LsqOptions lsq;
};

struct FringeAnalysis {
    std::optional<GaussianBackground> background;
    std::vector<LorentzianPeak> peaks;
    std::vector<NgPoint> ng_points;
    std::vector<QPoint> q_points;
    double waveguide_length_nm = 0.0;
    double fit_offset = 0.0;
    int fit_iterations = 0;
};

FringeAnalysis analyze_fringes(const Spectrum& s, const FringeOptions& options = {});

}  // namespace slowlight
