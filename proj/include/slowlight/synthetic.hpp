#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "slowlight/spectra.hpp"
#include "slowlight/timetrace.hpp"

// Ground-truth generators for fixtures and tests. Noise is drawn only when a
// seed is given, so unseeded output is exact.
namespace slowlight::synthetic {

// Fringe centres from lambda_start upward: each spacing solves
// n_g(midpoint) = l1 l2 / (2 L (l2 - l1)).
std::vector<double> fp_comb_centers(const std::function<double(double)>& n_g_of_lambda, double waveguide_length_nm,
                                    double lambda_start_nm, double lambda_end_nm);

struct CombSpectrum {
    std::vector<double> centers_nm;
    std::function<double(double)> fwhm_of_lambda = [](double) { return 0.05; };
    double amplitude = 100.0;
    double offset = 0.0;
    double lambda_min_nm = 0.0;
    double lambda_max_nm = 0.0;
    double step_nm = 0.005;
    // Gaussian background (amplitude 0 disables it).
    double bg_amplitude = 0.0;
    double bg_center_nm = 0.0;
    double bg_sigma_nm = 1.0;
    // Additive Gaussian noise, as a fraction of amplitude.
    double noise_fraction = 0.0;
    std::optional<std::uint64_t> seed;
};

// Negative samples after noise are clipped to zero.
Spectrum comb_spectrum(const CombSpectrum& spec);

struct DecaySynth {
    double tau_ns = 1.0;
    double peak_counts = 1e4;
    double background = 0.0;
    double bin_ns = 0.05;
    double t_peak_ns = 2.0;
    double rise_ns = 0.1;  // linear rise ending at t_peak
    std::size_t bins = 400;
    std::optional<std::uint64_t> seed;  // Poisson counts when set
};

DecayTrace decay_trace(const DecaySynth& spec);

struct G2Synth {
    double rep_period_ns = 1e3 / 78.0;
    double ratio = 0.47;          // central / side area
    double side_area = 5000.0;    // counts per side peak
    double peak_tau_ns = 1.0;     // two-sided exponential width
    double bin_ns = 0.1;
    int side_peaks = 5;           // per side
    double background = 0.0;      // counts per bin
    double bunching = 0.0;        // extra relative area on the |m| = 1 peaks
    std::optional<std::uint64_t> seed;
};

// Peaks are integrated exactly over each bin.
G2Histogram g2_histogram(const G2Synth& spec);

}  // namespace slowlight::synthetic
