#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "slowlight/least_squares.hpp"

namespace slowlight {

struct DecayTrace {
    std::vector<double> time_ns;  // strictly increasing
    std::vector<double> counts;   // >= 0

    std::size_t size() const { return time_ns.size(); }
    void validate() const;
};

DecayTrace load_decay_trace(const std::filesystem::path& path);

struct DecayWindow {
    // Defaults: start one bin after the trace maximum, end at the last bin.
    std::optional<double> t_start_ns;
    std::optional<double> t_end_ns;
};

struct BootstrapOptions {
    int resamples = 200;
    std::uint64_t seed = 1;
};

struct DecayFit {
    double tau_ns = 0.0;
    double tau_sigma_ns = 0.0;  // covariance based
    double amplitude = 0.0;     // A in A exp(-t/tau) + B
    double amplitude_sigma = 0.0;
    double offset = 0.0;  // B
    double offset_sigma = 0.0;
    double t_start_ns = 0.0;
    double t_end_ns = 0.0;
    std::size_t bins = 0;
    double reduced_chi2 = 0.0;
    int iterations = 0;
    std::optional<double> tau_bootstrap_sigma_ns;
};

// Least-squares fit of A exp(-t/tau) + B over the window, with Poisson
// weights 1/sqrt(max(counts, 1)).
DecayFit fit_decay(const DecayTrace& trace, const DecayWindow& window = {},
                   const std::optional<BootstrapOptions>& bootstrap = std::nullopt, const LsqOptions& lsq = {});

struct G2Histogram {
    std::vector<double> delay_ns;  // bin centres, uniform spacing
    std::vector<double> counts;
    double rep_period_ns = 1e3 / 78.0;

    double bin_width() const { return delay_ns.size() > 1 ? delay_ns[1] - delay_ns[0] : 0.0; }
    void validate() const;
};

G2Histogram load_g2_histogram(const std::filesystem::path& path, double rep_period_ns);

struct G2PeakArea {
    int order = 0;  // peak at order * rep_period
    double center_ns = 0.0;
    double area = 0.0;  // summed counts of bins centred within the window
};

// One entry per peak whose full +-half_window lies inside the histogram.
std::vector<G2PeakArea> g2_peak_areas(const G2Histogram& hist, double half_window_ns);

struct G2Result {
    double g2_zero = 0.0;
    double g2_sigma = 0.0;  // Poisson counting error
    double central_area = 0.0;
    double side_mean = 0.0;
    int side_peaks_used = 0;
    bool bunching_excluded = false;
};

// g2(0) = area(0) / mean(side areas). If the |m| = 1 peaks differ from the
// farther ones by more than 10% (long-lived bunching), they are excluded.
G2Result g2_zero(std::span<const G2PeakArea> areas);

}  // namespace slowlight
