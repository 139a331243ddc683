#include "slowlight/synthetic.hpp"

#include <cmath>
#include <random>

#include "slowlight/errors.hpp"

namespace slowlight::synthetic {

std::vector<double> fp_comb_centers(const std::function<double(double)>& n_g_of_lambda, double waveguide_length_nm,
                                    double lambda_start_nm, double lambda_end_nm) {
    if (!(waveguide_length_nm > 0.0)) throw ParameterError("waveguide_length_nm", "must be positive");
    if (!(lambda_end_nm > lambda_start_nm)) throw ParameterError("lambda_end_nm", "must exceed lambda_start_nm");
    std::vector<double> c{lambda_start_nm};
    while (true) {
        const double l1 = c.back();
        double dl = l1 * l1 / (2.0 * waveguide_length_nm * n_g_of_lambda(l1));
        for (int it = 0; it < 50; ++it) {
            const double ng = n_g_of_lambda(l1 + dl / 2.0);
            if (!(ng > 0.0)) throw ParameterError("n_g", "group index must stay positive");
            // l1 (l1 + dl) / (2 L dl) = ng  =>  dl = l1^2 / (2 L ng - l1)
            const double next = l1 * l1 / (2.0 * waveguide_length_nm * ng - l1);
            if (std::abs(next - dl) < 1e-15 * l1) {
                dl = next;
                break;
            }
            dl = next;
        }
        if (!(dl > 0.0)) throw ParameterError("n_g", "comb spacing is not positive");
        if (l1 + dl > lambda_end_nm) break;
        c.push_back(l1 + dl);
    }
    return c;
}

Spectrum comb_spectrum(const CombSpectrum& spec) {
    if (!(spec.step_nm > 0.0) || !(spec.lambda_max_nm > spec.lambda_min_nm))
        throw ParameterError("comb", "bad wavelength grid");
    std::optional<std::mt19937_64> rng;
    if (spec.seed) rng.emplace(*spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_fraction * spec.amplitude);
    Spectrum s;
    const auto n = static_cast<std::size_t>(std::floor((spec.lambda_max_nm - spec.lambda_min_nm) / spec.step_nm)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = spec.lambda_min_nm + static_cast<double>(i) * spec.step_nm;
        double y = spec.offset;
        for (double c : spec.centers_nm) {
            const double h = 0.5 * spec.fwhm_of_lambda(c);
            const double d = x - c;
            y += spec.amplitude * h * h / (d * d + h * h);
        }
        if (spec.bg_amplitude != 0.0) {
            const double u = (x - spec.bg_center_nm) / spec.bg_sigma_nm;
            y += spec.bg_amplitude * std::exp(-0.5 * u * u);
        }
        if (rng && spec.noise_fraction > 0.0) y += noise(*rng);
        s.wavelength_nm.push_back(x);
        s.intensity.push_back(std::max(y, 0.0));
    }
    return s;
}

DecayTrace decay_trace(const DecaySynth& spec) {
    if (!(spec.tau_ns > 0.0) || !(spec.bin_ns > 0.0) || spec.bins < 2) throw ParameterError("decay", "bad decay spec");
    std::optional<std::mt19937_64> rng;
    if (spec.seed) rng.emplace(*spec.seed);
    DecayTrace t;
    for (std::size_t i = 0; i < spec.bins; ++i) {
        const double time = static_cast<double>(i) * spec.bin_ns;
        double mean = spec.background;
        if (time >= spec.t_peak_ns)
            mean += spec.peak_counts * std::exp(-(time - spec.t_peak_ns) / spec.tau_ns);
        else if (time > spec.t_peak_ns - spec.rise_ns)
            mean += spec.peak_counts * (1.0 - (spec.t_peak_ns - time) / spec.rise_ns);
        double y = mean;
        if (rng) {
            std::poisson_distribution<long long> pois(std::max(mean, 1e-12));
            y = static_cast<double>(pois(*rng));
        }
        t.time_ns.push_back(time);
        t.counts.push_back(y);
    }
    return t;
}

G2Histogram g2_histogram(const G2Synth& spec) {
    if (!(spec.rep_period_ns > 0.0) || !(spec.bin_ns > 0.0) || spec.side_peaks < 1 || !(spec.peak_tau_ns > 0.0))
        throw ParameterError("g2", "bad histogram spec");
    std::optional<std::mt19937_64> rng;
    if (spec.seed) rng.emplace(*spec.seed);
    // Integral of exp(-|t|/tau) / (2 tau) from -inf to x.
    auto cdf = [&](double x) {
        return x < 0.0 ? 0.5 * std::exp(x / spec.peak_tau_ns) : 1.0 - 0.5 * std::exp(-x / spec.peak_tau_ns);
    };
    const double half_span = (spec.side_peaks + 0.5) * spec.rep_period_ns;
    const auto half_bins = static_cast<long>(std::floor(half_span / spec.bin_ns));
    G2Histogram h;
    h.rep_period_ns = spec.rep_period_ns;
    for (long i = -half_bins; i <= half_bins; ++i) {
        const double c = static_cast<double>(i) * spec.bin_ns;
        const double a = c - spec.bin_ns / 2.0;
        const double b = c + spec.bin_ns / 2.0;
        double mean = spec.background;
        for (int m = -spec.side_peaks - 1; m <= spec.side_peaks + 1; ++m) {
            double area = spec.side_area;
            if (m == 0) area *= spec.ratio;
            if (std::abs(m) == 1) area *= 1.0 + spec.bunching;
            const double t0 = m * spec.rep_period_ns;
            mean += area * (cdf(b - t0) - cdf(a - t0));
        }
        double y = mean;
        if (rng) {
            std::poisson_distribution<long long> pois(std::max(mean, 1e-12));
            y = static_cast<double>(pois(*rng));
        }
        h.delay_ns.push_back(c);
        h.counts.push_back(y);
    }
    return h;
}

}  // namespace slowlight::synthetic
