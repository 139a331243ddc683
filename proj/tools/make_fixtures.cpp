// Regenerates the CSV fixtures under tests/fixtures from the synthetic
// generators. Usage: make_fixtures <out_dir>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "slowlight/io.hpp"
#include "slowlight/synthetic.hpp"

namespace sl = slowlight;
namespace fs = std::filesystem;

namespace {

void write_columns(const fs::path& path, const char* xname, const char* yname, const std::vector<double>& x,
                   const std::vector<double>& y) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) rows.push_back({sl::io::format_number(x[i]), sl::io::format_number(y[i])});
    sl::io::write_text(path, sl::io::csv_document({xname, yname}, rows));
}

}  // namespace

// Group index rising towards the band edge and saturating at 73, the shape of
// the measured fringe curve.
double fixture_group_index(double lambda_nm) {
    return std::min(73.0, 10.0 + 66.0 * std::exp(-(737.2 - lambda_nm) / 2.5));
}

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <out_dir>\n";
        return 2;
    }
    const fs::path out = argv[1];
    fs::create_directories(out);

    const double L = 51.0 * 261.0;
    sl::synthetic::CombSpectrum comb;
    comb.centers_nm = sl::synthetic::fp_comb_centers(fixture_group_index, L, 716.0, 737.9);
    // Q rising towards the slow-light edge, the trend of the measured linewidths.
    comb.fwhm_of_lambda = [](double lambda) { return lambda / (3000.0 + 240.0 * (lambda - 715.0)); };
    comb.amplitude = 100.0;
    comb.offset = 2.0;
    comb.lambda_min_nm = 714.0;
    comb.lambda_max_nm = 738.0;
    comb.step_nm = 0.005;
    comb.bg_amplitude = 40.0;
    comb.bg_center_nm = 727.0;
    comb.bg_sigma_nm = 8.0;
    comb.noise_fraction = 0.01;
    comb.seed = 7;
    const auto s = sl::synthetic::comb_spectrum(comb);
    write_columns(out / "fp_comb.csv", "wavelength_nm", "counts", s.wavelength_nm, s.intensity);

    sl::synthetic::DecaySynth decay;
    decay.tau_ns = 1.01;
    decay.peak_counts = 2000.0;
    decay.background = 5.0;
    decay.seed = 11;
    const auto t = sl::synthetic::decay_trace(decay);
    write_columns(out / "decay_trace.csv", "time_ns", "counts", t.time_ns, t.counts);

    sl::synthetic::G2Synth g2;
    g2.ratio = 0.47;
    g2.seed = 13;
    const auto h = sl::synthetic::g2_histogram(g2);
    write_columns(out / "g2_histogram.csv", "delay_ns", "counts", h.delay_ns, h.counts);

    std::cout << "wrote " << comb.centers_nm.size() << " fringes, " << t.size() << " decay bins, " << h.delay_ns.size()
              << " g2 bins to " << out.string() << "\n";
    return 0;
}
