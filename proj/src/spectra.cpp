#include "slowlight/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slowlight/errors.hpp"
#include "slowlight/io.hpp"
#include "slowlight/kernels/kernels.hpp"
#include "slowlight/least_squares.hpp"

namespace slowlight {

void Spectrum::validate() const {
    if (wavelength_nm.size() != intensity.size()) throw DataError("spectrum columns differ in length");
    for (std::size_t i = 0; i < size(); ++i) {
        if (!std::isfinite(wavelength_nm[i]) || !std::isfinite(intensity[i]))
            throw DataError("spectrum contains non-finite values");
        if (intensity[i] < 0.0)
            throw DataError("negative counts at " + io::format_number(wavelength_nm[i]) + " nm");
        if (i > 0 && !(wavelength_nm[i] > wavelength_nm[i - 1]))
            throw DataError("wavelengths are not strictly increasing at " + io::format_number(wavelength_nm[i]) +
                            " nm");
    }
}

Spectrum spectrum_from_columns(std::vector<double> wavelength_nm, std::vector<double> intensity) {
    if (wavelength_nm.size() != intensity.size()) throw DataError("spectrum columns differ in length");
    std::vector<std::size_t> order(wavelength_nm.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return wavelength_nm[a] < wavelength_nm[b]; });
    Spectrum s;
    s.wavelength_nm.reserve(order.size());
    s.intensity.reserve(order.size());
    for (std::size_t i : order) {
        s.wavelength_nm.push_back(wavelength_nm[i]);
        s.intensity.push_back(intensity[i]);
    }
    s.validate();
    return s;
}

Spectrum load_spectrum(const std::filesystem::path& path) {
    auto cols = io::read_two_column_csv(path);
    return spectrum_from_columns(std::move(cols.x), std::move(cols.y));
}

namespace {

// expm1(-kappa v) / kappa and its kappa derivative, by series near kappa v = 0.
double shape(double kappa, double v) {
    const double t = kappa * v;
    if (std::abs(t) < 1e-6) return -v * (1.0 - t / 2.0 + t * t / 6.0);
    return std::expm1(-t) / kappa;
}

double shape_dkappa(double kappa, double v) {
    const double t = kappa * v;
    if (std::abs(t) < 1e-6) return v * v * (0.5 - t / 3.0);
    return (-t * std::exp(-t) - std::expm1(-t)) / (kappa * kappa);
}

}  // namespace

GaussianBackground GaussianBackground::from_gaussian(double amplitude, double center_nm, double sigma_nm,
                                                     double offset) {
    GaussianBackground g;
    g.center_nm = center_nm;
    g.kappa = 1.0 / (sigma_nm * sigma_nm);
    g.curvature = amplitude * g.kappa;
    g.peak = amplitude + offset;
    return g;
}

double GaussianBackground::operator()(double x) const {
    const double d = x - center_nm;
    return peak + curvature * shape(kappa, 0.5 * d * d);
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

// Gaussian + offset over the samples with mask[i] set.
GaussianBackground fit_gaussian(const Spectrum& s, const std::vector<char>& mask, const GaussianBackground& start,
                                const LsqOptions& lsq) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (mask[i]) idx.push_back(i);
    LsqProblem p;
    p.n_residuals = static_cast<Eigen::Index>(idx.size());
    // q = (peak, centre, curvature, sqrt(kappa)); squaring keeps kappa >= 0.
    p.residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double d = s.wavelength_nm[idx[k]] - q[1];
            r[static_cast<Eigen::Index>(k)] = q[0] + q[2] * shape(q[3] * q[3], 0.5 * d * d) - s.intensity[idx[k]];
        }
    };
    p.jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& j) {
        const double kappa = q[3] * q[3];
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto row = static_cast<Eigen::Index>(k);
            const double d = s.wavelength_nm[idx[k]] - q[1];
            const double v = 0.5 * d * d;
            j(row, 0) = 1.0;
            j(row, 1) = q[2] * std::exp(-kappa * v) * d;
            j(row, 2) = shape(kappa, v);
            j(row, 3) = q[2] * shape_dkappa(kappa, v) * 2.0 * q[3];
        }
    };
    Eigen::VectorXd q0(4);
    q0 << start.peak, start.center_nm, start.curvature, std::sqrt(start.kappa);
    const auto res = levenberg_marquardt(p, q0, lsq);
    GaussianBackground out;
    out.peak = res.params[0];
    out.center_nm = res.params[1];
    out.curvature = res.params[2];
    out.kappa = res.params[3] * res.params[3];
    out.cost_history = res.cost_history;
    return out;
}

}  // namespace

BackgroundResult subtract_background(const Spectrum& s, const LsqOptions& lsq) {
    s.validate();
    if (s.size() < 10) throw ParameterError("spectrum", "background fit needs at least 10 points");
    const auto [lo_it, hi_it] = std::minmax_element(s.intensity.begin(), s.intensity.end());
    BackgroundResult out;
    if (*hi_it == *lo_it) {
        out.background.peak = *lo_it;
        out.background.curvature = 0.0;
        out.background.center_nm = s.wavelength_nm[s.size() / 2];
        out.corrected = s;
        std::fill(out.corrected.intensity.begin(), out.corrected.intensity.end(), 0.0);
        return out;
    }

    // Rolling median over 1/20 of the span: fringes are narrow, so it follows
    // the background. It gives the start values and the first clipping mask.
    const std::size_t half = std::max<std::size_t>(2, s.size() / 40);
    std::vector<double> env(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t a = i > half ? i - half : 0;
        const std::size_t b = std::min(s.size(), i + half + 1);
        env[i] = median({s.intensity.begin() + static_cast<std::ptrdiff_t>(a),
                         s.intensity.begin() + static_cast<std::ptrdiff_t>(b)});
    }
    const auto [env_lo, env_hi] = std::minmax_element(env.begin(), env.end());
    const double floor = *env_lo;
    double amplitude = *env_hi - floor;
    double w = 0.0;
    double m1 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        w += env[i] - floor;
        m1 += (env[i] - floor) * s.wavelength_nm[i];
    }
    const double span = s.wavelength_nm.back() - s.wavelength_nm.front();
    const double center = w > 0.0 ? m1 / w : s.wavelength_nm[s.size() / 2];
    double m2 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        m2 += (env[i] - floor) * (s.wavelength_nm[i] - center) * (s.wavelength_nm[i] - center);
    const double sigma = w > 0.0 ? std::max(std::sqrt(m2 / w), 1e-2 * span) : span;
    if (!(amplitude > 0.0)) amplitude = 1e-3 * (*hi_it - *lo_it);
    auto g = GaussianBackground::from_gaussian(amplitude, center, sigma, floor);

    std::vector<char> mask(s.size(), 1);
    auto clip = [&](const std::vector<double>& model) {
        std::vector<double> resid(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) resid[i] = s.intensity[i] - model[i];
        const double med = median(resid);
        std::vector<double> dev(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) dev[i] = std::abs(resid[i] - med);
        const double sigma = 1.4826 * median(dev);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            mask[i] = resid[i] - med <= 2.0 * sigma;
            kept += mask[i];
        }
        return kept;
    };
    clip(env);
    g = fit_gaussian(s, mask, g, lsq);
    std::vector<double> model(s.size());
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < s.size(); ++i) model[i] = g(s.wavelength_nm[i]);
        if (clip(model) < 10) break;
        g = fit_gaussian(s, mask, g, lsq);
    }

    out.background = g;
    out.corrected = s;
    for (std::size_t i = 0; i < s.size(); ++i)
        out.corrected.intensity[i] = std::max(0.0, s.intensity[i] - g(s.wavelength_nm[i]));
    return out;
}

std::vector<double> find_peaks(const Spectrum& s, double min_prominence_fraction, double min_separation_nm) {
    s.validate();
    if (!(min_prominence_fraction >= 0.0)) throw ParameterError("min_prominence_fraction", "must be non-negative");
    if (!(min_separation_nm >= 0.0)) throw ParameterError("min_separation_nm", "must be non-negative");
    const auto& y = s.intensity;
    const std::size_t n = y.size();
    if (n < 3) return {};
    const double global_max = *std::max_element(y.begin(), y.end());
    if (!(global_max > 0.0)) return {};
    const double threshold = min_prominence_fraction * global_max;

    struct Cand {
        std::size_t i;
        double prominence;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        // Plateaus count once, at their left edge.
        double left_min = y[i];
        for (std::size_t j = i; j-- > 0;) {
            if (y[j] > y[i]) break;
            left_min = std::min(left_min, y[j]);
        }
        double right_min = y[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (y[j] > y[i]) break;
            right_min = std::min(right_min, y[j]);
        }
        const double prominence = y[i] - std::max(left_min, right_min);
        if (prominence > 0.0 && prominence >= threshold) cands.push_back({i, prominence});
    }

    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y[cands[a].i] > y[cands[b].i];
    });
    std::vector<double> kept;
    for (std::size_t o : order) {
        const double x = s.wavelength_nm[cands[o].i];
        bool clash = false;
        for (double k : kept) clash = clash || std::abs(k - x) < min_separation_nm;
        if (!clash) kept.push_back(x);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

namespace {

// Full width at half maximum around sample i, walking out until the signal
// drops below half or turns up again.
double estimate_fwhm(const Spectrum& s, std::size_t i) {
    const auto& x = s.wavelength_nm;
    const auto& y = s.intensity;
    const double half = 0.5 * y[i];
    std::size_t l = i;
    while (l > 0 && y[l - 1] > half && y[l - 1] <= y[l]) --l;
    std::size_t r = i;
    while (r + 1 < y.size() && y[r + 1] > half && y[r + 1] <= y[r]) ++r;
    auto edge = [&](std::size_t inside, std::size_t outside) {
        const double dy = y[inside] - y[outside];
        const double t = dy > 0.0 ? (y[inside] - half) / dy : 0.5;
        return x[inside] + std::clamp(t, 0.0, 1.0) * (x[outside] - x[inside]);
    };
    const double xl = l > 0 ? edge(l, l - 1) : x[0];
    const double xr = r + 1 < y.size() ? edge(r, r + 1) : x.back();
    const double step = x.size() > 1 ? (x.back() - x.front()) / static_cast<double>(x.size() - 1) : 1.0;
    return std::max(xr - xl, step);
}

std::size_t nearest_index(const std::vector<double>& x, double v) {
    const auto it = std::lower_bound(x.begin(), x.end(), v);
    if (it == x.begin()) return 0;
    if (it == x.end()) return x.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    return (v - x[hi - 1] <= x[hi] - v) ? hi - 1 : hi;
}

}  // namespace

LorentzianFit fit_lorentzians(const Spectrum& s, std::span<const double> candidates, const LsqOptions& lsq) {
    s.validate();
    if (candidates.empty()) throw ParameterError("candidates", "need at least one peak candidate");
    const std::size_t np = candidates.size();
    const auto& x = s.wavelength_nm;
    const auto& y = s.intensity;

    // Initial guesses; windows of +-2 FWHM must hold at least 4 samples.
    std::vector<double> c0(np), g0(np), a0(np);
    for (std::size_t p = 0; p < np; ++p) {
        if (candidates[p] < x.front() || candidates[p] > x.back())
            throw ParameterError("candidates", "candidate " + io::format_number(candidates[p]) + " nm outside the spectrum");
        const std::size_t i = nearest_index(x, candidates[p]);
        c0[p] = x[i];
        g0[p] = estimate_fwhm(s, i);
        a0[p] = std::max(y[i], 1e-12);
        const auto lo = std::lower_bound(x.begin(), x.end(), c0[p] - 2.0 * g0[p]);
        const auto hi = std::upper_bound(x.begin(), x.end(), c0[p] + 2.0 * g0[p]);
        if (hi - lo < 4)
            throw ParameterError("candidates", "fewer than 4 samples within 2 FWHM of " + io::format_number(c0[p]) + " nm");
    }

    // Parameters: [c_0, g_0, A_0, c_1, ..., offset]
    const Eigen::Index n_par = static_cast<Eigen::Index>(3 * np + 1);
    const Eigen::Index m = static_cast<Eigen::Index>(x.size());
    if (m < n_par) throw ParameterError("spectrum", "fewer samples than fit parameters");
    Eigen::VectorXd p0(n_par);
    for (std::size_t p = 0; p < np; ++p) {
        const auto b = static_cast<Eigen::Index>(3 * p);
        p0[b] = c0[p];
        p0[b + 1] = g0[p];
        p0[b + 2] = a0[p];
    }
    p0[n_par - 1] = 0.0;

    std::vector<double> centers(np), hws(np), amps(np), model(x.size());
    auto unpack = [&](const Eigen::VectorXd& q) {
        for (std::size_t p = 0; p < np; ++p) {
            const auto b = static_cast<Eigen::Index>(3 * p);
            centers[p] = q[b];
            hws[p] = 0.5 * q[b + 1];
            amps[p] = q[b + 2];
        }
    };
    LsqProblem prob;
    prob.n_residuals = m;
    prob.residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        unpack(q);
        kernels::lorentzian_sum(x, centers, hws, amps, q[n_par - 1], model);
        for (Eigen::Index i = 0; i < m; ++i) r[i] = model[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)];
    };
    prob.jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& j) {
        j.setZero();
        for (std::size_t p = 0; p < np; ++p) {
            const auto b = static_cast<Eigen::Index>(3 * p);
            const double c = q[b];
            const double h = 0.5 * q[b + 1];
            const double a = q[b + 2];
            const double h2 = h * h;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double d = x[static_cast<std::size_t>(i)] - c;
                const double den = d * d + h2;
                const double shape = h2 / den;
                j(i, b) = a * shape * 2.0 * d / den;
                j(i, b + 1) = a * h * d * d / (den * den);
                j(i, b + 2) = shape;
            }
        }
        j.col(n_par - 1).setOnes();
    };
    const auto res = levenberg_marquardt(prob, p0, lsq);

    LorentzianFit out;
    out.cost = res.cost;
    out.iterations = res.iterations;
    out.offset = res.params[n_par - 1];
    out.offset_sigma = res.sigma[n_par - 1];
    for (std::size_t p = 0; p < np; ++p) {
        const auto b = static_cast<Eigen::Index>(3 * p);
        LorentzianPeak pk;
        pk.center_nm = res.params[b];
        pk.fwhm_nm = std::abs(res.params[b + 1]);
        pk.amplitude = res.params[b + 2];
        pk.center_sigma_nm = res.sigma[b];
        pk.fwhm_sigma_nm = res.sigma[b + 1];
        pk.amplitude_sigma = res.sigma[b + 2];
        if (!(pk.amplitude > 0.0) || !(pk.fwhm_nm > 0.0) || pk.center_nm < x.front() || pk.center_nm > x.back()) {
            std::vector<double> best(res.params.data(), res.params.data() + res.params.size());
            throw FitError("peak seeded at " + io::format_number(c0[p]) + " nm collapsed during the fit", best,
                           res.cost_history);
        }
        out.peaks.push_back(pk);
    }
    std::sort(out.peaks.begin(), out.peaks.end(),
              [](const LorentzianPeak& a, const LorentzianPeak& b) { return a.center_nm < b.center_nm; });
    return out;
}

std::vector<NgPoint> fringe_group_index(std::span<const LorentzianPeak> peaks, double waveguide_length_nm) {
    if (peaks.size() < 2) throw ParameterError("peaks", "need at least two fringes");
    if (!(waveguide_length_nm > 0.0)) throw ParameterError("waveguide_length_nm", "must be positive");
    std::vector<double> c;
    for (const auto& p : peaks) c.push_back(p.center_nm);
    std::sort(c.begin(), c.end());
    std::vector<NgPoint> out;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        const double dl = c[i + 1] - c[i];
        if (!(dl > 0.0)) throw DataError("coincident fringe centres at " + io::format_number(c[i]) + " nm");
        out.push_back({0.5 * (c[i] + c[i + 1]), c[i] * c[i + 1] / (2.0 * waveguide_length_nm * dl)});
    }
    return out;
}

std::vector<QPoint> q_factors(std::span<const LorentzianPeak> peaks) {
    std::vector<QPoint> out;
    for (const auto& p : peaks) {
        if (!(p.fwhm_nm > 0.0)) throw DataError("peak at " + io::format_number(p.center_nm) + " nm has no width");
        out.push_back({p.center_nm, p.center_nm / p.fwhm_nm});
    }
    return out;
}

FringeAnalysis analyze_fringes(const Spectrum& s, const FringeOptions& options) {
    s.validate();
    FringeAnalysis out;
    out.waveguide_length_nm = options.waveguide_length_nm;
    Spectrum work = s;
    if (options.subtract_background) {
        auto bg = subtract_background(s, options.lsq);
        work = std::move(bg.corrected);
        out.background = std::move(bg.background);
    }
    const auto cands = find_peaks(work, options.min_prominence_fraction, options.min_separation_nm);
    if (cands.size() < 2) throw DataError("fewer than two fringes found");
    const auto fit = fit_lorentzians(work, cands, options.lsq);
    out.peaks = fit.peaks;
    out.fit_offset = fit.offset;
    out.fit_iterations = fit.iterations;
    out.ng_points = fringe_group_index(out.peaks, options.waveguide_length_nm);
    out.q_points = q_factors(out.peaks);
    return out;
}

}  // namespace slowlight
