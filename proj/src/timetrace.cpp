#include "slowlight/timetrace.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "slowlight/errors.hpp"
#include "slowlight/io.hpp"
#include "slowlight/least_squares.hpp"

namespace slowlight {

namespace {

void validate_columns(const std::vector<double>& t, const std::vector<double>& c, const char* what) {
    if (t.size() != c.size()) throw DataError(std::string(what) + " columns differ in length");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(c[i])) throw DataError(std::string(what) + " has non-finite values");
        if (c[i] < 0.0) throw DataError(std::string(what) + " has negative counts at " + io::format_number(t[i]));
        if (i > 0 && !(t[i] > t[i - 1]))
            throw DataError(std::string(what) + " time axis is not strictly increasing at " + io::format_number(t[i]));
    }
}

struct DecayCore {
    Eigen::VectorXd params;  // tau, A at t0, B
    Eigen::MatrixXd cov;
    double cost = 0.0;
    int iterations = 0;
};

// Model A0 exp(-(t - t0)/tau) + B; anchoring at t0 keeps A0 and tau decoupled.
DecayCore fit_core(const std::vector<double>& t, const std::vector<double>& y, std::size_t lo, std::size_t hi,
                   const Eigen::VectorXd& start, const LsqOptions& lsq) {
    const std::size_t n = hi - lo;
    const double t0 = t[lo];
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / std::sqrt(std::max(y[lo + k], 1.0));
    LsqProblem p;
    p.n_residuals = static_cast<Eigen::Index>(n);
    p.residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        for (std::size_t k = 0; k < n; ++k)
            r[static_cast<Eigen::Index>(k)] = w[k] * (q[1] * std::exp(-(t[lo + k] - t0) / q[0]) + q[2] - y[lo + k]);
    };
    p.jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& j) {
        for (std::size_t k = 0; k < n; ++k) {
            const auto row = static_cast<Eigen::Index>(k);
            const double dt = t[lo + k] - t0;
            const double e = std::exp(-dt / q[0]);
            j(row, 0) = w[k] * q[1] * e * dt / (q[0] * q[0]);
            j(row, 1) = w[k] * e;
            j(row, 2) = w[k];
        }
    };
    const auto res = levenberg_marquardt(p, start, lsq);
    if (!(res.params[0] > 0.0) || !std::isfinite(res.params[0]))
        throw FitError("decay fit produced a non-positive lifetime",
                       {res.params.data(), res.params.data() + res.params.size()}, res.cost_history);
    return {res.params, res.covariance, res.cost, res.iterations};
}

}  // namespace

void DecayTrace::validate() const { validate_columns(time_ns, counts, "decay trace"); }

DecayTrace load_decay_trace(const std::filesystem::path& path) {
    auto cols = io::read_two_column_csv(path);
    DecayTrace t{std::move(cols.x), std::move(cols.y)};
    t.validate();
    return t;
}

DecayFit fit_decay(const DecayTrace& trace, const DecayWindow& window, const std::optional<BootstrapOptions>& bootstrap,
                  const LsqOptions& lsq) {
    trace.validate();
    const auto& t = trace.time_ns;
    const auto& y = trace.counts;
    if (trace.size() < 10) throw ParameterError("trace", "need at least 10 bins");
    const std::size_t imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    if (*mn == *mx) throw DataError("constant trace: no decay to fit");

    std::size_t lo = std::min(imax + 1, trace.size() - 1);
    if (window.t_start_ns) {
        if (*window.t_start_ns < t[imax])
            throw ParameterError("t_start_ns", "window starts before the trace maximum at " + io::format_number(t[imax]) + " ns");
        lo = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), *window.t_start_ns) - t.begin());
    }
    std::size_t hi = trace.size();
    if (window.t_end_ns) hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), *window.t_end_ns) - t.begin());
    if (hi <= lo || hi - lo < 10) throw ParameterError("window", "fewer than 10 bins in the fit window");

    // Start: offset from the window tail, tau from the 1/e crossing.
    const std::size_t n = hi - lo;
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double b0 = 0.0;
    for (std::size_t k = hi - tail; k < hi; ++k) b0 += y[k];
    b0 /= static_cast<double>(tail);
    const double a0 = std::max(y[lo] - b0, 1e-12);
    double tau0 = 0.25 * (t[hi - 1] - t[lo]);
    for (std::size_t k = lo; k < hi; ++k) {
        if (y[k] - b0 <= a0 / std::exp(1.0)) {
            tau0 = std::max(t[k] - t[lo], t[lo + 1] - t[lo]);
            break;
        }
    }
    Eigen::VectorXd start(3);
    start << tau0, a0, b0;
    const auto core = fit_core(t, y, lo, hi, start, lsq);

    DecayFit fit;
    fit.tau_ns = core.params[0];
    fit.tau_sigma_ns = std::sqrt(std::max(core.cov(0, 0), 0.0));
    // A at t = 0 from A0 at t0, with the tau correlation carried through.
    const double t0 = t[lo];
    const double scale = std::exp(t0 / fit.tau_ns);
    fit.amplitude = core.params[1] * scale;
    const double d_tau = -core.params[1] * scale * t0 / (fit.tau_ns * fit.tau_ns);
    const double var_a = scale * scale * core.cov(1, 1) + d_tau * d_tau * core.cov(0, 0) + 2.0 * scale * d_tau * core.cov(0, 1);
    fit.amplitude_sigma = std::sqrt(std::max(var_a, 0.0));
    fit.offset = core.params[2];
    fit.offset_sigma = std::sqrt(std::max(core.cov(2, 2), 0.0));
    fit.t_start_ns = t[lo];
    fit.t_end_ns = t[hi - 1];
    fit.bins = n;
    fit.reduced_chi2 = core.cost / static_cast<double>(n - 3);
    fit.iterations = core.iterations;

    if (bootstrap) {
        if (bootstrap->resamples < 2) throw ParameterError("bootstrap.resamples", "need at least 2 resamples");
        std::mt19937_64 rng(bootstrap->seed);
        std::vector<double> taus;
        std::vector<double> yb = y;
        for (int b = 0; b < bootstrap->resamples; ++b) {
            for (std::size_t k = lo; k < hi; ++k) {
                std::poisson_distribution<long long> pois(std::max(y[k], 1e-9));
                yb[k] = static_cast<double>(pois(rng));
            }
            try {
                taus.push_back(fit_core(t, yb, lo, hi, core.params, lsq).params[0]);
            } catch (const FitError&) {
                // A failed resample is dropped; the spread is taken over the rest.
            }
        }
        if (taus.size() >= 2) {
            double mean = 0.0;
            for (double v : taus) mean += v;
            mean /= static_cast<double>(taus.size());
            double var = 0.0;
            for (double v : taus) var += (v - mean) * (v - mean);
            fit.tau_bootstrap_sigma_ns = std::sqrt(var / static_cast<double>(taus.size() - 1));
        }
    }
    return fit;
}

void G2Histogram::validate() const {
    if (!(rep_period_ns > 0.0)) throw ParameterError("rep_period_ns", "must be positive");
    if (delay_ns.size() < 2) throw DataError("g2 histogram needs at least two bins");
    validate_columns(delay_ns, counts, "g2 histogram");
    const double w = bin_width();
    for (std::size_t i = 1; i < delay_ns.size(); ++i)
        if (std::abs((delay_ns[i] - delay_ns[i - 1]) - w) > 1e-6 * w) throw DataError("g2 bins are not uniform");
}

G2Histogram load_g2_histogram(const std::filesystem::path& path, double rep_period_ns) {
    auto cols = io::read_two_column_csv(path);
    G2Histogram h{std::move(cols.x), std::move(cols.y), rep_period_ns};
    h.validate();
    return h;
}

std::vector<G2PeakArea> g2_peak_areas(const G2Histogram& hist, double half_window_ns) {
    hist.validate();
    const double period = hist.rep_period_ns;
    if (!(half_window_ns > 0.0) || !(half_window_ns < period / 2.0))
        throw ParameterError("half_window_ns", "must lie in (0, rep_period / 2)");
    const double w = hist.bin_width();
    const double lo = hist.delay_ns.front() - w / 2.0;
    const double hi = hist.delay_ns.back() + w / 2.0;
    if (hi - lo < period) throw DataError("g2 histogram spans less than one repetition period");

    std::vector<G2PeakArea> out;
    const int m_lo = static_cast<int>(std::ceil((lo + half_window_ns) / period - 1e-9));
    const int m_hi = static_cast<int>(std::floor((hi - half_window_ns) / period + 1e-9));
    for (int m = m_lo; m <= m_hi; ++m) {
        const double c = m * period;
        double area = 0.0;
        // Bins whose centre lies in [c - hw, c + hw]; the tolerance keeps
        // exactly-on-edge centres deterministic.
        const double eps = 1e-9 * w;
        for (std::size_t i = 0; i < hist.delay_ns.size(); ++i)
            if (hist.delay_ns[i] >= c - half_window_ns - eps && hist.delay_ns[i] <= c + half_window_ns + eps)
                area += hist.counts[i];
        out.push_back({m, c, area});
    }
    return out;
}

G2Result g2_zero(std::span<const G2PeakArea> areas) {
    const G2PeakArea* central = nullptr;
    int left = 0;
    int right = 0;
    for (const auto& a : areas) {
        if (a.order == 0) central = &a;
        left += a.order < 0;
        right += a.order > 0;
    }
    if (!central) throw ParameterError("areas", "no peak at zero delay");
    if (left < 3 || right < 3) throw ParameterError("areas", "need at least 3 side peaks on each side");

    double near = 0.0;
    int n_near = 0;
    double far = 0.0;
    int n_far = 0;
    for (const auto& a : areas) {
        if (a.order == 0) continue;
        if (std::abs(a.order) == 1) {
            near += a.area;
            ++n_near;
        } else {
            far += a.area;
            ++n_far;
        }
    }
    const double near_mean = near / n_near;
    const double far_mean = far / n_far;

    G2Result r;
    r.central_area = central->area;
    r.bunching_excluded = far_mean > 0.0 && std::abs(near_mean - far_mean) > 0.10 * far_mean;
    if (r.bunching_excluded) {
        r.side_mean = far_mean;
        r.side_peaks_used = n_far;
    } else {
        r.side_mean = (near + far) / (n_near + n_far);
        r.side_peaks_used = n_near + n_far;
    }
    if (!(r.side_mean > 0.0)) throw NumericalError("side-peak mean is zero");
    r.g2_zero = r.central_area / r.side_mean;
    // Poisson: var(C) = C, var(mean) = mean / N.
    const double rel2 = (r.central_area > 0.0 ? 1.0 / r.central_area : 0.0) + 1.0 / (r.side_mean * r.side_peaks_used);
    r.g2_sigma = r.g2_zero * std::sqrt(rel2);
    return r;
}

}  // namespace slowlight
