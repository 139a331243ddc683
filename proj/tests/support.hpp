#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "slowlight/dispersion.hpp"

// Tolerance checks against the target value itself. doctest::Approx scales its
// epsilon by 1 + max(|a|, |b|), which is looser than a stated tolerance.
#define CHECK_REL(value, target, rel)                                                                  \
    do {                                                                                               \
        const double v_ = (value);                                                                     \
        const double t_ = (target);                                                                    \
        const double r_ = (rel);                                                                       \
        CHECK_MESSAGE(std::abs(v_ - t_) <= r_ * std::abs(t_), #value " = ", v_, ", target ", t_, " (rel ", r_, ")"); \
    } while (false)

#define CHECK_ABS(value, target, tol)                                                                  \
    do {                                                                                               \
        const double v_ = (value);                                                                     \
        const double t_ = (target);                                                                    \
        const double a_ = (tol);                                                                       \
        CHECK_MESSAGE(std::abs(v_ - t_) <= a_, #value " = ", v_, ", target ", t_, " (abs ", a_, ")");  \
    } while (false)

namespace slowlight::test {

inline WaveguideGeometry paper_geometry() { return {}; }

// The default 64-point analysis of the paper's device, computed once per binary.
inline const WaveguideAnalysis& paper_analysis() {
    static const WaveguideAnalysis an = [] {
        const auto path = uniform_k_path(64);
        return analyze_waveguide(paper_geometry(), SolverParams{}, path);
    }();
    return an;
}

// Fresh directory under the system temp dir, removed with its contents.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("slowlight-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(SLOWLIGHT_FIXTURES) / name; }

inline WaveguideGeometry uniform_geometry() {
    WaveguideGeometry g;
    g.hole_radius_nm = 0.0;
    return g;
}

}  // namespace slowlight::test
