#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace slowlight {

// Residual vector r(p) and its Jacobian dr/dp. Cost is |r|^2.
struct LsqProblem {
    Eigen::Index n_residuals = 0;
    std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)> residual;
    std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& jac)> jacobian;
};

struct LsqOptions {
    double ftol = 1e-10;  // relative decrease of the cost
    double xtol = 1e-12;
    int max_iterations = 200;
};

struct LsqResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1 with s^2 = cost / (m - n)
    Eigen::VectorXd sigma;       // sqrt of the covariance diagonal
    double cost = 0.0;
    int iterations = 0;
    std::vector<double> cost_history;  // after every step, starting with the initial cost
};

// Damped least squares (MINPACK-style trust-region Levenberg-Marquardt).
// Throws FitError with the best parameters seen when the iteration cap is hit
// or the cost becomes non-finite.
LsqResult levenberg_marquardt(const LsqProblem& problem, const Eigen::VectorXd& p0, const LsqOptions& options = {});

}  // namespace slowlight
