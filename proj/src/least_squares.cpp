#include "slowlight/least_squares.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "slowlight/errors.hpp"

namespace slowlight {

namespace {

struct Functor : Eigen::DenseFunctor<double> {
    Functor(const LsqProblem& p, int n) : Eigen::DenseFunctor<double>(n, static_cast<int>(p.n_residuals)), problem(p) {}

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
        problem.residual(x, fvec);
        return 0;
    }
    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
        problem.jacobian(x, fjac);
        return 0;
    }

    const LsqProblem& problem;
};

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

LsqResult levenberg_marquardt(const LsqProblem& problem, const Eigen::VectorXd& p0, const LsqOptions& options) {
    const Eigen::Index n = p0.size();
    const Eigen::Index m = problem.n_residuals;
    if (n == 0) throw ParameterError("params", "no free parameters");
    if (m < n) throw ParameterError("n_residuals", "fewer residuals than parameters");
    if (!problem.residual || !problem.jacobian) throw ParameterError("problem", "residual and jacobian are required");

    Functor f(problem, static_cast<int>(n));
    Eigen::LevenbergMarquardt<Functor> lm(f);
    lm.setFtol(options.ftol);
    lm.setXtol(options.xtol);
    lm.setMaxfev(10 * options.max_iterations * static_cast<int>(n + 1));

    Eigen::VectorXd x = p0;
    Eigen::VectorXd r(m);
    problem.residual(x, r);
    const double initial = r.squaredNorm();
    if (!std::isfinite(initial)) throw FitError("initial cost is not finite", to_std(p0), {initial});

    LsqResult out;
    out.cost_history.push_back(initial);
    Eigen::VectorXd best = x;
    double best_cost = initial;

    using namespace Eigen::LevenbergMarquardtSpace;
    Status status = lm.minimizeInit(x);
    if (status == ImproperInputParameters) throw ParameterError("options", "improper least-squares settings");
    int it = 0;
    while (true) {
        status = lm.minimizeOneStep(x);
        ++it;
        const double cost = lm.fnorm() * lm.fnorm();
        out.cost_history.push_back(cost);
        if (!std::isfinite(cost)) throw FitError("cost became non-finite", to_std(best), out.cost_history);
        if (cost <= best_cost) {
            best_cost = cost;
            best = x;
        }
        if (status != Running) break;
        if (it >= options.max_iterations)
            throw FitError("no convergence after " + std::to_string(it) + " iterations", to_std(best), out.cost_history);
    }
    if (status == TooManyFunctionEvaluation || status == UserAsked)
        throw FitError("least squares stopped without converging", to_std(best), out.cost_history);

    out.params = best;
    out.iterations = it;
    problem.residual(best, r);
    out.cost = r.squaredNorm();
    Eigen::MatrixXd jac(m, n);
    problem.jacobian(best, jac);
    const double s2 = m > n ? out.cost / static_cast<double>(m - n) : 0.0;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
    out.covariance = s2 * cod.pseudoInverse();
    out.sigma = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return out;
}

}  // namespace slowlight
