#pragma once

#include <functional>

#include <Eigen/Dense>

namespace jsi {

struct CurveFit {
    Eigen::VectorXd params;
    double rms_residual = 0;
    bool converged = false;
    int evaluations = 0;
};

using Model = std::function<double(const Eigen::VectorXd& params, double x)>;

/// Least-squares fit of model(params, x) to (x, y) by Levenberg-Marquardt
/// with a central-difference Jacobian.
CurveFit fit_curve(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   Eigen::VectorXd initial);

/// Gaussian a * exp(-(x - mu)^2 / (2 s^2)) with params (a, mu, s).
double gaussian(const Eigen::VectorXd& p, double x);

/// Minimizes f on [lo, hi] by golden-section search.
double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                      int max_iter = 200);

}  // namespace jsi
