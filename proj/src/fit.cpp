#include "jsi/fit.hpp"

#include <cmath>

#include <unsupported/Eigen/LevenbergMarquardt>

namespace jsi {

namespace {

struct Residuals : Eigen::DenseFunctor<double> {
    const Model& model;
    const Eigen::VectorXd& x;
    const Eigen::VectorXd& y;
    int calls = 0;

    Residuals(const Model& m, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, int n_params)
        : DenseFunctor(n_params, static_cast<int>(xs.size())), model(m), x(xs), y(ys) {}

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        ++calls;
        for (Eigen::Index i = 0; i < x.size(); ++i) r[i] = model(p, x[i]) - y[i];
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) {
        Eigen::VectorXd q = p;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            double h = 1e-6 * std::max(std::abs(p[k]), 1e-8);
            q[k] = p[k] + h;
            for (Eigen::Index i = 0; i < x.size(); ++i) j(i, k) = model(q, x[i]);
            q[k] = p[k] - h;
            for (Eigen::Index i = 0; i < x.size(); ++i) j(i, k) = (j(i, k) - model(q, x[i])) / (2 * h);
            q[k] = p[k];
        }
        return 0;
    }
};

}  // namespace

CurveFit fit_curve(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   Eigen::VectorXd initial) {
    Residuals f(model, x, y, static_cast<int>(initial.size()));
    Eigen::LevenbergMarquardt<Residuals> lm(f);
    lm.setMaxfev(2000);
    lm.setXtol(1e-12);
    lm.setFtol(1e-14);
    auto status = lm.minimize(initial);
    CurveFit out;
    out.params = initial;
    Eigen::VectorXd r(x.size());
    f(initial, r);
    out.rms_residual = x.size() ? std::sqrt(r.squaredNorm() / static_cast<double>(x.size())) : 0.0;
    out.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
    out.converged = out.converged && initial.allFinite();
    out.evaluations = f.calls;
    return out;
}

double gaussian(const Eigen::VectorXd& p, double x) {
    double z = (x - p[1]) / p[2];
    return p[0] * std::exp(-0.5 * z * z);
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                      int max_iter) {
    const double g = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

}  // namespace jsi
