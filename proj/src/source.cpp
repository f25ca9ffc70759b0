#include "jsi/source.hpp"

#include <cmath>
#include <complex>
#include <functional>

#include "jsi/error.hpp"

namespace jsi {

namespace {

using AmpFn = std::function<std::complex<double>(double, double)>;

Eigen::MatrixXcd evaluate(const AmpFn& f, const Eigen::VectorXd& s, const Eigen::VectorXd& i) {
    Eigen::MatrixXcd m(s.size(), i.size());
    for (Eigen::Index a = 0; a < s.size(); ++a)
        for (Eigen::Index b = 0; b < i.size(); ++b) m(a, b) = f(s[a], i[b]);
    return m;
}

// Fraction of |f|^2 falling outside the grid, estimated on a lattice three
// times wider than the grid (subsampled for large grids).
double outside_fraction(const AmpFn& f, const FrequencyGrid& g) {
    auto extend = [](const Eigen::VectorXd& ax, Eigen::Index stride, double& lo_in, double& hi_in) {
        double h = (ax[1] - ax[0]) * static_cast<double>(stride);
        double lo = ax[0], hi = ax[ax.size() - 1];
        double span = hi - lo;
        lo_in = lo - 0.5 * h;
        hi_in = hi + 0.5 * h;
        auto n = static_cast<Eigen::Index>(std::ceil(3 * span / h)) + 1;
        Eigen::VectorXd e(n);
        for (Eigen::Index k = 0; k < n; ++k) e[k] = lo - span + h * static_cast<double>(k);
        return e;
    };
    Eigen::Index ss = g.ns() > 128 ? 2 : 1, si = g.ni() > 128 ? 2 : 1;
    double slo, shi, ilo, ihi;
    Eigen::VectorXd es = extend(g.signal(), ss, slo, shi);
    Eigen::VectorXd ei = extend(g.idler(), si, ilo, ihi);
    double inside = 0, outside = 0;
    for (Eigen::Index a = 0; a < es.size(); ++a) {
        bool sin = es[a] >= slo && es[a] <= shi;
        for (Eigen::Index b = 0; b < ei.size(); ++b) {
            double p = std::norm(f(es[a], ei[b]));
            if (sin && ei[b] >= ilo && ei[b] <= ihi)
                inside += p;
            else
                outside += p;
        }
    }
    double total = inside + outside;
    return total > 0 ? outside / total : 0.0;
}

JointAmplitude finish(const AmpFn& f, const FrequencyGrid& grid, const BuildOptions& opts, bool normalizable) {
    if (opts.check_coverage && normalizable) {
        double out = outside_fraction(f, grid);
        if (out > opts.coverage_tol)
            throw Error(Errc::coverage, "grid too small: fraction " + std::to_string(out) +
                                            " of the intensity lies outside the grid");
    }
    return JointAmplitude(grid, evaluate(f, grid.signal(), grid.idler()));
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6 : std::sin(x) / x; }

}  // namespace

double pump_sum_frequency(const PumpSpec& pump) {
    double wp = omega_from_nm(pump.center_wavelength_nm);
    return pump.process == Process::spdc ? wp : 2 * wp;
}

double effective_pump_sigma(const PumpSpec& pump) {
    return pump.process == Process::spdc ? pump.bandwidth_sigma : std::sqrt(2.0) * pump.bandwidth_sigma;
}

JointAmplitude build_amplitude(const PumpSpec& pump, const PhasematchSpec& pm,
                               const std::optional<FilterSpec>& filter, const FrequencyGrid& grid,
                               const BuildOptions& opts) {
    if (!(pump.center_wavelength_nm > 0)) throw Error(Errc::domain, "pump wavelength must be positive");
    if (!(pump.bandwidth_sigma > 0)) throw Error(Errc::domain, "pump bandwidth must be positive");
    if (pm.model != PhasematchModel::none && !(pm.width_sigma > 0))
        throw Error(Errc::domain, "phasematching width must be positive");
    if (filter && (!(filter->signal_sigma > 0) || !(filter->idler_sigma > 0)))
        throw Error(Errc::domain, "filter widths must be positive");

    const double sigma = effective_pump_sigma(pump);
    const double offset = grid.center_signal() + grid.center_idler() - pump_sum_frequency(pump);
    // The self-convolved degenerate pump carries its spectral phase at the
    // stationary point omega_p = Omega / 2.
    const bool fwm = pump.process == Process::sfwm_degenerate_pump;
    const double phi2 = pump.gdd_fs2 * 1e-30 * (fwm ? 0.5 : 1.0);
    const double phi3 = pump.tod_fs3 * 1e-45 * (fwm ? 0.25 : 1.0);
    const double st = std::sin(pm.tilt_angle), ct = std::cos(pm.tilt_angle);
    const double rect_s = filter ? std::sqrt(3.0) * filter->signal_sigma : 0;
    const double rect_i = filter ? std::sqrt(3.0) * filter->idler_sigma : 0;

    AmpFn f = [=](double ns, double ni) -> std::complex<double> {
        double d = ns + ni + offset;
        double mag = std::exp(-d * d / (2 * sigma * sigma));
        if (pm.model != PhasematchModel::none) {
            double u = (-ns * st + ni * ct) / pm.width_sigma;
            mag *= pm.model == PhasematchModel::gaussian ? std::exp(-0.5 * u * u) : sinc(u);
        }
        if (filter) {
            if (filter->shape == FilterShape::gaussian) {
                double a = ns / filter->signal_sigma, b = ni / filter->idler_sigma;
                mag *= std::exp(-0.5 * (a * a + b * b));
            } else if (std::abs(ns) > rect_s || std::abs(ni) > rect_i) {
                return 0.0;
            }
        }
        double phase = phi2 * d * d / 2 + phi3 * d * d * d / 6;
        return std::polar(mag, phase);
    };
    bool normalizable = pm.model != PhasematchModel::none || filter.has_value();
    return finish(f, grid, opts, normalizable);
}

JointAmplitude diagonal_gaussian_amplitude(double sigma_d, double sigma_a, const FrequencyGrid& grid,
                                           const BuildOptions& opts) {
    if (!(sigma_d > 0) || !(sigma_a > 0)) throw Error(Errc::domain, "ellipse widths must be positive");
    AmpFn f = [=](double ns, double ni) -> std::complex<double> {
        double s = ns + ni, d = ns - ni;
        return std::exp(-s * s / (4 * sigma_a * sigma_a) - d * d / (4 * sigma_d * sigma_d));
    };
    return finish(f, grid, opts, true);
}

JointAmplitude correlated_gaussian_amplitude(double sigma_s, double sigma_i, double rho,
                                             const FrequencyGrid& grid, const BuildOptions& opts) {
    if (!(sigma_s > 0) || !(sigma_i > 0)) throw Error(Errc::domain, "widths must be positive");
    if (!(std::abs(rho) < 1)) throw Error(Errc::domain, "correlation must lie in (-1, 1)");
    const double q = 1 - rho * rho;
    AmpFn f = [=](double ns, double ni) -> std::complex<double> {
        double a = ns / sigma_s, b = ni / sigma_i;
        return std::exp(-(a * a - 2 * rho * a * b + b * b) / (4 * q));
    };
    return finish(f, grid, opts, true);
}

std::optional<std::pair<double, double>> approximate_marginal_sigmas(
    const PumpSpec& pump, const PhasematchSpec& pm, const std::optional<FilterSpec>& filter) {
    Eigen::Matrix2d a = Eigen::Matrix2d::Constant(1.0 / std::pow(effective_pump_sigma(pump), 2));
    if (pm.model != PhasematchModel::none) {
        Eigen::Vector2d n(-std::sin(pm.tilt_angle), std::cos(pm.tilt_angle));
        double k = pm.model == PhasematchModel::gaussian ? 1.0 : 1.0 / 3.0;
        a += k / (pm.width_sigma * pm.width_sigma) * n * n.transpose();
    }
    if (filter) {
        double k = filter->shape == FilterShape::gaussian ? 1.0 : 0.5;
        a(0, 0) += k / (filter->signal_sigma * filter->signal_sigma);
        a(1, 1) += k / (filter->idler_sigma * filter->idler_sigma);
    }
    double det = a.determinant();
    if (!(det > 1e-12 * a.squaredNorm())) return std::nullopt;
    Eigen::Matrix2d cov = (2 * a).inverse();
    return std::make_pair(std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1)));
}

FrequencyGrid auto_grid(const PumpSpec& pump, const PhasematchSpec& pm,
                        const std::optional<FilterSpec>& filter, std::size_t n, double n_sigma,
                        std::optional<double> signal_center) {
    double sum = pump_sum_frequency(pump);
    double cs = signal_center.value_or(sum / 2);
    double ci = sum - cs;
    auto m = approximate_marginal_sigmas(pump, pm, filter);
    double hs, hi;
    if (m) {
        hs = n_sigma * m->first;
        hi = n_sigma * m->second;
    } else {
        hs = hi = n_sigma * effective_pump_sigma(pump);
    }
    return FrequencyGrid::symmetric(hs, n, hi, n, cs, ci);
}

FrequencyGrid ellipse_grid(double sigma_d, double sigma_a, double center_omega, std::size_t n, double n_sigma) {
    double h = n_sigma * 0.5 * std::sqrt(sigma_d * sigma_d + sigma_a * sigma_a);
    return FrequencyGrid::symmetric(h, n, h, n, center_omega, center_omega);
}

}  // namespace jsi
