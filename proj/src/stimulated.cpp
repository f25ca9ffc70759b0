#include "jsi/stimulated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jsi/error.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"
#include "jsi/units.hpp"

namespace jsi {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Eigen::VectorXd positions(double lo, std::size_t n, double step) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) v[static_cast<Eigen::Index>(k)] = lo + static_cast<double>(k) * step;
    return v;
}

Eigen::VectorXd edges_of(const Eigen::VectorXd& c, double step) {
    Eigen::VectorXd e(c.size() + 1);
    e.head(c.size()) = c.array() - step / 2;
    e[c.size()] = c[c.size() - 1] + step / 2;
    return e;
}

/// Row k holds the cell-integrated weights of a unit Gaussian centred on
/// target k, over the grid axis with the given spacing.
Eigen::MatrixXd blur_matrix(const Eigen::VectorXd& targets_nm, const Eigen::VectorXd& sigmas, const Eigen::VectorXd& axis,
                            double center, double spacing) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(targets_nm.size(), axis.size());
    for (Eigen::Index k = 0; k < targets_nm.size(); ++k) {
        double nu = omega_from_nm(targets_nm[k]) - center;
        double s = sigmas[k];
        for (Eigen::Index a = 0; a < axis.size(); ++a) {
            double lo = axis[a] - spacing / 2 - nu, hi = axis[a] + spacing / 2 - nu;
            if (s > 0) {
                if (hi < -8 * s || lo > 8 * s) continue;
                w(k, a) = norm_cdf(hi / s) - norm_cdf(lo / s);
            } else if (lo <= 0 && hi > 0) {
                w(k, a) = 1;
            }
        }
    }
    return w;
}

double gain(const SeedScanSpec& spec, double power) {
    if (spec.saturation_power > 0) return power / (1 + power / spec.saturation_power);
    return power;
}

double covered_fraction(const Spectrum1D& m, double lo_nm, double hi_nm) {
    double wlo = omega_from_nm(hi_nm), whi = omega_from_nm(lo_nm);
    double in = 0, all = 0;
    for (Eigen::Index k = 0; k < m.nu.size(); ++k) {
        double w = m.center + m.nu[k];
        all += m.density[k];
        if (w >= wlo && w <= whi) in += m.density[k];
    }
    return all > 0 ? in / all : 0.0;
}

struct Axes {
    Eigen::VectorXd signal_nm, idler_nm;
    Eigen::VectorXd signal_area, idler_area;  // omega widths of a pixel / seed step
};

Axes make_axes(const SeedScanSpec& spec) {
    Axes ax;
    std::size_t ns = scan_points(spec.signal_lo_nm, spec.signal_hi_nm, spec.spectrometer_resolution_nm);
    std::size_t ni = scan_points(spec.idler_lo_nm, spec.idler_hi_nm, spec.scan_step_nm);
    ax.signal_nm = positions(spec.signal_lo_nm, ns, spec.spectrometer_resolution_nm);
    ax.idler_nm = positions(spec.idler_lo_nm, ni, spec.scan_step_nm);
    ax.signal_area = ax.signal_nm.unaryExpr([&](double l) { return domega_per_nm(l) * spec.spectrometer_resolution_nm; });
    ax.idler_area = ax.idler_nm.unaryExpr([&](double l) { return domega_per_nm(l) * spec.scan_step_nm; });
    return ax;
}

Eigen::MatrixXd blurred_density(const JointIntensity& jsi, const SeedScanSpec& spec, const Axes& ax) {
    const auto& g = jsi.grid();
    Eigen::VectorXd ss = ax.signal_nm.unaryExpr(
        [&](double l) { return domega_per_nm(l) * spec.spectrometer_resolution_nm / fwhm_per_sigma; });
    Eigen::VectorXd si = Eigen::VectorXd::Constant(ax.idler_nm.size(), 2 * pi * spec.seed_bandwidth_ghz * 1e9 / fwhm_per_sigma);
    Eigen::MatrixXd ws = blur_matrix(ax.signal_nm, ss, g.signal(), g.center_signal(), g.ds());
    Eigen::MatrixXd wi = blur_matrix(ax.idler_nm, si, g.idler(), g.center_idler(), g.di());
    return ws * jsi.values() * wi.transpose();
}

Histogram2D as_hist(const SeedScanSpec& spec, const Axes& ax, Eigen::MatrixXd counts) {
    Histogram2D h;
    h.x_unit = h.y_unit = "nm";
    h.x_edges = edges_of(ax.signal_nm, spec.spectrometer_resolution_nm);
    h.y_edges = edges_of(ax.idler_nm, spec.scan_step_nm);
    h.counts = std::move(counts);
    return h;
}

Eigen::MatrixXd expected_counts(const Eigen::MatrixXd& density, const Axes& ax, const SeedScanSpec& spec, double power) {
    Eigen::MatrixXd c = density.array().colwise() * ax.signal_area.array();
    c = c.array().rowwise() * ax.idler_area.transpose().array();
    return c * (spec.mean_pairs * gain(spec, power));
}

}  // namespace

void validate(const SeedScanSpec& s) {
    if (!(s.scan_step_nm > 0)) throw Error(Errc::config, "scan step must be positive");
    if (!(s.spectrometer_resolution_nm > 0)) throw Error(Errc::config, "spectrometer resolution must be positive");
    if (!(s.seed_bandwidth_ghz >= 0)) throw Error(Errc::config, "seed bandwidth must be non-negative");
    if (s.seed_powers.empty()) throw Error(Errc::config, "at least one seed power is required");
    for (double p : s.seed_powers)
        if (!(p >= 0) || !std::isfinite(p)) throw Error(Errc::config, "seed powers must be finite and non-negative");
    if (!(s.noise_floor >= 0)) throw Error(Errc::config, "noise floor must be non-negative");
    if (!(s.time_per_bin_s > 0)) throw Error(Errc::config, "time per bin must be positive");
    if (!(s.mean_pairs > 0)) throw Error(Errc::config, "mean pair number must be positive");
    if (!(s.saturation_power >= 0)) throw Error(Errc::config, "saturation power must be non-negative");
    if (!(s.signal_hi_nm > s.signal_lo_nm) || !(s.idler_hi_nm > s.idler_lo_nm))
        throw Error(Errc::config, "scan ranges must be non-empty");
}

Eigen::MatrixXd convolved_jsi(const JointIntensity& jsi, const SeedScanSpec& spec) {
    validate(spec);
    return blurred_density(jsi, spec, make_axes(spec));
}

Histogram2D stimulated_expectation(const JointIntensity& jsi, const SeedScanSpec& spec, double seed_power) {
    validate(spec);
    Axes ax = make_axes(spec);
    return as_hist(spec, ax, expected_counts(blurred_density(jsi, spec, ax), ax, spec, seed_power));
}

StimulatedScanResult run_stimulated_scan(const JointIntensity& jsi, const SeedScanSpec& spec, std::uint64_t rng_seed) {
    validate(spec);
    const double fi = covered_fraction(marginal(jsi, Arm::idler), spec.idler_lo_nm, spec.idler_hi_nm);
    if (fi < 1 - 1e-3) throw Error(Errc::coverage, "seed scan does not cover the idler band");
    const double fs = covered_fraction(marginal(jsi, Arm::signal), spec.signal_lo_nm, spec.signal_hi_nm);
    if (fs < 1 - 1e-3) throw Error(Errc::coverage, "spectrometer window does not cover the signal band");

    Axes ax = make_axes(spec);
    const Eigen::MatrixXd density = blurred_density(jsi, spec, ax);
    const auto ns = ax.signal_nm.size(), ni = ax.idler_nm.size();

    StimulatedScanResult r;
    r.seed_points = static_cast<std::size_t>(ni);
    r.pixels = static_cast<std::size_t>(ns);
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(ns, ni);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(ns, ni);
    for (std::size_t p = 0; p < spec.seed_powers.size(); ++p) {
        const double power = spec.seed_powers[p];
        if (spec.saturation_power > 0 && power > spec.linear_fraction * spec.saturation_power)
            r.warnings.push_back("seed power " + std::to_string(power) + " is outside the linear regime");
        Eigen::MatrixXd e = expected_counts(density, ax, spec, power);
        Eigen::MatrixXd m = e;
        const double eps = power > 0 ? spec.noise_floor / std::sqrt(power) : 0.0;
        if (eps > 0) {
            parallel_for(static_cast<std::size_t>(ni), [&](std::size_t q) {
                Rng rng(rng_seed, streams::stimulated, p * static_cast<std::size_t>(ni) + q);
                const auto col = static_cast<Eigen::Index>(q);
                for (Eigen::Index k = 0; k < ns; ++k) m(k, col) = e(k, col) * (1 + eps * rng.normal());
            });
        }
        total += m;
        expected += e;
    }

    Spectrum1D ms = marginal(jsi, Arm::signal);
    r.spontaneous_floor.resize(ns);
    for (Eigen::Index k = 0; k < ns; ++k) {
        double nu = omega_from_nm(ax.signal_nm[k]) - ms.center;
        double pos = (nu - ms.nu[0]) / ms.spacing();
        Eigen::Index a = static_cast<Eigen::Index>(std::floor(pos));
        double v = 0;
        if (a >= 0 && a + 1 < ms.nu.size()) v = ms.density[a] + (pos - static_cast<double>(a)) * (ms.density[a + 1] - ms.density[a]);
        r.spontaneous_floor[k] = spec.mean_pairs * v * ax.signal_area[k];
    }

    Eigen::Index pr, pc;
    r.peak_counts = expected.maxCoeff(&pr, &pc);
    double sum = 0, sq = 0;
    int n = 0;
    for (Eigen::Index a = std::max<Eigen::Index>(0, pr - 1); a <= std::min(ns - 1, pr + 1); ++a)
        for (Eigen::Index b = std::max<Eigen::Index>(0, pc - 1); b <= std::min(ni - 1, pc + 1); ++b) {
            sum += total(a, b);
            double d = total(a, b) - expected(a, b);
            sq += d * d;
            ++n;
        }
    double sd = std::sqrt(sq / n);
    r.raw_snr = sd > 0 ? (sum / n) / sd : std::numeric_limits<double>::infinity();
    r.acquisition_time_s = spec.time_per_bin_s * static_cast<double>(ns * ni) * static_cast<double>(spec.seed_powers.size());
    r.map = as_hist(spec, ax, std::move(total));
    return r;
}

PurityEstimate estimate_purity_stimulated(const StimulatedScanResult& r, std::uint64_t rng_seed, std::size_t resamples) {
    if (r.map.counts.size() == 0) throw Error(Errc::degenerate_input, "empty stimulated map");
    if (resamples < 2) throw Error(Errc::invalid_input, "at least two resamples are required");
    Eigen::MatrixXd c = r.map.counts.cwiseMax(0.0);
    if (!(c.sum() > 0)) throw Error(Errc::degenerate_input, "stimulated map has no signal");
    PurityEstimate e;
    SchmidtResult s = schmidt_from_counts(c);
    e.purity = s.purity;
    e.schmidt_number = s.schmidt_number;
    e.resamples = resamples;
    const double eps = std::isfinite(r.raw_snr) && r.raw_snr > 0 ? 1 / r.raw_snr : 0.0;
    if (eps == 0) return e;
    std::vector<double> p(resamples);
    parallel_for(resamples, [&](std::size_t k) {
        Rng rng(rng_seed, streams::bootstrap, k);
        Eigen::MatrixXd m(c.rows(), c.cols());
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            for (Eigen::Index i = 0; i < c.rows(); ++i) m(i, j) = std::max(0.0, c(i, j) * (1 + eps * rng.normal()));
        p[k] = schmidt_from_counts(m).purity;
    });
    double mean = 0;
    for (double x : p) mean += x;
    mean /= static_cast<double>(resamples);
    double v = 0;
    for (double x : p) v += (x - mean) * (x - mean);
    e.error = std::sqrt(v / static_cast<double>(resamples - 1));
    e.bias = mean - e.purity;
    return e;
}

LinearityReport linearity_check(const JointIntensity& jsi, const SeedScanSpec& spec, const std::vector<double>& powers,
                                double tolerance) {
    if (powers.size() < 3) throw Error(Errc::insufficient_data, "linearity check needs at least three seed powers");
    validate(spec);
    Axes ax = make_axes(spec);
    const Eigen::MatrixXd density = blurred_density(jsi, spec, ax);
    LinearityReport out;
    const auto n = static_cast<Eigen::Index>(powers.size());
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double p = powers[static_cast<std::size_t>(k)];
        if (!(p >= 0)) throw Error(Errc::invalid_input, "seed powers must be non-negative");
        x[k] = p;
        y[k] = expected_counts(density, ax, spec, p).maxCoeff();
        out.peak_counts.push_back(y[k]);
    }
    Eigen::MatrixXd a(n, 2);
    a.col(0).setOnes();
    a.col(1) = x;
    Eigen::Vector2d coef = a.colPivHouseholderQr().solve(y);
    out.intercept = coef[0];
    out.slope = coef[1];
    for (Eigen::Index k = 0; k < n; ++k) {
        if (x[k] == 0) continue;
        double fit = coef[0] + coef[1] * x[k];
        out.max_deviation = std::max(out.max_deviation, std::abs(y[k] - fit) / std::max(std::abs(fit), 1e-300));
    }
    Eigen::Index ref = -1;
    for (Eigen::Index k = 0; k < n; ++k)
        if (x[k] > 0 && (ref < 0 || x[k] < x[ref])) ref = k;
    for (Eigen::Index k = 0; k < n; ++k) {
        bool flag;
        if (x[k] == 0 || ref < 0) flag = y[k] != 0;
        else flag = std::abs((y[k] / x[k]) / (y[ref] / x[ref]) - 1) > tolerance;
        out.flagged.push_back(flag);
    }
    return out;
}

}  // namespace jsi
