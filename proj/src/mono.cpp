#include "jsi/mono.hpp"

#include <cmath>

#include "jsi/error.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"
#include "jsi/units.hpp"

namespace jsi {

std::size_t scan_points(double lo_nm, double hi_nm, double step_nm) {
    if (!(step_nm > 0)) throw Error(Errc::config, "scan step must be positive");
    if (!(hi_nm >= lo_nm)) throw Error(Errc::config, "scan range is empty");
    return static_cast<std::size_t>(std::llround((hi_nm - lo_nm) / step_nm)) + 1;
}

namespace {

Eigen::VectorXd positions(double lo, std::size_t n, double step) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) v[static_cast<Eigen::Index>(k)] = lo + step * static_cast<double>(k);
    return v;
}

Eigen::VectorXd edges(const Eigen::VectorXd& centers, double step) {
    Eigen::VectorXd e(centers.size() + 1);
    e.head(centers.size()) = centers.array() - step / 2;
    e[centers.size()] = centers[centers.size() - 1] + step / 2;
    return e;
}

/// Passband transmission averaged over each grid cell, so passbands narrower
/// than a cell are not aliased.
Eigen::MatrixXd passbands(const Eigen::VectorXd& centers_nm, const FrequencyGrid& g, Arm arm, double fwhm) {
    const auto& ax = g.axis(arm);
    const double s = fwhm / fwhm_per_sigma;
    const double d = g.spacing(arm);
    auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    Eigen::MatrixXd t(centers_nm.size(), ax.size());
    for (Eigen::Index b = 0; b < ax.size(); ++b) {
        double l1 = nm_from_omega(g.center(arm) + ax[b] - d / 2);
        double l2 = nm_from_omega(g.center(arm) + ax[b] + d / 2);
        double lo = std::min(l1, l2), hi = std::max(l1, l2);
        for (Eigen::Index k = 0; k < centers_nm.size(); ++k) {
            double area = cdf((hi - centers_nm[k]) / s) - cdf((lo - centers_nm[k]) / s);
            t(k, b) = area * s * std::sqrt(2 * pi) / (hi - lo);
        }
    }
    return t;
}

void check_support(const FrequencyGrid& g, Arm arm, double lo, double hi, const char* name) {
    const auto& ax = g.axis(arm);
    double lmin = nm_from_omega(g.center(arm) + ax[ax.size() - 1]);
    double lmax = nm_from_omega(g.center(arm) + ax[0]);
    if (lo < lmin || hi > lmax)
        throw Error(Errc::coverage, std::string(name) + " scan range lies outside the JSI grid");
}

}  // namespace

MonoScanResult run_mono_scan(const JointIntensity& jsi, const MonoScanSpec& spec, const DetectorSpec& det_s,
                             const DetectorSpec& det_i, std::uint64_t rng_seed, bool noiseless) {
    validate(det_s);
    validate(det_i);
    if (!(spec.dwell_s > 0)) throw Error(Errc::config, "dwell time must be positive");
    if (!(spec.pair_rate >= 0)) throw Error(Errc::config, "pair rate must be non-negative");
    if (!(spec.passband_fwhm_nm > 0)) throw Error(Errc::config, "passband must be positive");
    std::size_t ns = scan_points(spec.signal_lo_nm, spec.signal_hi_nm, spec.step_nm);
    std::size_t ni = scan_points(spec.idler_lo_nm, spec.idler_hi_nm, spec.step_nm);
    if (spec.passband_fwhm_nm > spec.signal_hi_nm - spec.signal_lo_nm ||
        spec.passband_fwhm_nm > spec.idler_hi_nm - spec.idler_lo_nm)
        throw Error(Errc::config, "passband is wider than the scan range");
    const auto& g = jsi.grid();
    check_support(g, Arm::signal, spec.signal_lo_nm, spec.signal_hi_nm, "signal");
    check_support(g, Arm::idler, spec.idler_lo_nm, spec.idler_hi_nm, "idler");

    Eigen::VectorXd ls = positions(spec.signal_lo_nm, ns, spec.step_nm);
    Eigen::VectorXd li = positions(spec.idler_lo_nm, ni, spec.step_nm);
    Eigen::MatrixXd ts = passbands(ls, g, Arm::signal, spec.passband_fwhm_nm);
    Eigen::MatrixXd ti = passbands(li, g, Arm::idler, spec.passband_fwhm_nm);

    MonoScanResult r;
    double scale = spec.pair_rate * spec.dwell_s * det_s.efficiency * det_i.efficiency * g.cell_area();
    r.expected = scale * (ts * jsi.values() * ti.transpose());
    r.points = ns * ni;
    r.acquisition_time_s = static_cast<double>(r.points) * spec.dwell_s;
    r.peak_rate = r.expected.maxCoeff() / spec.dwell_s;

    r.counts.x_edges = edges(ls, spec.step_nm);
    r.counts.y_edges = edges(li, spec.step_nm);
    r.counts.x_unit = r.counts.y_unit = "nm";
    if (noiseless) {
        r.counts.counts = r.expected;
    } else {
        r.counts.counts.resize(r.expected.rows(), r.expected.cols());
        parallel_for(r.points, [&](std::size_t p) {
            auto a = static_cast<Eigen::Index>(p / ni), b = static_cast<Eigen::Index>(p % ni);
            Rng rng(rng_seed, streams::mono, p);
            r.counts.counts(a, b) = static_cast<double>(rng.poisson(r.expected(a, b)));
        });
    }
    r.raw_snr = std::sqrt(r.counts.counts.maxCoeff());
    if (r.counts.total() < 100) r.warnings.push_back("fewer than 100 coincidences in the scan");
    return r;
}

PurityEstimate estimate_purity_mono(const Histogram2D& hist, std::uint64_t rng_seed, std::size_t resamples) {
    if (hist.counts.size() == 0 || !(hist.total() > 0)) throw Error(Errc::degenerate_input, "histogram has no counts");
    if (resamples < 100) throw Error(Errc::invalid_input, "at least 100 bootstrap resamples are required");
    PurityEstimate e;
    SchmidtResult s = schmidt_from_counts(hist.counts);
    e.purity = s.purity;
    e.schmidt_number = s.schmidt_number;
    e.resamples = resamples;
    std::vector<double> p(resamples, 0.0);
    parallel_for(resamples, [&](std::size_t k) {
        Rng rng(rng_seed, streams::bootstrap, k);
        Eigen::MatrixXd c(hist.counts.rows(), hist.counts.cols());
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) = static_cast<double>(rng.poisson(hist.counts(i, j)));
        p[k] = c.sum() > 0 ? schmidt_from_counts(c).purity : 0.0;
    });
    double m = 0;
    for (double x : p) m += x;
    m /= static_cast<double>(resamples);
    double v = 0;
    for (double x : p) v += (x - m) * (x - m);
    e.error = std::sqrt(v / static_cast<double>(resamples - 1));
    e.bias = m - e.purity;
    return e;
}

}  // namespace jsi
