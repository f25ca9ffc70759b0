#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "jsi/mono.hpp"
#include "jsi/parallel.hpp"

using namespace jsi;
using testing::error_code;

namespace {

// Scan covering +-r marginal sigmas of both arms.
MonoScanSpec covering(const JointIntensity& jsi, double r, double step) {
    MonoScanSpec s;
    s.step_nm = s.passband_fwhm_nm = step;
    auto range = [&](Arm a, double& lo, double& hi) {
        Spectrum1D m = marginal(jsi, a);
        double mu = m.center + m.mean(), sd = m.stddev();
        lo = nm_from_omega(mu + r * sd);
        hi = lo + std::floor((nm_from_omega(mu - r * sd) - lo) / step) * step;
    };
    range(Arm::signal, s.signal_lo_nm, s.signal_hi_nm);
    range(Arm::idler, s.idler_lo_nm, s.idler_hi_nm);
    return s;
}

double nm_step_of_cell(const JointIntensity& jsi) {
    const auto& g = jsi.grid();
    return g.ds() / domega_per_nm(nm_from_omega(g.center_signal()));
}

// Analytic correlated-Gaussian density in wavelength at the scan points,
// normalized over them.
Eigen::MatrixXd truth_on_scan(double sigma, double rho, const MonoScanResult& r) {
    Eigen::VectorXd ls = r.counts.x_centers(), li = r.counts.y_centers();
    const double w0 = omega_from_nm(810);
    Eigen::MatrixXd t(ls.size(), li.size());
    for (Eigen::Index a = 0; a < ls.size(); ++a)
        for (Eigen::Index b = 0; b < li.size(); ++b) {
            double x = (omega_from_nm(ls[a]) - w0) / sigma, y = (omega_from_nm(li[b]) - w0) / sigma;
            t(a, b) = std::exp(-(x * x - 2 * rho * x * y + y * y) / (2 * (1 - rho * rho))) *
                      domega_per_nm(ls[a]) * domega_per_nm(li[b]);
        }
    return t / t.sum();
}

}  // namespace

TEST_CASE("scan point arithmetic and nominal time") {
    CHECK(scan_points(800, 808, 0.2) == 41);
    CHECK(scan_points(800, 812, 0.2) == 61);
    CHECK(error_code([] { scan_points(800, 810, 0); }) == Errc::config);
    CHECK(error_code([] { scan_points(810, 800, 0.2); }) == Errc::config);

    JointIntensity jsi = testing::correlated(2e12, 0.5, 128).intensity();
    MonoScanSpec s = covering(jsi, 3, 0.05);
    s.signal_hi_nm = s.signal_lo_nm + 40 * 0.05;
    s.idler_hi_nm = s.idler_lo_nm + 60 * 0.05;
    MonoScanResult r = run_mono_scan(jsi, s, {}, {}, 1);
    CHECK(r.points == 41 * 61);
    CHECK(r.counts.counts.rows() == 41);
    CHECK(r.counts.counts.cols() == 61);
    CHECK(r.acquisition_time_s == 41 * 61 * 60.0);
    CHECK(r.acquisition_time_s == doctest::Approx(1.5e5).epsilon(0.001));
}

TEST_CASE("noiseless scan is the JSI seen through both passbands") {
    JointIntensity jsi = testing::correlated(2e12, 0.6, 160).intensity();
    MonoScanSpec s = covering(jsi, 3, 0.1);
    s.passband_fwhm_nm = 0.15;
    MonoScanResult r = run_mono_scan(jsi, s, {}, {}, 1, true);
    // Oracle: direct sum of JSI x Gaussian passbands over grid cell centres.
    const auto& g = jsi.grid();
    Eigen::VectorXd ls = r.counts.x_centers(), li = r.counts.y_centers();
    const double sd = s.passband_fwhm_nm / fwhm_per_sigma;
    auto band = [&](const Eigen::VectorXd& centers, Arm arm) {
        const auto& ax = g.axis(arm);
        Eigen::MatrixXd t(centers.size(), ax.size());
        for (Eigen::Index k = 0; k < centers.size(); ++k)
            for (Eigen::Index b = 0; b < ax.size(); ++b) {
                double z = (nm_from_omega(g.center(arm) + ax[b]) - centers[k]) / sd;
                t(k, b) = std::exp(-0.5 * z * z);
            }
        return t;
    };
    Eigen::MatrixXd want = band(ls, Arm::signal) * jsi.values() * band(li, Arm::idler).transpose();
    want /= want.sum();
    Eigen::MatrixXd got = r.expected / r.expected.sum();
    CHECK((got - want).cwiseAbs().sum() < 0.01);
    CHECK(r.counts.counts == r.expected);
}

TEST_CASE("expected counts scale with rate, dwell and efficiencies") {
    JointIntensity jsi = testing::correlated(2e12, 0.3, 96).intensity();
    MonoScanSpec s = covering(jsi, 3, 0.2);
    MonoScanResult a = run_mono_scan(jsi, s, {}, {}, 1, true);
    s.dwell_s *= 2;
    s.pair_rate *= 3;
    MonoScanResult b = run_mono_scan(jsi, s, DetectorSpec{0.5, 0, 0, 0}, DetectorSpec{0.8, 0, 0, 0}, 1, true);
    CHECK((b.expected - a.expected * 6 * 0.4).cwiseAbs().maxCoeff() < 1e-9 * a.expected.maxCoeff());
    CHECK(b.peak_rate == doctest::Approx(a.peak_rate * 3 * 0.4));
}

TEST_CASE("paper-scale peak rate gives a raw SNR near 6") {
    JointIntensity jsi = testing::correlated(2e12, 0.5, 128).intensity();
    MonoScanSpec s = covering(jsi, 3, 0.2);
    double peak = run_mono_scan(jsi, s, {}, {}, 1, true).peak_rate;
    s.pair_rate *= 0.57 / peak;
    MonoScanResult r = run_mono_scan(jsi, s, {}, {}, 4);
    CHECK(r.peak_rate == doctest::Approx(0.57));
    CHECK(r.raw_snr == doctest::Approx(std::sqrt(r.counts.counts.maxCoeff())));
    CHECK(r.raw_snr > 5);
    CHECK(r.raw_snr < 7.5);
}

TEST_CASE("scan validation") {
    JointIntensity jsi = testing::correlated(2e12, 0.5, 64).intensity();
    MonoScanSpec s = covering(jsi, 2, 0.2);
    MonoScanSpec wide = s;
    wide.passband_fwhm_nm = 100;
    CHECK(error_code([&] { run_mono_scan(jsi, wide, {}, {}, 1); }) == Errc::config);
    MonoScanSpec off = s;
    off.signal_lo_nm -= 50;
    CHECK(error_code([&] { run_mono_scan(jsi, off, {}, {}, 1); }) == Errc::coverage);
    MonoScanSpec dwell = s;
    dwell.dwell_s = 0;
    CHECK(error_code([&] { run_mono_scan(jsi, dwell, {}, {}, 1); }) == Errc::config);
}

TEST_CASE("purity estimates from noiseless histograms") {
    JointIntensity sep = testing::correlated(2e12, 0.0, 128).intensity();
    MonoScanResult a = run_mono_scan(sep, covering(sep, 4, nm_step_of_cell(sep)), {}, {}, 1, true);
    CHECK(std::abs(estimate_purity_mono(a.counts, 1, 100).purity - 1) <= 0.01);

    JointIntensity ell = testing::ellipse(3e12, 1e12, 192).intensity();
    MonoScanResult b = run_mono_scan(ell, covering(ell, 4, nm_step_of_cell(ell)), {}, {}, 1, true);
    CHECK(std::abs(estimate_purity_mono(b.counts, 1, 100).purity - 0.6) <= 0.01);
}

TEST_CASE("purity estimate validation") {
    Histogram2D h;
    h.x_edges = Eigen::VectorXd::LinSpaced(4, 0, 3);
    h.y_edges = h.x_edges;
    h.counts = Eigen::MatrixXd::Zero(3, 3);
    CHECK(error_code([&] { estimate_purity_mono(h); }) == Errc::degenerate_input);
    h.counts(1, 1) = 5;
    CHECK(error_code([&] { estimate_purity_mono(h, 0, 50); }) == Errc::invalid_input);
}

TEST_CASE("low counts bias the purity downward") {
    JointIntensity jsi = testing::correlated(2e12, 0.6, 128).intensity();
    double truth = schmidt_from_intensity(jsi).purity;
    MonoScanSpec s = covering(jsi, 3, 0.2);
    double total = run_mono_scan(jsi, s, {}, {}, 1, true).expected.sum();
    auto at = [&](double counts) {
        MonoScanSpec t = s;
        t.pair_rate *= counts / total;
        return estimate_purity_mono(run_mono_scan(jsi, t, {}, {}, 7).counts, 3, 100);
    };
    PurityEstimate lo = at(1e2), hi = at(1e6);
    CHECK(lo.purity < truth);
    CHECK(std::abs(lo.purity - truth) > 5 * std::abs(hi.purity - truth));
    CHECK(lo.bias < 0);
}

TEST_CASE("estimate converges as dwell grows") {
    JointIntensity jsi = testing::correlated(2e12, 0.6, 128).intensity();
    double truth = schmidt_from_intensity(jsi).purity;
    MonoScanSpec s = covering(jsi, 4, 0.1);
    double limit = estimate_purity_mono(run_mono_scan(jsi, s, {}, {}, 5, true).counts, 1, 100).purity;
    CHECK(std::abs(limit - truth) < 0.005);
    auto err = [&](double rate) {
        s.pair_rate = rate;
        return std::abs(estimate_purity_mono(run_mono_scan(jsi, s, {}, {}, 5).counts, 1, 100).purity - limit);
    };
    double lo = err(1e2), hi = err(1e6);
    CHECK(hi < 0.1 * lo);
    CHECK(hi < 0.002);
}

TEST_CASE("narrow passbands and many counts recover the JSI") {
    JointIntensity jsi = testing::correlated(2e12, 0.0, 80).intensity();
    MonoScanSpec s = covering(jsi, 2.5, nm_step_of_cell(jsi));
    double total = run_mono_scan(jsi, s, {}, {}, 1, true).expected.sum();
    s.pair_rate *= 1e7 / total;
    MonoScanResult r = run_mono_scan(jsi, s, {}, {}, 21);
    CHECK(r.counts.total() == doctest::Approx(1e7).epsilon(0.01));
    Eigen::MatrixXd got = r.counts.counts / r.counts.total();
    CHECK((got - truth_on_scan(2e12, 0.0, r)).cwiseAbs().sum() < 1e-2);
}

TEST_CASE("scan is deterministic across thread counts") {
    JointIntensity jsi = testing::correlated(2e12, 0.5, 64).intensity();
    MonoScanSpec s = covering(jsi, 3, 0.2);
    set_default_threads(1);
    MonoScanResult a = run_mono_scan(jsi, s, {}, {}, 8);
    PurityEstimate pa = estimate_purity_mono(a.counts, 2, 100);
    set_default_threads(4);
    MonoScanResult b = run_mono_scan(jsi, s, {}, {}, 8);
    PurityEstimate pb = estimate_purity_mono(b.counts, 2, 100);
    set_default_threads(0);
    CHECK(a.counts.counts == b.counts.counts);
    CHECK(pa.purity == pb.purity);
    CHECK(pa.error == pb.error);
}
