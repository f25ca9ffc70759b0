#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "jsi/parallel.hpp"
#include "jsi/photon_stats.hpp"

using namespace jsi;
using testing::error_code;

namespace {

ThermalModeEnsemble modes(std::vector<double> weights, double mean, std::uint64_t pulses) {
    double s = 0;
    for (double w : weights) s += w;
    ThermalModeEnsemble e;
    e.pulses = pulses;
    for (double w : weights) e.mode_means.push_back(mean * w / s);
    return e;
}

// Correlated Gaussian around 810 nm on a grid shared by all HOM cases.
JointAmplitude on_grid(double s, double rho = 0) {
    double h = 5e13, w = omega_from_nm(810);
    return correlated_gaussian_amplitude(s, s, rho, FrequencyGrid::symmetric(h, 200, h, 200, w, w));
}

}  // namespace

TEST_CASE("single mode is thermal") {
    G2Result r = simulate_hbt(modes({1}, 0.2, 1000000), 1);
    CHECK(std::abs(r.g2 - 2) < 0.03);
    CHECK(std::abs(r.g2 - 2) < 3 * r.std_error + 1e-3);
    CHECK(r.implied_K == doctest::Approx(1 / (r.g2 - 1)));
    CHECK(r.pulses == 1000000);
}

TEST_CASE("two equal modes give three halves") {
    G2Result r = simulate_hbt(modes({1, 1}, 0.2, 1000000), 2);
    CHECK(std::abs(r.g2 - 1.5) < 0.03);
}

TEST_CASE("Schmidt modes of a K = 4 source") {
    JointAmplitude amp = testing::correlated(1e13, std::sqrt(1 - 1.0 / 16), 256);
    SchmidtResult s = schmidt_decompose(amp, false);
    CHECK(s.schmidt_number == doctest::Approx(4).epsilon(0.01));
    ThermalModeEnsemble e = ensemble_from_amplitude(amp, 0.2, 1000000);
    CHECK(expected_g2(e) == doctest::Approx(1 + 1 / s.schmidt_number).epsilon(1e-9));
    G2Result r = simulate_hbt(e, 3);
    CHECK(std::abs(r.g2 - 1.25) < 0.03);
    CHECK(r.implied_purity == doctest::Approx(0.25).epsilon(0.1));
    CHECK_FALSE(r.purity_out_of_range);
}

TEST_CASE("number-resolved estimate is unbiased at high occupancy") {
    ThermalModeEnsemble e = modes({1}, 0.45, 4000000);
    G2Result r = simulate_hbt(e, 11);
    CHECK(std::abs(r.g2 - 2) < 3 * r.std_error);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("estimator converges to 1 + 1/K with many pulses") {
    JointAmplitude amp = testing::correlated(1e13, std::sqrt(1 - 1.0 / 16), 256);
    G2Result r = g2_from_amplitude(amp, 0.04, 10000000, 4);
    double want = 1 + 1 / schmidt_decompose(amp, false).schmidt_number;
    CHECK(std::abs(r.g2 / want - 1) < 0.02);
    CHECK(r.warnings.empty());
}

TEST_CASE("detector efficiency leaves g2 unchanged") {
    ThermalModeEnsemble e = modes({1}, 0.2, 2000000);
    DetectorSpec d;
    d.efficiency = 0.5;
    G2Result r = simulate_hbt(e, d, d, 5);
    CHECK(std::abs(r.g2 - 2) < 0.04);
    CHECK(r.singles_1 < simulate_hbt(e, 5).singles_1);
}

TEST_CASE("implied quantities and range flags") {
    G2Result r;
    r.g2 = 1.4;
    set_implied(r);
    CHECK(r.implied_K == doctest::Approx(2.5));
    CHECK(r.implied_purity == doctest::Approx(0.4));
    CHECK_FALSE(r.purity_out_of_range);
    G2Result hi;
    hi.g2 = 2.2;
    set_implied(hi);
    CHECK(hi.implied_purity == 1);
    CHECK(hi.purity_out_of_range);
    G2Result lo;
    lo.g2 = 0.9;
    set_implied(lo);
    CHECK(lo.implied_purity == 0);
    CHECK(std::isinf(lo.implied_K));
    CHECK(lo.purity_out_of_range);
}

TEST_CASE("hbt validation") {
    CHECK(error_code([] { simulate_hbt(modes({1}, 0.6, 100000), 1); }) == Errc::domain);
    CHECK(error_code([] { simulate_hbt(modes({1}, 0.01, 1000), 1); }) == Errc::invalid_input);
    CHECK(error_code([] { simulate_hbt(ThermalModeEnsemble{{-0.1}, 100000}, 1); }) == Errc::invalid_input);
    CHECK(error_code([] { simulate_hbt(ThermalModeEnsemble{{0.0}, 100000}, 1); }) == Errc::degenerate_input);
    CHECK_FALSE(simulate_hbt(modes({1}, 0.1, 100000), 1).warnings.empty());
}

TEST_CASE("g2 sees spectral phase that the JSI hides") {
    JointAmplitude flat = testing::filtered_source(1, 192, 0);
    JointAmplitude chirped = testing::filtered_source(1, 192, 5000);
    CHECK((flat.intensity().values() - chirped.intensity().values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(schmidt_from_intensity(flat.intensity()).purity ==
          doctest::Approx(schmidt_from_intensity(chirped.intensity()).purity).epsilon(1e-9));
    double pf = schmidt_decompose(flat, false).purity, pc = schmidt_decompose(chirped, false).purity;
    CHECK(pc < pf - 0.05);
    G2Result a = g2_from_amplitude(flat, 0.2, 2000000, 6), b = g2_from_amplitude(chirped, 0.2, 2000000, 6);
    CHECK(a.g2 - b.g2 > 3 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("purity versus applied dispersion peaks at compensation") {
    const double residual = 3000;
    std::vector<double> applied = {-9000, -6000, -4500, -3000, -1500, 0, 3000};
    std::vector<double> purity;
    for (double g : applied) purity.push_back(schmidt_decompose(testing::filtered_source(1, 160, residual + g), false).purity);
    auto best = std::max_element(purity.begin(), purity.end()) - purity.begin();
    CHECK(applied[static_cast<std::size_t>(best)] == -residual);
    for (std::size_t k = 1; k <= static_cast<std::size_t>(best); ++k) CHECK(purity[k] > purity[k - 1]);
    for (std::size_t k = static_cast<std::size_t>(best) + 1; k < purity.size(); ++k) CHECK(purity[k] < purity[k - 1]);
}

TEST_CASE("identical pure sources interfere perfectly") {
    JointAmplitude amp = on_grid(4e12);
    HomScanResult r = hom_visibility(amp, amp, hom_delays(amp), 1000, 1);
    CHECK(r.expected.minCoeff() == doctest::Approx(0).epsilon(1e-9));
    CHECK(std::abs(r.visibility - 1) < std::max(3 * r.visibility_error, 0.02));
    CHECK(r.visibility == doctest::Approx(1 - r.c_min / r.baseline));
}

TEST_CASE("identical mixed sources give V = Tr rho^2") {
    for (double rho : {0.5, 0.8}) {
        JointAmplitude amp = testing::correlated(4e12, rho, 160);
        double p = schmidt_decompose(amp, false).purity;
        Eigen::VectorXd d = hom_delays(amp);
        HomScanResult r = hom_visibility(amp, amp, d, 1000, 2);
        CAPTURE(rho);
        CHECK(1 - hom_expected(amp, amp, Eigen::VectorXd::Zero(1))[0] == doctest::Approx(p).epsilon(1e-6));
        CHECK(std::abs(r.visibility - p) < 0.02);
        CHECK_FALSE(r.out_of_range);
    }
}

std::vector<JointAmplitude> bound_cases() {
    return {on_grid(4e12), on_grid(4e12, 0.5), on_grid(4e12, -0.7), on_grid(6e12, 0.3)};
}

TEST_CASE("visibility is bounded by the smaller purity of the pair") {
    std::vector<JointAmplitude> amps = bound_cases();
    for (std::size_t i = 0; i < amps.size(); ++i)
        for (std::size_t j = i; j < amps.size(); ++j) {
            double bound = std::min(schmidt_decompose(amps[i], false).purity, schmidt_decompose(amps[j], false).purity);
            HomScanResult r = hom_visibility(amps[i], amps[j], hom_delays(amps[i]), 1000, 10 + i * 4 + j);
            CAPTURE(i);
            CAPTURE(j);
            CHECK(r.visibility <= bound + 3 * r.visibility_error);
        }
}

TEST_CASE("overlap never exceeds the geometric mean of the purities") {
    std::vector<JointAmplitude> amps = bound_cases();
    for (std::size_t i = 0; i < amps.size(); ++i)
        for (std::size_t j = i; j < amps.size(); ++j) {
            double p1 = schmidt_decompose(amps[i], false).purity, p2 = schmidt_decompose(amps[j], false).purity;
            double v = 1 - hom_expected(amps[i], amps[j], Eigen::VectorXd::Zero(1))[0];
            CAPTURE(i);
            CAPTURE(j);
            CHECK(v <= std::sqrt(p1 * p2) + 1e-9);
            if (i == j) CHECK(v == doctest::Approx(p1).epsilon(1e-6));
        }
}

TEST_CASE("distinct pure sources give the squared mode overlap") {
    double s1 = 4e12;
    JointAmplitude a = on_grid(s1);
    double last = 1;
    for (double f : {1.2, 1.5, 2.0}) {
        JointAmplitude b = on_grid(f * s1);
        double overlap = 2 * f / (1 + f * f);
        double v0 = 1 - hom_expected(a, b, Eigen::VectorXd::Zero(1))[0];
        HomScanResult r = hom_visibility(a, b, hom_delays(a), 1000, 3);
        CAPTURE(f);
        CHECK(v0 == doctest::Approx(overlap).epsilon(1e-4));
        CHECK(std::abs(r.visibility - overlap) < 0.03);
        CHECK(overlap < last);
        last = overlap;
    }
}

TEST_CASE("K = 1.5 sources at low counts sit under the g2 bound") {
    double rho = std::sqrt(1 - 1 / 2.25);
    JointAmplitude amp = testing::correlated(4e12, rho, 160);
    G2Result g = g2_from_amplitude(amp, 0.2, 2000000, 8);
    HomScanResult r = hom_visibility(amp, amp, hom_delays(amp, 21), 100, 8);
    CHECK(g.implied_purity == doctest::Approx(1 / 1.5).epsilon(0.05));
    CHECK(r.visibility == doctest::Approx(1 / 1.5).epsilon(0.12));
    CHECK(r.visibility <= g.implied_purity + 3 * std::hypot(r.visibility_error, g.std_error));
}

TEST_CASE("hom validation") {
    JointAmplitude a = on_grid(4e12);
    JointAmplitude other = testing::correlated(4e12, 0, 128);
    Eigen::VectorXd d = hom_delays(a);
    CHECK(error_code([&] { hom_visibility(a, other, d, 1000, 1); }) == Errc::invalid_input);
    CHECK(error_code([&] { hom_visibility(a, a, d.head(3), 1000, 1); }) == Errc::invalid_input);
    CHECK(error_code([&] { hom_visibility(a, a, d, 0, 1); }) == Errc::invalid_input);
    CHECK(error_code([&] { hom_delays(a, 3); }) == Errc::invalid_input);
}

TEST_CASE("hbt and hom are deterministic across thread counts") {
    JointAmplitude amp = testing::correlated(4e12, 0.5, 128);
    set_default_threads(1);
    G2Result a = g2_from_amplitude(amp, 0.04, 500000, 9);
    HomScanResult ha = hom_visibility(amp, amp, hom_delays(amp), 1000, 9);
    set_default_threads(3);
    G2Result b = g2_from_amplitude(amp, 0.04, 500000, 9);
    HomScanResult hb = hom_visibility(amp, amp, hom_delays(amp), 1000, 9);
    set_default_threads(0);
    CHECK(a.coincidences == b.coincidences);
    CHECK(a.g2 == b.g2);
    CHECK(ha.fourfold_counts == hb.fourfold_counts);
    CHECK(ha.visibility == hb.visibility);
}
