#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsi/events.hpp"
#include "jsi/spectral.hpp"

namespace jsi {

/// Independent thermal modes, one per Schmidt mode, with mean photon
/// numbers mu * lambda_j.
struct ThermalModeEnsemble {
    std::vector<double> mode_means;
    std::uint64_t pulses = 1000000;

    double total_mean() const;
};

struct G2Result {
    double g2 = 0;
    double std_error = 0;
    double implied_K = 0;        // 1 / (g2 - 1); infinite when g2 <= 1
    double implied_purity = 0;   // g2 - 1 clipped to [0, 1]
    bool purity_out_of_range = false;
    std::uint64_t pulses = 0;
    std::uint64_t singles_1 = 0;
    std::uint64_t singles_2 = 0;
    std::uint64_t coincidences = 0;
    std::vector<std::string> warnings;
};

/// Hanbury Brown-Twiss measurement of one arm: each pulse draws a
/// geometric photon number per mode, splits the photons 50:50 onto two
/// number-resolving detectors and accumulates the detected numbers n1, n2
/// and their product. singles_k = sum n_k, coincidences = sum n1 n2 and
/// g2 = C * N / (S1 * S2).
G2Result simulate_hbt(const ThermalModeEnsemble& ensemble, const DetectorSpec& det_1, const DetectorSpec& det_2,
                      std::uint64_t rng_seed);

G2Result simulate_hbt(const ThermalModeEnsemble& ensemble, std::uint64_t rng_seed);

/// Fills the derived fields of a G2Result from g2.
void set_implied(G2Result& r);

ThermalModeEnsemble ensemble_from_amplitude(const JointAmplitude& amp, double mean_pairs, std::uint64_t pulses);

G2Result g2_from_amplitude(const JointAmplitude& amp, double mean_pairs, std::uint64_t pulses, std::uint64_t rng_seed);

/// Expected g2 of the ensemble, 1 + sum mu_j^2 / (sum mu_j)^2.
double expected_g2(const ThermalModeEnsemble& ensemble);

struct HomScanResult {
    Eigen::VectorXd delays_fs;
    Eigen::VectorXd fourfold_counts;
    Eigen::VectorXd expected;  // normalized coincidence C(tau) before noise
    double baseline = 0;
    double c_min = 0;
    double visibility = 0;
    double visibility_error = 0;
    /// Fitted (baseline, visibility, centre fs, width fs) of
    /// B (1 - V exp(-(tau - tau0)^2 / (2 w^2))).
    Eigen::VectorXd fit_params;
    bool out_of_range = false;
    std::vector<std::string> warnings;
};

/// C(tau) = 1 - Re Tr[rho_1 U(tau) rho_2 U(tau)^dagger] for the signal arms
/// of two sources, U(tau) = diag(exp(i omega tau)).
Eigen::VectorXd hom_expected(const JointAmplitude& amp1, const JointAmplitude& amp2, const Eigen::VectorXd& delays_fs);

/// Two-source HOM scan with Poisson counts around a baseline of
/// fourfolds_per_point and a Gaussian dip fit.
HomScanResult hom_visibility(const JointAmplitude& amp1, const JointAmplitude& amp2, const Eigen::VectorXd& delays_fs,
                             double fourfolds_per_point, std::uint64_t rng_seed);

/// Evenly spaced delays covering +-n_widths standard deviations of the
/// expected dip, whose width follows the coherence of the signal density
/// matrix rather than its marginal bandwidth.
Eigen::VectorXd hom_delays(const JointAmplitude& amp, std::size_t points = 41, double n_widths = 4);

}  // namespace jsi
