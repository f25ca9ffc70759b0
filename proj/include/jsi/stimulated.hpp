#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsi/events.hpp"
#include "jsi/mono.hpp"
#include "jsi/spectral.hpp"

namespace jsi {

/// Seeded (stimulated) scan: a narrow CW seed steps across the idler band
/// and a spectrometer records the stimulated signal at each seed setting.
struct SeedScanSpec {
    double seed_bandwidth_ghz = 30;  // FWHM of the seed lineshape
    /// Mean seed photon numbers |A|^2 per pulse window, one acquisition each.
    std::vector<double> seed_powers = {1e9};
    double idler_lo_nm = 1057;
    double idler_hi_nm = 1077;
    double scan_step_nm = 0.17;
    double signal_lo_nm = 635;
    double signal_hi_nm = 645;
    /// Spectrometer FWHM; the pixel pitch equals the resolution.
    double spectrometer_resolution_nm = 0.06;
    /// Relative Gaussian noise is noise_floor / sqrt(|A|^2).
    double noise_floor = 0;
    double time_per_bin_s = 1e-3;
    /// Mean spontaneous pairs per pulse window, sets the absolute scale.
    double mean_pairs = 1e-3;
    /// Stimulated gain saturates as |A|^2 / (1 + |A|^2 / saturation); 0 is
    /// the ideal linear response.
    double saturation_power = 0;
    /// Powers above this fraction of saturation_power draw a warning.
    double linear_fraction = 0.01;
};

void validate(const SeedScanSpec& s);

struct StimulatedScanResult {
    /// Background-subtracted stimulated counts, summed over seed powers.
    /// x = signal (spectrometer) nm, y = idler (seed) nm.
    Histogram2D map;
    /// Spontaneous signal floor per pixel recorded with the seed blocked.
    Eigen::VectorXd spontaneous_floor;
    std::size_t seed_points = 0;
    std::size_t pixels = 0;
    double peak_counts = 0;
    /// Mean of the 3x3 block about the peak over the standard deviation of
    /// its fluctuation about the expected values; infinite when noiseless.
    double raw_snr = 0;
    double acquisition_time_s = 0;  // time_per_bin * bins
    std::vector<std::string> warnings;
};

StimulatedScanResult run_stimulated_scan(const JointIntensity& jsi, const SeedScanSpec& spec,
                                         std::uint64_t rng_seed);

/// Noiseless stimulated map for a single seed power.
Histogram2D stimulated_expectation(const JointIntensity& jsi, const SeedScanSpec& spec, double seed_power);

/// The normalized map expected for vanishing noise: the JSI blurred by the
/// seed and spectrometer lineshapes, sampled at the scan points.
Eigen::MatrixXd convolved_jsi(const JointIntensity& jsi, const SeedScanSpec& spec);

/// Flat-phase purity of a stimulated map; the error comes from resampling
/// the relative noise implied by raw_snr.
PurityEstimate estimate_purity_stimulated(const StimulatedScanResult& r, std::uint64_t rng_seed = 0,
                                          std::size_t resamples = 200);

struct LinearityReport {
    double slope = 0;
    double intercept = 0;
    /// Largest |y - fit| / |fit| over the non-zero powers.
    double max_deviation = 0;
    /// Per power: relative departure of counts/|A|^2 from the lowest-power
    /// value exceeds tolerance.
    std::vector<bool> flagged;
    std::vector<double> peak_counts;
};

LinearityReport linearity_check(const JointIntensity& jsi, const SeedScanSpec& spec, const std::vector<double>& powers,
                                double tolerance = 0.01);

}  // namespace jsi
