#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsi/events.hpp"
#include "jsi/spectral.hpp"

namespace jsi {

struct MonoScanSpec {
    double signal_lo_nm = 800;
    double signal_hi_nm = 820;
    double idler_lo_nm = 800;
    double idler_hi_nm = 820;
    double step_nm = 0.2;
    double passband_fwhm_nm = 0.2;
    double dwell_s = 60;
    double pair_rate = 1e4;  // pairs/s into the collection optics
};

struct MonoScanResult {
    Histogram2D counts;          // x = signal nm, y = idler nm
    Eigen::MatrixXd expected;    // mean coincidences per point
    double acquisition_time_s = 0;
    std::size_t points = 0;
    double peak_rate = 0;        // expected coincidences/s at the best point
    double raw_snr = 0;          // sqrt of the maximum count
    std::vector<std::string> warnings;
};

struct PurityEstimate {
    double purity = 0;
    double error = 0;
    double schmidt_number = 0;
    std::size_t resamples = 0;
    /// Bootstrap estimate of the estimator bias (resample mean - purity).
    double bias = 0;
};

/// Number of grating positions covering [lo, hi] at the given step.
std::size_t scan_points(double lo_nm, double hi_nm, double step_nm);

MonoScanResult run_mono_scan(const JointIntensity& jsi, const MonoScanSpec& spec, const DetectorSpec& det_s,
                             const DetectorSpec& det_i, std::uint64_t rng_seed, bool noiseless = false);

/// Flat-phase purity of a count histogram with a Poisson bootstrap error.
PurityEstimate estimate_purity_mono(const Histogram2D& hist, std::uint64_t rng_seed = 0,
                                    std::size_t resamples = 200);

}  // namespace jsi
