#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsi/spectral.hpp"

namespace jsi {

/// Common-path polarization interferometer driven by a translation stage.
struct PolInterferometerSpec {
    double delay_per_mm_fs = 15.75;
    /// Delay giving a 2 pi relative phase at 810 nm; informational.
    double phase_period_fs = 2.7;
    double stage_range_mm = 100;
    double stage_step_mm = 0.5;
    double fixed_offset_fs = 0;

    std::size_t points() const;
    double delay_step_fs() const { return stage_step_mm * delay_per_mm_fs; }
    Eigen::VectorXd delays_fs() const;
};

void validate(const PolInterferometerSpec& s);

/// Probability of transmitting a photon through the analyser:
/// (1 + cos(2 pi c delay / lambda)) / 2.
double interferometer_transmission(double delay_fs, double wavelength_nm);

/// Delay samples and counts. 1D scans keep tau_i empty and store a single
/// column.
struct Interferogram {
    Eigen::VectorXd tau_s_fs;
    Eigen::VectorXd tau_i_fs;
    Eigen::MatrixXd intensity;
    std::vector<std::string> warnings;

    bool is_2d() const { return tau_i_fs.size() > 0; }
};

struct TransformOptions {
    /// Half-Hann taper decaying from zero delay to the end of the scan.
    bool hann = false;
};

/// I(tau) = scale * integral S(omega) (1 + cos(omega tau)) / 2.
Interferogram simulate_1d_interferogram(const Spectrum1D& spectrum, const PolInterferometerSpec& spec,
                                        double scale = 1.0);

/// Inverse cosine transform of a 1D interferogram after offset removal,
/// evaluated on the given detuning axis and normalized.
Spectrum1D recover_spectrum_1d(const Interferogram& ig, const Eigen::VectorXd& nu, double center,
                               const TransformOptions& opts = {});

/// Coincidences on the (tau_s, tau_i) lattice. pairs_per_point is the
/// expected count at zero delay; Poisson noise is added when sample is set.
Interferogram simulate_2d_interferogram(const JointIntensity& jsi, const PolInterferometerSpec& spec_s,
                                        const PolInterferometerSpec& spec_i, double pairs_per_point,
                                        std::uint64_t rng_seed, bool sample = false);

/// Recovers the JSI in the positive-frequency quadrant on a target grid.
JointIntensity extract_jsi_quadrant(const Interferogram& ig, const FrequencyGrid& target,
                                    const TransformOptions& opts = {});

/// The terms removed by extract_jsi_quadrant: the origin term (weighted mean
/// of the interferogram) and the two axis ridges, transformed to spectra.
struct QuadrantTerms {
    double origin = 0;
    Spectrum1D signal_axis;
    Spectrum1D idler_axis;
};

QuadrantTerms quadrant_terms(const Interferogram& ig, const FrequencyGrid& target,
                             const TransformOptions& opts = {});

/// Grid whose absolute frequencies fall on the cosine-transform lattice of
/// the two scans, so the transform pair is exact. The spacing is
/// stride * pi / T with T the scanned delay range.
FrequencyGrid matched_grid(const PolInterferometerSpec& spec_s, const PolInterferometerSpec& spec_i,
                           double approx_center_s, double approx_center_i, double half_span_s,
                           double half_span_i, int stride = 1);

enum class DiagonalAxis { sum, difference };

struct DiagonalScanOptions {
    TransformOptions transform;
    double pairs_per_point = 0;  // 0 gives the noiseless expectation
    std::uint64_t rng_seed = 0;
};

struct PeakFit {
    double sigma = 0;
    double center = 0;
    double rms_residual = 0;
    double noise = 0;
    bool double_peak = false;
    double split = 0;
};

struct DiagonalScanResult {
    double sigma_d = 0;
    double sigma_a = 0;
    double purity = 0;
    PeakFit sum_peak;
    PeakFit difference_peak;
    Interferogram scan_sum;         // tau_s = tau_i
    Interferogram scan_difference;  // tau_s = -tau_i
    std::size_t points = 0;
    std::vector<std::string> warnings;
};

/// Single-axis scans along tau_s = +-tau_i; the transformed sum-frequency
/// peak gives sigma_a and the difference-frequency peak sigma_d.
DiagonalScanResult diagonal_scan_purity(const JointIntensity& jsi, const PolInterferometerSpec& spec,
                                        const DiagonalScanOptions& opts = {});

/// Diagonal scan of one axis only.
Interferogram simulate_diagonal_scan(const JointIntensity& jsi, const PolInterferometerSpec& spec,
                                     DiagonalAxis axis, double pairs_per_point, std::uint64_t rng_seed);

}  // namespace jsi
