#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsi/events.hpp"
#include "jsi/spectral.hpp"

namespace jsi {

struct FibreSpec {
    double dispersion_ps_nm_km = -120;
    double length_km = 0.4;
    double reference_wavelength_nm = 810;
    double loss_db_per_km = 0;
    double fixed_offset_ps = 0;
};

void validate(const FibreSpec& f);

/// Arrival delay relative to a photon at the reference wavelength.
double wavelength_to_delay(double wavelength_nm, const FibreSpec& f);
double delay_to_wavelength(double delay_ps, const FibreSpec& f);

enum class Routing {
    beamsplitter,  // both photons share the fibre and a 50:50 splitter
    separate,      // signal always reaches detector A and idler detector B
};

struct FibreMeasurementSpec {
    FibreSpec fibre;
    DetectorSpec detector_a;
    DetectorSpec detector_b;
    double reference_jitter_fwhm_ps = 0;
    double tagger_jitter_fwhm_ps = 0;
    bool shared_reference = true;
    std::int64_t tagger_bin_ps = 50;
    /// Histogram side length; 0 picks +-5 widths of the blurred marginals.
    std::int64_t range_ps = 0;
    std::size_t n_pairs = 32000;
    /// Extra path delay of the idler so it trails the signal in the fibre.
    double idler_path_delay_ps = 10000;
    Routing routing = Routing::beamsplitter;
    double rep_rate_mhz = 76;
    std::uint64_t pulse_spacing = 100;
};

struct FibreMeasurement {
    Histogram2D time_hist;  // x = signal delay, y = idler delay, both ps
    Histogram2D nm_hist;    // x = signal nm, y = idler nm, ascending
    double coincidences = 0;
    std::int64_t signal_center_ps = 0;
    std::int64_t idler_center_ps = 0;
    std::vector<std::string> warnings;
};

FibreMeasurement run_fibre_measurement(const JointIntensity& jsi, const FibreMeasurementSpec& spec,
                                       std::uint64_t rng_seed);

/// Maps a time histogram onto wavelength axes for the given fibre.
Histogram2D time_to_wavelength(const Histogram2D& time_hist, const FibreSpec& f, double idler_path_delay_ps);

inline constexpr int kRichardsonLucyIterations = 7;
inline constexpr double kRichardsonLucyStopTol = 1e-4;

struct RichardsonLucyInfo {
    int iterations = 0;
    double last_update = 0;
};

/// Multiplicative Richardson-Lucy deconvolution with a separable Gaussian
/// kernel of the given FWHM (in histogram axis units). Each kernel column is
/// normalized over the histogram, so total counts are preserved.
Histogram2D richardson_lucy_2d(const Histogram2D& hist, double kernel_fwhm, int iterations = kRichardsonLucyIterations,
                               double stop_tol = kRichardsonLucyStopTol, RichardsonLucyInfo* info = nullptr);

/// Classical spectrum sampled on a wavelength axis.
struct SampledSpectrum {
    Eigen::VectorXd wavelength_nm;
    Eigen::VectorXd power;
};

struct JitterCalibration {
    double fwhm_ps = 0;
    double rms_residual = 0;  // relative to the measured peak
    double scale = 0;
    double shift_ps = 0;
};

/// Fits the Gaussian FWHM that best maps the known spectrum onto a measured
/// 1D arrival-time histogram (edges in ps).
JitterCalibration calibrate_jitter(const SampledSpectrum& known, const Eigen::VectorXd& edges_ps,
                                   const Eigen::VectorXd& counts, const FibreSpec& f, double max_fwhm_ps = 0);

/// Forward model used by calibrate_jitter: expected counts per bin.
Eigen::VectorXd jitter_forward_model(const SampledSpectrum& known, const Eigen::VectorXd& edges_ps, const FibreSpec& f,
                                     double fwhm_ps, double shift_ps);

/// Two-fold relative-timing histogram of (t_channel - t_reference) built from
/// coincidence queries.
struct Histogram1D {
    Eigen::VectorXd edges;
    Eigen::VectorXd counts;

    Eigen::VectorXd centers() const;
};

Histogram1D build_timing_histogram_1d(const TimeTagStream& stream, int reference_channel, int channel,
                                      std::int64_t bin_width_ps, std::int64_t range_ps, std::int64_t center_ps = 0);

}  // namespace jsi
