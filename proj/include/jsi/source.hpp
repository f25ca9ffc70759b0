#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jsi/spectral.hpp"
#include "jsi/units.hpp"

namespace jsi {

enum class Process { spdc, sfwm_degenerate_pump };

struct PumpSpec {
    double center_wavelength_nm = 405;
    /// Amplitude width sigma of exp(-(omega_p - omega_p0)^2 / (2 sigma^2)), rad/s.
    double bandwidth_sigma = 1e13;
    double gdd_fs2 = 0;
    double tod_fs3 = 0;
    Process process = Process::spdc;
};

enum class FilterShape { gaussian, rect };

struct FilterSpec {
    double signal_sigma = 1e13;
    double idler_sigma = 1e13;
    FilterShape shape = FilterShape::gaussian;
};

enum class PhasematchModel { none, gaussian, sinc };

/// Phasematching ridge Phi(u) with u = -nu_s sin(tilt) + nu_i cos(tilt).
struct PhasematchSpec {
    PhasematchModel model = PhasematchModel::none;
    double width_sigma = 0;
    double tilt_angle = pi / 4;
};

struct BuildOptions {
    bool check_coverage = true;
    double coverage_tol = 1e-4;
};

/// Sum frequency omega_s + omega_i selected by the pump centre.
double pump_sum_frequency(const PumpSpec& pump);

/// Width of the pump envelope in the sum coordinate; sqrt(2) sigma for a
/// degenerate-pump four-wave-mixing process.
double effective_pump_sigma(const PumpSpec& pump);

JointAmplitude build_amplitude(const PumpSpec& pump, const PhasematchSpec& pm,
                               const std::optional<FilterSpec>& filter, const FrequencyGrid& grid,
                               const BuildOptions& opts = {});

/// Real Gaussian ellipse with intensity widths sigma_a along
/// nu_s + nu_i and sigma_d along nu_s - nu_i.
JointAmplitude diagonal_gaussian_amplitude(double sigma_d, double sigma_a, const FrequencyGrid& grid,
                                           const BuildOptions& opts = {});

/// Real Gaussian amplitude whose intensity has standard deviations
/// sigma_s, sigma_i and correlation coefficient rho.
JointAmplitude correlated_gaussian_amplitude(double sigma_s, double sigma_i, double rho,
                                             const FrequencyGrid& grid, const BuildOptions& opts = {});

/// Marginal intensity standard deviations of the Gaussian approximation to
/// a source, {signal, idler}. Empty when the intensity is not normalizable.
std::optional<std::pair<double, double>> approximate_marginal_sigmas(
    const PumpSpec& pump, const PhasematchSpec& pm, const std::optional<FilterSpec>& filter);

/// Grid spanning +-n_sigma marginal widths with n points per axis, centred
/// on the degenerate (or given signal) frequency.
FrequencyGrid auto_grid(const PumpSpec& pump, const PhasematchSpec& pm,
                        const std::optional<FilterSpec>& filter, std::size_t n = 512,
                        double n_sigma = 5, std::optional<double> signal_center = std::nullopt);

FrequencyGrid ellipse_grid(double sigma_d, double sigma_a, double center_omega, std::size_t n = 512,
                           double n_sigma = 5);

}  // namespace jsi
