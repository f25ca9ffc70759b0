#pragma once

#include <optional>

#include "jsi/error.hpp"
#include "jsi/source.hpp"
#include "jsi/spectral.hpp"
#include "jsi/units.hpp"

namespace testing {

/// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<jsi::Errc> error_code(F&& f) {
    try {
        f();
    } catch (const jsi::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

/// Gaussian pump of width sigma under Gaussian filters sigma / ratio, no
/// phasematching.
inline jsi::JointAmplitude filtered_source(double ratio, std::size_t n = 512, double gdd_fs2 = 0) {
    jsi::PumpSpec p;
    p.center_wavelength_nm = 405;
    p.bandwidth_sigma = 2e13;
    p.gdd_fs2 = gdd_fs2;
    jsi::FilterSpec f;
    f.signal_sigma = f.idler_sigma = p.bandwidth_sigma / ratio;
    jsi::PhasematchSpec pm;
    return jsi::build_amplitude(p, pm, f, jsi::auto_grid(p, pm, f, n));
}

inline jsi::JointAmplitude ellipse(double sigma_d, double sigma_a, std::size_t n = 256) {
    return jsi::diagonal_gaussian_amplitude(sigma_d, sigma_a, jsi::ellipse_grid(sigma_d, sigma_a, jsi::omega_from_nm(810), n));
}

/// Correlated Gaussian with marginal sigma and correlation rho around 810 nm.
inline jsi::JointAmplitude correlated(double sigma, double rho, std::size_t n = 192) {
    double h = 5.5 * sigma;
    double w = jsi::omega_from_nm(810);
    return jsi::correlated_gaussian_amplitude(sigma, sigma, rho, jsi::FrequencyGrid::symmetric(h, n, h, n, w, w));
}

}  // namespace testing
