#pragma once

#include <string>
#include <string_view>

namespace jsi {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double speed_of_light = 299792458.0;  // m/s
inline constexpr double fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

/// Angular frequency (rad/s) of a vacuum wavelength in nm.
double omega_from_nm(double wavelength_nm);
double nm_from_omega(double omega);

/// |d omega / d lambda| in (rad/s) per nm at the given wavelength.
double domega_per_nm(double wavelength_nm);

/// Converts an intensity FWHM quoted in nm into the amplitude sigma
/// (rad/s) of exp(-nu^2 / (2 sigma^2)), whose square has that FWHM.
double amplitude_sigma_from_fwhm_nm(double fwhm_nm, double center_nm);

/// Quantity families understood by parse_quantity. Each family has a
/// canonical unit that the parsed value is expressed in.
enum class Quantity {
    wavelength,         // nm
    angular_frequency,  // rad/s; Hz-type suffixes are multiplied by 2 pi
    frequency,          // Hz
    time,               // s
    gdd,                // fs^2
    tod,                // fs^3
    angle,              // rad
    rate,               // 1/s
    dispersion,         // ps/nm/km
    length,             // m
    delay_per_length,   // fs/mm
    loss,               // dB/km
    dimensionless,
};

/// Parses text such as "405 nm", "2000 fs2", "30 GHz" or "0.5". A bare
/// number is accepted only for the dimensionless family.
double parse_quantity(std::string_view text, Quantity q);

const char* canonical_unit(Quantity q);

}  // namespace jsi
