#include "jsi/units.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <utility>

#include "jsi/error.hpp"

namespace jsi {

double omega_from_nm(double wavelength_nm) {
    if (!(wavelength_nm > 0)) throw Error(Errc::domain, "wavelength must be positive");
    return 2 * pi * speed_of_light / (wavelength_nm * 1e-9);
}

double nm_from_omega(double omega) {
    if (!(omega > 0)) throw Error(Errc::domain, "angular frequency must be positive");
    return 2 * pi * speed_of_light / omega * 1e9;
}

double domega_per_nm(double wavelength_nm) {
    double l = wavelength_nm * 1e-9;
    return 2 * pi * speed_of_light / (l * l) * 1e-9;
}

double amplitude_sigma_from_fwhm_nm(double fwhm_nm, double center_nm) {
    if (!(fwhm_nm > 0)) throw Error(Errc::domain, "bandwidth must be positive");
    return fwhm_nm * domega_per_nm(center_nm) / (2 * std::sqrt(std::log(2.0)));
}

namespace {

using UnitTable = std::map<std::string, double, std::less<>>;

const UnitTable& table(Quantity q) {
    static const std::map<Quantity, UnitTable> tables = {
        {Quantity::wavelength, {{"nm", 1.0}, {"um", 1e3}, {"pm", 1e-3}, {"m", 1e9}}},
        {Quantity::angular_frequency,
         {{"rad/s", 1.0}, {"Grad/s", 1e9}, {"Trad/s", 1e12}, {"Prad/s", 1e15},
          {"Hz", 2 * pi}, {"kHz", 2 * pi * 1e3}, {"MHz", 2 * pi * 1e6},
          {"GHz", 2 * pi * 1e9}, {"THz", 2 * pi * 1e12}}},
        {Quantity::frequency,
         {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}, {"THz", 1e12}}},
        {Quantity::time,
         {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12},
          {"fs", 1e-15}, {"min", 60.0}, {"h", 3600.0}}},
        {Quantity::gdd, {{"fs2", 1.0}, {"fs^2", 1.0}, {"ps2", 1e6}, {"ps^2", 1e6}}},
        {Quantity::tod, {{"fs3", 1.0}, {"fs^3", 1.0}, {"ps3", 1e9}, {"ps^3", 1e9}}},
        {Quantity::angle, {{"rad", 1.0}, {"deg", pi / 180}}},
        {Quantity::rate, {{"/s", 1.0}, {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}}},
        {Quantity::dispersion, {{"ps/nm/km", 1.0}, {"ps/(nm km)", 1.0}}},
        {Quantity::length, {{"m", 1.0}, {"km", 1e3}, {"mm", 1e-3}, {"cm", 1e-2}, {"um", 1e-6}}},
        {Quantity::delay_per_length, {{"fs/mm", 1.0}, {"ps/mm", 1e3}}},
        {Quantity::loss, {{"dB/km", 1.0}}},
        {Quantity::dimensionless, {}},
    };
    return tables.at(q);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace

const char* canonical_unit(Quantity q) {
    switch (q) {
    case Quantity::wavelength: return "nm";
    case Quantity::angular_frequency: return "rad/s";
    case Quantity::frequency: return "Hz";
    case Quantity::time: return "s";
    case Quantity::gdd: return "fs2";
    case Quantity::tod: return "fs3";
    case Quantity::angle: return "rad";
    case Quantity::rate: return "/s";
    case Quantity::dispersion: return "ps/nm/km";
    case Quantity::length: return "m";
    case Quantity::delay_per_length: return "fs/mm";
    case Quantity::loss: return "dB/km";
    case Quantity::dimensionless: return "";
    }
    return "";
}

double parse_quantity(std::string_view text, Quantity q) {
    std::string_view s = trim(text);
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr == s.data())
        throw Error(Errc::config, "cannot parse a number from '" + std::string(text) + "'");
    std::string_view unit = trim(std::string_view(ptr, s.data() + s.size() - ptr));
    if (!std::isfinite(value)) throw Error(Errc::config, "non-finite quantity '" + std::string(text) + "'");
    if (unit.empty()) {
        if (q == Quantity::dimensionless) return value;
        throw Error(Errc::config, "quantity '" + std::string(text) + "' needs a unit (expected " +
                                      canonical_unit(q) + "-compatible)");
    }
    const UnitTable& t = table(q);
    auto it = t.find(unit);
    if (it == t.end())
        throw Error(Errc::config, "unit '" + std::string(unit) + "' is not valid here (expected " +
                                      canonical_unit(q) + "-compatible)");
    return value * it->second;
}

}  // namespace jsi
