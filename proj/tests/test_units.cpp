#include <doctest.h>

#include <cmath>

#include "jsi/error.hpp"
#include "jsi/units.hpp"

using namespace jsi;

TEST_CASE("wavelength and angular frequency round trip") {
    for (double nm : {405.0, 810.0, 1550.0}) CHECK(nm_from_omega(omega_from_nm(nm)) == doctest::Approx(nm).epsilon(1e-14));
    CHECK(omega_from_nm(810) == doctest::Approx(2 * pi * speed_of_light / 810e-9));
    CHECK_THROWS_AS(omega_from_nm(0), Error);
    CHECK_THROWS_AS(nm_from_omega(-1), Error);
}

TEST_CASE("domega per nm matches a finite difference") {
    double h = 1e-4;
    double fd = (omega_from_nm(810 - h) - omega_from_nm(810 + h)) / (2 * h);
    CHECK(domega_per_nm(810) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("intensity FWHM in nm maps to the amplitude sigma") {
    // |exp(-nu^2 / 2 s^2)|^2 falls to one half at nu = s sqrt(ln 2).
    double s = amplitude_sigma_from_fwhm_nm(2.0, 810);
    double half_width = 1.0 * domega_per_nm(810);
    CHECK(std::exp(-half_width * half_width / (s * s)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(amplitude_sigma_from_fwhm_nm(0, 810), Error);
}

TEST_CASE("quantities parse with explicit units") {
    CHECK(parse_quantity("405 nm", Quantity::wavelength) == 405);
    CHECK(parse_quantity("1.55 um", Quantity::wavelength) == doctest::Approx(1550));
    CHECK(parse_quantity("2000 fs2", Quantity::gdd) == 2000);
    CHECK(parse_quantity("0.002 ps^2", Quantity::gdd) == doctest::Approx(2000));
    CHECK(parse_quantity("30 GHz", Quantity::frequency) == doctest::Approx(30e9));
    CHECK(parse_quantity("1 THz", Quantity::angular_frequency) == doctest::Approx(2 * pi * 1e12));
    CHECK(parse_quantity("45 deg", Quantity::angle) == doctest::Approx(pi / 4));
    CHECK(parse_quantity("-120 ps/nm/km", Quantity::dispersion) == -120);
    CHECK(parse_quantity("400 m", Quantity::length) == 400);
    CHECK(parse_quantity("0.4 km", Quantity::length) == doctest::Approx(400));
    CHECK(parse_quantity("60 s", Quantity::time) == 60);
    CHECK(parse_quantity("  0.5 ", Quantity::dimensionless) == 0.5);
}

TEST_CASE("unit errors are config errors") {
    auto code = [](const char* text, Quantity q) {
        try {
            parse_quantity(text, q);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::invalid_input;
    };
    CHECK(code("405", Quantity::wavelength) == Errc::config);
    CHECK(code("405 fs", Quantity::wavelength) == Errc::config);
    CHECK(code("nm", Quantity::wavelength) == Errc::config);
    CHECK(code("1 nm", Quantity::dimensionless) == Errc::config);
}

TEST_CASE("error codes have names") {
    Error e(Errc::coverage, "x");
    CHECK(e.code() == Errc::coverage);
    CHECK(std::string(errc_name(Errc::coverage)) == "coverage");
}
