#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jsi/events.hpp"
#include "jsi/fibre.hpp"
#include "jsi/fourier.hpp"
#include "jsi/mono.hpp"
#include "jsi/source.hpp"
#include "jsi/stimulated.hpp"

namespace jsi {

enum class SourceKind { pump, ellipse, correlated };

struct SourceConfig {
    SourceKind kind = SourceKind::pump;
    PumpSpec pump;
    PhasematchSpec phasematch;
    std::optional<FilterSpec> filter;
    std::size_t points = 256;
    double span_sigmas = 5;
    std::optional<double> signal_center;  // rad/s
    // Ellipse: widths along nu_s - nu_i and nu_s + nu_i, both rad/s.
    double sigma_d = 0;
    double sigma_a = 0;
    double center = 0;  // rad/s, degenerate centre
    // Correlated Gaussian: marginal widths and correlation coefficient.
    double sigma_s = 0;
    double sigma_i = 0;
    double rho = 0;
    double center_idler = 0;
};

struct MonoConfig {
    bool enabled = false;
    MonoScanSpec spec;
    bool auto_range = true;
    double range_sigmas = 4;
    DetectorSpec detector;
};

struct FourierConfig {
    bool enabled = false;
    PolInterferometerSpec spec{15.75, 2.7, 40, 0.02, 0};
    double pairs_per_point = 2236;
    double dwell_s = 1;
    bool hann = false;
    std::size_t repeats = 20;
};

struct FibreConfig {
    bool enabled = false;
    FibreMeasurementSpec spec;
    double pair_rate = 2058;  // detected pairs per second
    bool deconvolve = false;
    int rl_iterations = kRichardsonLucyIterations;
    std::size_t resamples = 200;
};

struct StimulatedConfig {
    bool enabled = false;
    /// noise_floor 160 gives a raw SNR near 198 at |A|^2 = 1e9.
    SeedScanSpec spec = [] {
        SeedScanSpec s;
        s.noise_floor = 160;
        return s;
    }();
    bool auto_range = true;
    double range_sigmas = 6;
    std::size_t resamples = 200;
};

struct G2Config {
    bool enabled = false;
    double mean_pairs = 0.02;
    std::uint64_t pulses = 20000000;
    double rep_rate_hz = 76e6;
};

struct HomConfig {
    bool enabled = false;
    std::size_t points = 41;
    double fourfolds_per_point = 1000;
    double dwell_s = 2100;
    double range_widths = 4;
};

struct RunConfig {
    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
    unsigned threads = 0;
    SourceConfig source;
    MonoConfig monochromator;
    FourierConfig fourier;
    FibreConfig fibre;
    StimulatedConfig stimulated;
    G2Config g2;
    HomConfig hom;

    std::vector<std::string> enabled_techniques() const;
};

/// Technique identifiers in report order.
const std::vector<std::string>& technique_ids();

/// Parses a YAML run configuration; every physical quantity carries a unit
/// suffix. Throws Error(Errc::config) on malformed input.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

/// Seed present and at least one technique enabled.
void validate(const RunConfig& c);

JointAmplitude build_source(const SourceConfig& s);

}  // namespace jsi
