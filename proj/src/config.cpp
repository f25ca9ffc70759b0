#include "jsi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "jsi/error.hpp"
#include "jsi/units.hpp"

namespace jsi {

namespace {

std::string where(const YAML::Node& n, const std::string& key) {
    return "'" + key + "' (line " + std::to_string(n.Mark().line + 1) + ")";
}

void check_keys(const YAML::Node& n, const std::string& section, std::set<std::string> allowed) {
    if (!n) return;
    if (!n.IsMap()) throw Error(Errc::config, "section '" + section + "' must be a mapping");
    for (const auto& kv : n) {
        auto k = kv.first.as<std::string>();
        if (!allowed.count(k)) throw Error(Errc::config, "unknown key '" + k + "' in section '" + section + "'");
    }
}

std::string text(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw Error(Errc::config, where(n, key) + " must be a scalar");
    return n.Scalar();
}

double quantity(const YAML::Node& parent, const std::string& key, Quantity q, double fallback) {
    YAML::Node n = parent[key];
    if (!n) return fallback;
    try {
        return parse_quantity(text(n, key), q);
    } catch (const Error& e) {
        throw Error(Errc::config, where(n, key) + ": " + e.what());
    }
}

double number(const YAML::Node& parent, const std::string& key, double fallback) {
    return quantity(parent, key, Quantity::dimensionless, fallback);
}

std::uint64_t count(const YAML::Node& parent, const std::string& key, std::uint64_t fallback) {
    if (!parent[key]) return fallback;
    double v = number(parent, key, 0);
    if (!(v >= 0) || v != std::floor(v) || v > 1.8e19)
        throw Error(Errc::config, where(parent[key], key) + " must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

bool flag(const YAML::Node& parent, const std::string& key, bool fallback) {
    YAML::Node n = parent[key];
    if (!n) return fallback;
    std::string s = text(n, key);
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    throw Error(Errc::config, where(n, key) + " must be true or false");
}

std::string word(const YAML::Node& parent, const std::string& key, const std::string& fallback) {
    YAML::Node n = parent[key];
    return n ? text(n, key) : fallback;
}

/// Spectral width: frequency units give the amplitude sigma directly,
/// wavelength units are an intensity FWHM about center_nm.
double width(const YAML::Node& parent, const std::string& key, double center_nm, double fallback) {
    YAML::Node n = parent[key];
    if (!n) return fallback;
    std::string s = text(n, key);
    try {
        return parse_quantity(s, Quantity::angular_frequency);
    } catch (const Error&) {
    }
    try {
        return amplitude_sigma_from_fwhm_nm(parse_quantity(s, Quantity::wavelength), center_nm);
    } catch (const Error& e) {
        throw Error(Errc::config, where(n, key) + ": expected a frequency or wavelength width, " + e.what());
    }
}

DetectorSpec detector(const YAML::Node& n, DetectorSpec d) {
    if (!n) return d;
    check_keys(n, "detector", {"efficiency", "jitter", "dead_time", "dark_rate"});
    d.efficiency = number(n, "efficiency", d.efficiency);
    d.jitter_fwhm_ps = quantity(n, "jitter", Quantity::time, d.jitter_fwhm_ps * 1e-12) * 1e12;
    d.dead_time_ns = quantity(n, "dead_time", Quantity::time, d.dead_time_ns * 1e-9) * 1e9;
    d.dark_rate = quantity(n, "dark_rate", Quantity::rate, d.dark_rate);
    try {
        validate(d);
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
    return d;
}

SourceConfig parse_source(const YAML::Node& n) {
    SourceConfig s;
    if (!n) throw Error(Errc::config, "missing 'source' section");
    check_keys(n, "source", {"type", "pump", "phasematch", "filter", "grid", "sigma_d", "sigma_a", "center",
                             "sigma_s", "sigma_i", "rho", "center_idler"});
    std::string type = word(n, "type", "spdc");
    YAML::Node grid = n["grid"];
    check_keys(grid, "source.grid", {"points", "span", "signal_center"});
    if (grid) {
        s.points = count(grid, "points", s.points);
        s.span_sigmas = number(grid, "span", s.span_sigmas);
        if (grid["signal_center"]) s.signal_center = omega_from_nm(quantity(grid, "signal_center", Quantity::wavelength, 0));
    }
    if (s.points < 8) throw Error(Errc::config, "source grid needs at least 8 points");
    if (!(s.span_sigmas > 0)) throw Error(Errc::config, "grid span must be positive");

    if (type == "spdc" || type == "sfwm") {
        s.kind = SourceKind::pump;
        s.pump.process = type == "spdc" ? Process::spdc : Process::sfwm_degenerate_pump;
        YAML::Node p = n["pump"];
        if (!p) throw Error(Errc::config, "missing 'source.pump' section");
        check_keys(p, "source.pump", {"wavelength", "bandwidth", "gdd", "tod"});
        s.pump.center_wavelength_nm = quantity(p, "wavelength", Quantity::wavelength, s.pump.center_wavelength_nm);
        s.pump.bandwidth_sigma = width(p, "bandwidth", s.pump.center_wavelength_nm, s.pump.bandwidth_sigma);
        s.pump.gdd_fs2 = quantity(p, "gdd", Quantity::gdd, 0);
        s.pump.tod_fs3 = quantity(p, "tod", Quantity::tod, 0);
        double sum = pump_sum_frequency(s.pump);
        double cs = s.signal_center.value_or(sum / 2);
        double signal_nm = nm_from_omega(cs), idler_nm = nm_from_omega(sum - cs);
        if (YAML::Node pm = n["phasematch"]) {
            check_keys(pm, "source.phasematch", {"model", "width", "tilt"});
            std::string m = word(pm, "model", "gaussian");
            if (m == "gaussian") s.phasematch.model = PhasematchModel::gaussian;
            else if (m == "sinc") s.phasematch.model = PhasematchModel::sinc;
            else if (m == "none") s.phasematch.model = PhasematchModel::none;
            else throw Error(Errc::config, "unknown phasematch model '" + m + "'");
            s.phasematch.width_sigma = width(pm, "width", signal_nm, 0);
            s.phasematch.tilt_angle = quantity(pm, "tilt", Quantity::angle, pi / 4);
            if (s.phasematch.model != PhasematchModel::none && !(s.phasematch.width_sigma > 0))
                throw Error(Errc::config, "phasematch width must be positive");
        }
        if (YAML::Node f = n["filter"]) {
            check_keys(f, "source.filter", {"shape", "signal", "idler"});
            FilterSpec fs;
            std::string shape = word(f, "shape", "gaussian");
            if (shape == "gaussian") fs.shape = FilterShape::gaussian;
            else if (shape == "rect") fs.shape = FilterShape::rect;
            else throw Error(Errc::config, "unknown filter shape '" + shape + "'");
            fs.signal_sigma = width(f, "signal", signal_nm, 0);
            fs.idler_sigma = width(f, "idler", idler_nm, 0);
            if (!(fs.signal_sigma > 0) || !(fs.idler_sigma > 0)) throw Error(Errc::config, "filter widths must be positive");
            s.filter = fs;
        }
        if (!(s.pump.bandwidth_sigma > 0)) throw Error(Errc::config, "pump bandwidth must be positive");
    } else if (type == "ellipse") {
        s.kind = SourceKind::ellipse;
        s.center = omega_from_nm(quantity(n, "center", Quantity::wavelength, 810));
        s.sigma_d = quantity(n, "sigma_d", Quantity::angular_frequency, 0);
        s.sigma_a = quantity(n, "sigma_a", Quantity::angular_frequency, 0);
        if (!(s.sigma_d > 0) || !(s.sigma_a > 0)) throw Error(Errc::config, "ellipse widths must be positive");
    } else if (type == "correlated") {
        s.kind = SourceKind::correlated;
        s.center = omega_from_nm(quantity(n, "center", Quantity::wavelength, 810));
        s.center_idler = n["center_idler"] ? omega_from_nm(quantity(n, "center_idler", Quantity::wavelength, 810)) : s.center;
        s.sigma_s = quantity(n, "sigma_s", Quantity::angular_frequency, 0);
        s.sigma_i = quantity(n, "sigma_i", Quantity::angular_frequency, 0);
        s.rho = number(n, "rho", 0);
        if (!(s.sigma_s > 0) || !(s.sigma_i > 0)) throw Error(Errc::config, "marginal widths must be positive");
        if (!(std::abs(s.rho) < 1)) throw Error(Errc::config, "correlation must lie in (-1, 1)");
    } else {
        throw Error(Errc::config, "unknown source type '" + type + "'");
    }
    return s;
}

void parse_mono(const YAML::Node& n, MonoConfig& c) {
    check_keys(n, "techniques.monochromator",
               {"enabled", "step", "passband", "dwell", "pair_rate", "range", "signal_range", "idler_range", "detector"});
    c.enabled = flag(n, "enabled", true);
    c.spec.step_nm = quantity(n, "step", Quantity::wavelength, c.spec.step_nm);
    c.spec.passband_fwhm_nm = quantity(n, "passband", Quantity::wavelength, c.spec.passband_fwhm_nm);
    c.spec.dwell_s = quantity(n, "dwell", Quantity::time, c.spec.dwell_s);
    c.spec.pair_rate = quantity(n, "pair_rate", Quantity::rate, c.spec.pair_rate);
    c.range_sigmas = number(n, "range", c.range_sigmas);
    for (const char* axis : {"signal_range", "idler_range"}) {
        YAML::Node r = n[axis];
        if (!r) continue;
        if (!r.IsSequence() || r.size() != 2) throw Error(Errc::config, std::string(axis) + " must be a [lo, hi] pair");
        double lo = parse_quantity(text(r[0], axis), Quantity::wavelength);
        double hi = parse_quantity(text(r[1], axis), Quantity::wavelength);
        if (std::string(axis) == "signal_range") {
            c.spec.signal_lo_nm = lo;
            c.spec.signal_hi_nm = hi;
        } else {
            c.spec.idler_lo_nm = lo;
            c.spec.idler_hi_nm = hi;
        }
        c.auto_range = false;
    }
    c.detector = detector(n["detector"], c.detector);
    if (!(c.spec.step_nm > 0) || !(c.spec.passband_fwhm_nm > 0) || !(c.spec.dwell_s > 0) || !(c.spec.pair_rate > 0))
        throw Error(Errc::config, "monochromator step, passband, dwell and pair rate must be positive");
}

void parse_fourier(const YAML::Node& n, FourierConfig& c) {
    check_keys(n, "techniques.fourier",
               {"enabled", "delay_per_mm", "stage_range", "stage_step", "pairs_per_point", "dwell", "hann", "repeats"});
    c.enabled = flag(n, "enabled", true);
    c.spec.delay_per_mm_fs = quantity(n, "delay_per_mm", Quantity::delay_per_length, c.spec.delay_per_mm_fs);
    c.spec.stage_range_mm = quantity(n, "stage_range", Quantity::length, c.spec.stage_range_mm * 1e-3) * 1e3;
    c.spec.stage_step_mm = quantity(n, "stage_step", Quantity::length, c.spec.stage_step_mm * 1e-3) * 1e3;
    c.pairs_per_point = number(n, "pairs_per_point", c.pairs_per_point);
    c.dwell_s = quantity(n, "dwell", Quantity::time, c.dwell_s);
    c.hann = flag(n, "hann", c.hann);
    c.repeats = count(n, "repeats", c.repeats);
    try {
        validate(c.spec);
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
    if (!(c.pairs_per_point > 0) || !(c.dwell_s > 0) || c.repeats < 2)
        throw Error(Errc::config, "fourier pairs_per_point and dwell must be positive and repeats at least 2");
}

void parse_fibre(const YAML::Node& n, FibreConfig& c) {
    check_keys(n, "techniques.fibre",
               {"enabled", "dispersion", "length", "reference", "loss", "pairs", "bin", "range", "detector",
                "reference_jitter", "tagger_jitter", "shared_reference", "routing", "idler_delay", "pair_rate",
                "deconvolve", "rl_iterations", "resamples"});
    c.enabled = flag(n, "enabled", true);
    auto& s = c.spec;
    s.fibre.dispersion_ps_nm_km = quantity(n, "dispersion", Quantity::dispersion, s.fibre.dispersion_ps_nm_km);
    s.fibre.length_km = quantity(n, "length", Quantity::length, s.fibre.length_km * 1e3) * 1e-3;
    s.fibre.reference_wavelength_nm = quantity(n, "reference", Quantity::wavelength, s.fibre.reference_wavelength_nm);
    s.fibre.loss_db_per_km = quantity(n, "loss", Quantity::loss, s.fibre.loss_db_per_km);
    s.n_pairs = count(n, "pairs", s.n_pairs);
    s.tagger_bin_ps = std::llround(quantity(n, "bin", Quantity::time, static_cast<double>(s.tagger_bin_ps) * 1e-12) * 1e12);
    s.range_ps = std::llround(quantity(n, "range", Quantity::time, static_cast<double>(s.range_ps) * 1e-12) * 1e12);
    s.detector_a = s.detector_b = detector(n["detector"], s.detector_a);
    s.reference_jitter_fwhm_ps = quantity(n, "reference_jitter", Quantity::time, 0) * 1e12;
    s.tagger_jitter_fwhm_ps = quantity(n, "tagger_jitter", Quantity::time, 0) * 1e12;
    s.shared_reference = flag(n, "shared_reference", s.shared_reference);
    std::string routing = word(n, "routing", "beamsplitter");
    if (routing == "beamsplitter") s.routing = Routing::beamsplitter;
    else if (routing == "separate") s.routing = Routing::separate;
    else throw Error(Errc::config, "unknown routing '" + routing + "'");
    s.idler_path_delay_ps = quantity(n, "idler_delay", Quantity::time, s.idler_path_delay_ps * 1e-12) * 1e12;
    c.pair_rate = quantity(n, "pair_rate", Quantity::rate, c.pair_rate);
    c.deconvolve = flag(n, "deconvolve", c.deconvolve);
    c.rl_iterations = static_cast<int>(count(n, "rl_iterations", static_cast<std::uint64_t>(c.rl_iterations)));
    c.resamples = count(n, "resamples", c.resamples);
    try {
        validate(s.fibre);
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
    if (s.tagger_bin_ps <= 0 || s.n_pairs == 0 || !(c.pair_rate > 0) || c.rl_iterations < 1 || c.resamples < 100)
        throw Error(Errc::config, "fibre bin, pairs, pair rate, iterations and resamples (>= 100) must be positive");
}

void parse_stimulated(const YAML::Node& n, StimulatedConfig& c) {
    check_keys(n, "techniques.stimulated",
               {"enabled", "seed_bandwidth", "seed_powers", "step", "resolution", "noise_floor", "time_per_bin",
                "mean_pairs", "saturation_power", "range", "signal_range", "idler_range", "resamples"});
    c.enabled = flag(n, "enabled", true);
    auto& s = c.spec;
    s.seed_bandwidth_ghz = quantity(n, "seed_bandwidth", Quantity::frequency, s.seed_bandwidth_ghz * 1e9) * 1e-9;
    if (YAML::Node p = n["seed_powers"]) {
        if (!p.IsSequence() || p.size() == 0) throw Error(Errc::config, "seed_powers must be a non-empty list");
        s.seed_powers.clear();
        for (const auto& v : p) s.seed_powers.push_back(parse_quantity(text(v, "seed_powers"), Quantity::dimensionless));
    }
    s.scan_step_nm = quantity(n, "step", Quantity::wavelength, s.scan_step_nm);
    s.spectrometer_resolution_nm = quantity(n, "resolution", Quantity::wavelength, s.spectrometer_resolution_nm);
    s.noise_floor = number(n, "noise_floor", s.noise_floor);
    s.time_per_bin_s = quantity(n, "time_per_bin", Quantity::time, s.time_per_bin_s);
    s.mean_pairs = number(n, "mean_pairs", s.mean_pairs);
    s.saturation_power = number(n, "saturation_power", s.saturation_power);
    c.range_sigmas = number(n, "range", c.range_sigmas);
    c.resamples = count(n, "resamples", c.resamples);
    for (const char* axis : {"signal_range", "idler_range"}) {
        YAML::Node r = n[axis];
        if (!r) continue;
        if (!r.IsSequence() || r.size() != 2) throw Error(Errc::config, std::string(axis) + " must be a [lo, hi] pair");
        double lo = parse_quantity(text(r[0], axis), Quantity::wavelength);
        double hi = parse_quantity(text(r[1], axis), Quantity::wavelength);
        if (std::string(axis) == "signal_range") {
            s.signal_lo_nm = lo;
            s.signal_hi_nm = hi;
        } else {
            s.idler_lo_nm = lo;
            s.idler_hi_nm = hi;
        }
        c.auto_range = false;
    }
    validate(s);
}

void parse_g2(const YAML::Node& n, G2Config& c) {
    check_keys(n, "techniques.g2", {"enabled", "mean_pairs", "pulses", "rep_rate"});
    c.enabled = flag(n, "enabled", true);
    c.mean_pairs = number(n, "mean_pairs", c.mean_pairs);
    c.pulses = count(n, "pulses", c.pulses);
    c.rep_rate_hz = quantity(n, "rep_rate", Quantity::rate, c.rep_rate_hz);
    if (!(c.mean_pairs > 0) || c.pulses < 10000 || !(c.rep_rate_hz > 0))
        throw Error(Errc::config, "g2 mean_pairs and rep_rate must be positive with at least 1e4 pulses");
}

void parse_hom(const YAML::Node& n, HomConfig& c) {
    check_keys(n, "techniques.hom", {"enabled", "points", "fourfolds", "dwell", "range"});
    c.enabled = flag(n, "enabled", true);
    c.points = count(n, "points", c.points);
    c.fourfolds_per_point = number(n, "fourfolds", c.fourfolds_per_point);
    c.dwell_s = quantity(n, "dwell", Quantity::time, c.dwell_s);
    c.range_widths = number(n, "range", c.range_widths);
    if (c.points < 5 || !(c.fourfolds_per_point > 0) || !(c.dwell_s > 0) || !(c.range_widths > 0))
        throw Error(Errc::config, "hom needs at least 5 points and positive fourfolds, dwell and range");
}

}  // namespace

const std::vector<std::string>& technique_ids() {
    static const std::vector<std::string> ids{"monochromator", "fourier", "fibre", "stimulated", "g2", "hom"};
    return ids;
}

std::vector<std::string> RunConfig::enabled_techniques() const {
    std::vector<std::string> out;
    const bool on[] = {monochromator.enabled, fourier.enabled, fibre.enabled, stimulated.enabled, g2.enabled, hom.enabled};
    for (std::size_t k = 0; k < technique_ids().size(); ++k)
        if (on[k]) out.push_back(technique_ids()[k]);
    return out;
}

RunConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw Error(Errc::config, std::string("YAML syntax: ") + e.what());
    }
    if (!root.IsMap()) throw Error(Errc::config, "configuration must be a mapping");
    RunConfig c;
    try {
        check_keys(root, "top level", {"seed", "output", "threads", "source", "techniques"});
        if (root["seed"]) c.seed = count(root, "seed", 0);
        c.output_dir = word(root, "output", c.output_dir);
        c.threads = static_cast<unsigned>(count(root, "threads", 0));
        c.source = parse_source(root["source"]);
        YAML::Node t = root["techniques"];
        check_keys(t, "techniques", {"monochromator", "fourier", "fibre", "stimulated", "g2", "hom"});
        if (t) {
            if (t["monochromator"]) parse_mono(t["monochromator"], c.monochromator);
            if (t["fourier"]) parse_fourier(t["fourier"], c.fourier);
            if (t["fibre"]) parse_fibre(t["fibre"], c.fibre);
            if (t["stimulated"]) parse_stimulated(t["stimulated"], c.stimulated);
            if (t["g2"]) parse_g2(t["g2"], c.g2);
            if (t["hom"]) parse_hom(t["hom"], c.hom);
        }
    } catch (const YAML::Exception& e) {
        throw Error(Errc::config, std::string("YAML: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::config, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate(const RunConfig& c) {
    if (!c.seed) throw Error(Errc::config, "a global 'seed' is required (or pass --seed)");
    if (c.enabled_techniques().empty()) throw Error(Errc::config, "no technique is enabled");
}

JointAmplitude build_source(const SourceConfig& s) {
    switch (s.kind) {
    case SourceKind::pump: {
        FrequencyGrid g = auto_grid(s.pump, s.phasematch, s.filter, s.points, s.span_sigmas, s.signal_center);
        return build_amplitude(s.pump, s.phasematch, s.filter, g);
    }
    case SourceKind::ellipse:
        return diagonal_gaussian_amplitude(s.sigma_d, s.sigma_a, ellipse_grid(s.sigma_d, s.sigma_a, s.center, s.points, s.span_sigmas));
    case SourceKind::correlated: {
        FrequencyGrid g = FrequencyGrid::symmetric(s.span_sigmas * s.sigma_s, s.points, s.span_sigmas * s.sigma_i, s.points,
                                                   s.center, s.center_idler);
        return correlated_gaussian_amplitude(s.sigma_s, s.sigma_i, s.rho, g);
    }
    }
    throw Error(Errc::config, "unknown source kind");
}

}  // namespace jsi
