#include "jsi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "jsi/error.hpp"
#include "jsi/fibre.hpp"
#include "jsi/fourier.hpp"
#include "jsi/mono.hpp"
#include "jsi/parallel.hpp"
#include "jsi/photon_stats.hpp"
#include "jsi/rng.hpp"
#include "jsi/stimulated.hpp"
#include "jsi/units.hpp"

namespace jsi {

using json = nlohmann::ordered_json;

namespace {

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw Error(Errc::invalid_input, "cannot write " + name + " in " + dir);
    out << content;
}

std::string hist_csv(const Histogram2D& h) {
    std::ostringstream os;
    write_histogram_csv(os, h);
    return os.str();
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::optional<double> finite(double x) {
    if (std::isfinite(x)) return x;
    return std::nullopt;
}

/// [lo, hi] in nm covering mean +- r standard deviations of the marginal,
/// snapped outward to multiples of step.
std::pair<double, double> nm_range(const JointIntensity& jsi, Arm arm, double r, double step) {
    Spectrum1D m = marginal(jsi, arm);
    double mu = m.center + m.mean(), sd = m.stddev();
    double lo = nm_from_omega(mu + r * sd), hi = nm_from_omega(std::max(mu - r * sd, 1.0));
    lo = std::floor(lo / step) * step;
    hi = lo + std::ceil((hi - lo) / step - 1e-9) * step;
    return {lo, hi};
}

struct BootstrapSpread {
    double std = 0;
    double bias = 0;
};

/// Poisson bootstrap of the flat-phase purity of a histogram, optionally
/// deconvolved before each decomposition.
BootstrapSpread bootstrap_error(const Histogram2D& raw, double estimate, std::uint64_t seed, std::size_t resamples,
                                double kernel_fwhm, int iterations) {
    std::vector<double> p(resamples);
    parallel_for(resamples, [&](std::size_t k) {
        Rng rng(seed, streams::bootstrap, k);
        Histogram2D h = raw;
        for (Eigen::Index j = 0; j < h.counts.cols(); ++j)
            for (Eigen::Index i = 0; i < h.counts.rows(); ++i)
                h.counts(i, j) = static_cast<double>(rng.poisson(raw.counts(i, j)));
        if (!(h.total() > 0)) {
            p[k] = 0;
            return;
        }
        if (kernel_fwhm > 0) h = richardson_lucy_2d(h, kernel_fwhm, iterations);
        p[k] = schmidt_from_counts(h.counts).purity;
    });
    double m = 0;
    for (double x : p) m += x;
    m /= static_cast<double>(resamples);
    double v = 0;
    for (double x : p) v += (x - m) * (x - m);
    return {std::sqrt(v / static_cast<double>(resamples - 1)), m - estimate};
}

Eigen::MatrixXd gaussian_smoother(Eigen::Index n, double sigma_bins) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double z = static_cast<double>(i - j) / sigma_bins;
            k(i, j) = std::exp(-0.5 * z * z);
        }
        k.col(j) /= k.col(j).sum();
    }
    return k;
}

/// Resolution systematic: the purity shift produced by applying the
/// instrument kernel (widths in bins) once more to the measured map.
double reblur_systematic(const Eigen::MatrixXd& counts, double sigma_rows, double sigma_cols) {
    Eigen::MatrixXd c = counts.cwiseMax(0.0);
    Eigen::MatrixXd b = gaussian_smoother(c.rows(), sigma_rows) * c * gaussian_smoother(c.cols(), sigma_cols).transpose();
    return std::abs(schmidt_from_counts(b).purity - schmidt_from_counts(c).purity);
}

double quadrature(std::initializer_list<double> xs) {
    double s = 0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
}

TechniqueReport run_mono(const RunConfig& c, const JointAmplitude& amp, std::uint64_t seed, const std::string& out) {
    TechniqueReport r;
    r.reconstructs_jsi = true;
    JointIntensity jsi = amp.intensity();
    MonoScanSpec spec = c.monochromator.spec;
    if (c.monochromator.auto_range) {
        std::tie(spec.signal_lo_nm, spec.signal_hi_nm) = nm_range(jsi, Arm::signal, c.monochromator.range_sigmas, spec.step_nm);
        std::tie(spec.idler_lo_nm, spec.idler_hi_nm) = nm_range(jsi, Arm::idler, c.monochromator.range_sigmas, spec.step_nm);
    }
    MonoScanResult m = run_mono_scan(jsi, spec, c.monochromator.detector, c.monochromator.detector, seed);
    PurityEstimate p = estimate_purity_mono(m.counts, seed, 200);
    const double pb = spec.passband_fwhm_nm / fwhm_per_sigma / spec.step_nm;
    const double blur = std::sqrt(pb * pb + 1.0 / 12);
    r.purity = p.purity;
    r.purity_error = quadrature({p.error, p.bias, reblur_systematic(m.counts.counts, blur, blur)});
    r.schmidt_number = p.schmidt_number;
    r.peak_rate = m.peak_rate;
    r.acquisition_time_s = m.acquisition_time_s;
    r.time_per_bin_s = spec.dwell_s;
    r.resolution_signal_nm = r.resolution_idler_nm = spec.step_nm;
    r.raw_snr = m.raw_snr;
    r.scaled_snr = scaled_snr_binned(m.raw_snr, spec.dwell_s, spec.step_nm, spec.step_nm);
    r.scaled_snr_unit = "1/(s nm^2)";
    r.warnings = m.warnings;
    if (!out.empty()) {
        write_file(out, "monochromator_jsi.csv", hist_csv(m.counts));
        r.jsi_path = "monochromator_jsi.csv";
    }
    return r;
}

TechniqueReport run_fourier(const RunConfig& c, const JointAmplitude& amp, std::uint64_t seed, const std::string& out) {
    TechniqueReport r;
    const auto& fc = c.fourier;
    JointIntensity jsi = amp.intensity();
    std::vector<DiagonalScanResult> runs(fc.repeats);
    for (std::size_t k = 0; k < fc.repeats; ++k) {
        DiagonalScanOptions o;
        o.transform.hann = fc.hann;
        o.pairs_per_point = fc.pairs_per_point;
        o.rng_seed = seed + k;
        runs[k] = diagonal_scan_purity(jsi, fc.spec, o);
    }
    double mean = 0;
    for (const auto& x : runs) mean += x.purity;
    mean /= static_cast<double>(runs.size());
    double v = 0;
    for (const auto& x : runs) v += (x.purity - mean) * (x.purity - mean);
    const auto& first = runs.front();
    r.purity = first.purity;
    r.purity_error = std::sqrt(v / static_cast<double>(runs.size() - 1));
    r.schmidt_number = 1 / first.purity;
    double peak = std::max(first.scan_sum.intensity.maxCoeff(), first.scan_difference.intensity.maxCoeff());
    r.raw_snr = std::sqrt(peak);
    r.peak_rate = peak / fc.dwell_s;
    r.time_per_bin_s = fc.dwell_s;
    r.acquisition_time_s = static_cast<double>(first.points) * fc.dwell_s;
    r.scaled_snr = scaled_snr_per_time(*r.raw_snr, fc.dwell_s);
    r.scaled_snr_unit = "1/s";
    r.warnings = first.warnings;
    if (!out.empty()) {
        std::ostringstream os;
        os << "tau_fs,sum_scan,difference_scan\n";
        for (Eigen::Index k = 0; k < first.scan_sum.tau_s_fs.size(); ++k)
            os << fmt(first.scan_sum.tau_s_fs[k]) << ',' << first.scan_sum.intensity(k, 0) << ','
               << first.scan_difference.intensity(k, 0) << '\n';
        write_file(out, "fourier_scans.csv", os.str());
    }
    return r;
}

TechniqueReport run_fibre(const RunConfig& c, const JointAmplitude& amp, std::uint64_t seed, const std::string& out) {
    TechniqueReport r;
    r.reconstructs_jsi = true;
    const auto& fc = c.fibre;
    FibreMeasurement m = run_fibre_measurement(amp.intensity(), fc.spec, seed);
    if (!(m.coincidences > 0)) throw Error(Errc::insufficient_data, "no coincidences recorded");
    const auto& s = fc.spec;
    double kernel = 0;
    Histogram2D h = m.time_hist;
    if (fc.deconvolve) {
        kernel = std::sqrt(s.detector_a.jitter_fwhm_ps * s.detector_a.jitter_fwhm_ps +
                           s.tagger_jitter_fwhm_ps * s.tagger_jitter_fwhm_ps +
                           s.reference_jitter_fwhm_ps * s.reference_jitter_fwhm_ps);
        if (kernel > 0) h = richardson_lucy_2d(h, kernel, fc.rl_iterations);
    }
    SchmidtResult sr = schmidt_from_counts(h.counts);
    r.purity = sr.purity;
    r.schmidt_number = sr.schmidt_number;
    BootstrapSpread bs = bootstrap_error(m.time_hist, sr.purity, seed, fc.resamples, kernel, fc.rl_iterations);
    double sys = 0;
    if (kernel == 0) {
        double ja = s.detector_a.jitter_fwhm_ps, jb = s.detector_b.jitter_fwhm_ps, jr = s.reference_jitter_fwhm_ps,
               jt = s.tagger_jitter_fwhm_ps;
        const double bin = static_cast<double>(s.tagger_bin_ps);
        auto width = [&](double jd) {
            double w = std::sqrt(jd * jd + jr * jr + 2 * jt * jt) / fwhm_per_sigma / bin;
            return std::sqrt(w * w + 1.0 / 12);
        };
        sys = reblur_systematic(m.time_hist.counts, width(ja), width(jb));
    }
    r.purity_error = quadrature({bs.std, bs.bias, sys});
    const double res = static_cast<double>(s.tagger_bin_ps) / std::abs(s.fibre.dispersion_ps_nm_km * s.fibre.length_km);
    r.resolution_signal_nm = r.resolution_idler_nm = res;
    r.acquisition_time_s = m.coincidences / fc.pair_rate;
    r.time_per_bin_s = *r.acquisition_time_s / static_cast<double>(m.time_hist.counts.size());
    r.peak_rate = fc.pair_rate;
    r.raw_snr = std::sqrt(m.time_hist.counts.maxCoeff());
    r.scaled_snr = scaled_snr_binned(*r.raw_snr, *r.time_per_bin_s, res, res);
    r.scaled_snr_unit = "1/(s nm^2)";
    r.warnings = m.warnings;
    if (!out.empty()) {
        Histogram2D nm = fc.deconvolve ? time_to_wavelength(h, s.fibre, s.idler_path_delay_ps) : m.nm_hist;
        write_file(out, "fibre_jsi.csv", hist_csv(nm));
        write_file(out, "fibre_time.csv", hist_csv(m.time_hist));
        r.jsi_path = "fibre_jsi.csv";
    }
    return r;
}

TechniqueReport run_stimulated(const RunConfig& c, const JointAmplitude& amp, std::uint64_t seed, const std::string& out) {
    TechniqueReport r;
    r.reconstructs_jsi = true;
    const auto& sc = c.stimulated;
    JointIntensity jsi = amp.intensity();
    SeedScanSpec spec = sc.spec;
    if (sc.auto_range) {
        std::tie(spec.signal_lo_nm, spec.signal_hi_nm) =
            nm_range(jsi, Arm::signal, sc.range_sigmas, spec.spectrometer_resolution_nm);
        std::tie(spec.idler_lo_nm, spec.idler_hi_nm) = nm_range(jsi, Arm::idler, sc.range_sigmas, spec.scan_step_nm);
    }
    StimulatedScanResult m = run_stimulated_scan(jsi, spec, seed);
    PurityEstimate p = estimate_purity_stimulated(m, seed, sc.resamples);
    const double pix = std::sqrt(1 / (fwhm_per_sigma * fwhm_per_sigma) + 1.0 / 12);
    const double idler_nm = 0.5 * (spec.idler_lo_nm + spec.idler_hi_nm);
    const double seed_nm = idler_nm * idler_nm * spec.seed_bandwidth_ghz * 1e9 / (speed_of_light * 1e9) / fwhm_per_sigma;
    const double seed_bins = std::sqrt(std::pow(seed_nm / spec.scan_step_nm, 2) + 1.0 / 12);
    r.purity = p.purity;
    r.purity_error = quadrature({p.error, p.bias, reblur_systematic(m.map.counts, pix, seed_bins)});
    r.schmidt_number = p.schmidt_number;
    r.acquisition_time_s = m.acquisition_time_s;
    r.time_per_bin_s = spec.time_per_bin_s;
    r.resolution_signal_nm = spec.spectrometer_resolution_nm;
    r.resolution_idler_nm = spec.scan_step_nm;
    r.raw_snr = finite(m.raw_snr);
    if (r.raw_snr)
        r.scaled_snr = scaled_snr_binned(*r.raw_snr, spec.time_per_bin_s, spec.spectrometer_resolution_nm, spec.scan_step_nm);
    r.scaled_snr_unit = "1/(s nm^2)";
    r.warnings = m.warnings;
    r.warnings.push_back("joint spectral phase not measured by this implementation");
    if (!out.empty()) {
        write_file(out, "stimulated_jsi.csv", hist_csv(m.map));
        json meta;
        meta["seed_bandwidth_ghz"] = spec.seed_bandwidth_ghz;
        meta["scan_step_nm"] = spec.scan_step_nm;
        meta["spectrometer_resolution_nm"] = spec.spectrometer_resolution_nm;
        meta["seed_powers"] = spec.seed_powers;
        meta["seed_points"] = m.seed_points;
        meta["pixels"] = m.pixels;
        meta["nominal_acquisition_time_s"] = m.acquisition_time_s;
        meta["nominal_full_scan_wall_clock_s"] = 900;
        write_file(out, "stimulated_meta.json", meta.dump(2) + "\n");
        r.jsi_path = "stimulated_jsi.csv";
    }
    return r;
}

TechniqueReport run_g2(const RunConfig& c, const JointAmplitude& amp, std::uint64_t seed, const std::string& out) {
    TechniqueReport r;
    r.phase_sensitive = true;
    const auto& gc = c.g2;
    G2Result g = g2_from_amplitude(amp, gc.mean_pairs, gc.pulses, seed);
    r.purity = g.implied_purity;
    r.purity_error = g.std_error;
    r.schmidt_number = finite(g.implied_K);
    const double total = static_cast<double>(gc.pulses) / gc.rep_rate_hz;
    r.acquisition_time_s = total;
    r.peak_rate = static_cast<double>(g.coincidences) / total;
    r.raw_snr = std::sqrt(static_cast<double>(g.coincidences));
    r.scaled_snr = scaled_snr_per_time(*r.raw_snr, total);
    r.scaled_snr_unit = "1/s";
    r.warnings = g.warnings;
    if (!out.empty()) {
        json j;
        j["g2"] = g.g2;
        j["std_error"] = g.std_error;
        j["implied_K"] = finite(g.implied_K) ? json(g.implied_K) : json(nullptr);
        j["implied_purity"] = g.implied_purity;
        j["purity_out_of_range"] = g.purity_out_of_range;
        j["pulses"] = g.pulses;
        j["singles_1"] = g.singles_1;
        j["singles_2"] = g.singles_2;
        j["coincidences"] = g.coincidences;
        write_file(out, "g2.json", j.dump(2) + "\n");
    }
    return r;
}

TechniqueReport run_hom(const RunConfig& c, const JointAmplitude& amp, std::uint64_t seed, const std::string& out) {
    TechniqueReport r;
    r.phase_sensitive = true;
    const auto& hc = c.hom;
    Eigen::VectorXd delays = hom_delays(amp, hc.points, hc.range_widths);
    HomScanResult h = hom_visibility(amp, amp, delays, hc.fourfolds_per_point, seed);
    r.purity = h.visibility;
    r.purity_error = h.visibility_error;
    if (h.visibility > 0) r.schmidt_number = 1 / h.visibility;
    const double total = static_cast<double>(hc.points) * hc.dwell_s;
    r.acquisition_time_s = total;
    double peak = h.fourfold_counts.maxCoeff();
    r.peak_rate = peak / hc.dwell_s;
    r.raw_snr = std::sqrt(peak);
    r.scaled_snr = scaled_snr_per_time(*r.raw_snr, total);
    r.scaled_snr_unit = "1/s";
    r.warnings = h.warnings;
    if (!out.empty()) {
        std::ostringstream os;
        os << "delay_fs,fourfolds\n";
        for (Eigen::Index k = 0; k < h.delays_fs.size(); ++k)
            os << fmt(h.delays_fs[k]) << ',' << h.fourfold_counts[k] << '\n';
        write_file(out, "hom_scan.csv", os.str());
    }
    return r;
}

json opt(const std::optional<double>& x) { return x && std::isfinite(*x) ? json(*x) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

std::string cell(const std::optional<double>& x) { return x ? fmt(*x) : "N/A"; }

}  // namespace

bool SuiteReport::all_ok() const {
    return std::all_of(techniques.begin(), techniques.end(), [](const TechniqueReport& t) { return t.ok; });
}

double scaled_snr_binned(double raw_snr, double time_per_bin_s, double res_s, double res_i) {
    if (!(time_per_bin_s > 0) || !(res_s > 0) || !(res_i > 0))
        throw Error(Errc::invalid_input, "time per bin and resolutions must be positive");
    return raw_snr / (time_per_bin_s * res_s * res_i);
}

double scaled_snr_per_time(double raw_snr, double time_s) {
    if (!(time_s > 0)) throw Error(Errc::invalid_input, "time must be positive");
    return raw_snr / time_s;
}

std::uint64_t technique_seed(std::uint64_t global_seed, const std::string& id) {
    const auto& ids = technique_ids();
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw Error(Errc::config, "unknown technique '" + id + "'");
    Rng rng(global_seed, 1000 + static_cast<std::uint64_t>(it - ids.begin()));
    return rng();
}

TruthReport compute_truth(const JointAmplitude& amp) {
    TruthReport t;
    SchmidtResult s = schmidt_decompose(amp, false);
    t.schmidt_number = s.schmidt_number;
    t.purity = s.purity;
    t.flat_phase_purity = schmidt_from_intensity(amp.intensity()).purity;
    t.signal_center_nm = nm_from_omega(amp.grid().center_signal());
    t.idler_center_nm = nm_from_omega(amp.grid().center_idler());
    t.grid_points = amp.grid().ns();
    return t;
}

TechniqueReport run_technique(const std::string& id, const RunConfig& c, const JointAmplitude& amp,
                              const std::string& out_dir) {
    const std::uint64_t seed = technique_seed(c.seed.value_or(0), id);
    TechniqueReport r;
    try {
        if (id == "monochromator") r = run_mono(c, amp, seed, out_dir);
        else if (id == "fourier") r = run_fourier(c, amp, seed, out_dir);
        else if (id == "fibre") r = run_fibre(c, amp, seed, out_dir);
        else if (id == "stimulated") r = run_stimulated(c, amp, seed, out_dir);
        else if (id == "g2") r = run_g2(c, amp, seed, out_dir);
        else r = run_hom(c, amp, seed, out_dir);
        r.ok = true;
    } catch (const Error& e) {
        r = TechniqueReport{};
        r.ok = false;
        r.error = e.what();
    }
    r.id = id;
    r.phase_sensitive = id == "g2" || id == "hom";
    r.reconstructs_jsi = id == "monochromator" || id == "fourier" || id == "fibre" || id == "stimulated";
    return r;
}

SuiteReport run_suite(const RunConfig& c, const std::string& out_dir) {
    validate(c);
    JointAmplitude amp = build_source(c.source);
    SuiteReport r;
    r.seed = *c.seed;
    r.truth = compute_truth(amp);
    for (const auto& id : c.enabled_techniques()) r.techniques.push_back(run_technique(id, c, amp, out_dir));
    if (!out_dir.empty()) {
        std::ostringstream os;
        write_jsi_csv(os, amp.intensity());
        write_file(out_dir, "truth_jsi.csv", os.str());
        write_file(out_dir, "report.json", render_json(r));
        write_file(out_dir, "report.csv", render_csv(r));
        write_file(out_dir, "report.txt", render_table(r));
    }
    return r;
}

std::string render_json(const SuiteReport& r) {
    json j;
    j["seed"] = r.seed;
    json t;
    t["schmidt_number"] = r.truth.schmidt_number;
    t["purity"] = r.truth.purity;
    t["flat_phase_purity"] = r.truth.flat_phase_purity;
    t["signal_center_nm"] = r.truth.signal_center_nm;
    t["idler_center_nm"] = r.truth.idler_center_nm;
    t["grid_points"] = r.truth.grid_points;
    j["truth"] = t;
    json arr = json::array();
    for (const auto& x : r.techniques) {
        json e;
        e["id"] = x.id;
        e["ok"] = x.ok;
        e["error"] = x.ok ? json(nullptr) : json(x.error);
        e["reconstructs_jsi"] = x.reconstructs_jsi;
        e["phase_sensitive"] = x.phase_sensitive;
        e["purity"] = opt(x.purity);
        e["purity_error"] = opt(x.purity_error);
        e["schmidt_number"] = opt(x.schmidt_number);
        e["jsi_path"] = x.jsi_path ? json(*x.jsi_path) : json(nullptr);
        e["peak_rate"] = opt(x.peak_rate);
        e["acquisition_time_s"] = opt(x.acquisition_time_s);
        e["time_per_bin_s"] = opt(x.time_per_bin_s);
        e["resolution_signal_nm"] = opt(x.resolution_signal_nm);
        e["resolution_idler_nm"] = opt(x.resolution_idler_nm);
        e["raw_snr"] = opt(x.raw_snr);
        e["scaled_snr"] = opt(x.scaled_snr);
        e["scaled_snr_unit"] = x.scaled_snr_unit;
        e["warnings"] = x.warnings;
        arr.push_back(e);
    }
    j["techniques"] = arr;
    return j.dump(2) + "\n";
}

SuiteReport parse_report_json(const std::string& text) {
    SuiteReport r;
    try {
        json j = json::parse(text);
        r.seed = j.at("seed").get<std::uint64_t>();
        const json& t = j.at("truth");
        r.truth.schmidt_number = t.at("schmidt_number").get<double>();
        r.truth.purity = t.at("purity").get<double>();
        r.truth.flat_phase_purity = t.at("flat_phase_purity").get<double>();
        r.truth.signal_center_nm = t.at("signal_center_nm").get<double>();
        r.truth.idler_center_nm = t.at("idler_center_nm").get<double>();
        r.truth.grid_points = t.at("grid_points").get<std::size_t>();
        for (const auto& e : j.at("techniques")) {
            TechniqueReport x;
            x.id = e.at("id").get<std::string>();
            x.ok = e.at("ok").get<bool>();
            if (!e.at("error").is_null()) x.error = e.at("error").get<std::string>();
            x.reconstructs_jsi = e.at("reconstructs_jsi").get<bool>();
            x.phase_sensitive = e.at("phase_sensitive").get<bool>();
            x.purity = get_opt(e, "purity");
            x.purity_error = get_opt(e, "purity_error");
            x.schmidt_number = get_opt(e, "schmidt_number");
            if (!e.at("jsi_path").is_null()) x.jsi_path = e.at("jsi_path").get<std::string>();
            x.peak_rate = get_opt(e, "peak_rate");
            x.acquisition_time_s = get_opt(e, "acquisition_time_s");
            x.time_per_bin_s = get_opt(e, "time_per_bin_s");
            x.resolution_signal_nm = get_opt(e, "resolution_signal_nm");
            x.resolution_idler_nm = get_opt(e, "resolution_idler_nm");
            x.raw_snr = get_opt(e, "raw_snr");
            x.scaled_snr = get_opt(e, "scaled_snr");
            x.scaled_snr_unit = e.at("scaled_snr_unit").get<std::string>();
            x.warnings = e.at("warnings").get<std::vector<std::string>>();
            r.techniques.push_back(x);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_input, std::string("malformed report JSON: ") + e.what());
    }
    return r;
}

std::string render_csv(const SuiteReport& r) {
    std::ostringstream os;
    os << "technique,status,purity,purity_error,schmidt_number,peak_rate,acquisition_time_s,time_per_bin_s,"
          "resolution_signal_nm,resolution_idler_nm,raw_snr,scaled_snr,scaled_snr_unit,jsi_path\n";
    for (const auto& x : r.techniques) {
        os << x.id << ',' << (x.ok ? "ok" : "error") << ',' << cell(x.purity) << ',' << cell(x.purity_error) << ','
           << cell(x.schmidt_number) << ',' << cell(x.peak_rate) << ',' << cell(x.acquisition_time_s) << ','
           << cell(x.time_per_bin_s) << ',' << cell(x.resolution_signal_nm) << ',' << cell(x.resolution_idler_nm) << ','
           << cell(x.raw_snr) << ',' << cell(x.scaled_snr) << ',' << x.scaled_snr_unit << ','
           << x.jsi_path.value_or("N/A") << '\n';
    }
    os << "truth,ok," << fmt(r.truth.purity) << ",0," << fmt(r.truth.schmidt_number)
       << ",N/A,N/A,N/A,N/A,N/A,N/A,N/A,,truth_jsi.csv\n";
    os << "truth_flat_phase,ok," << fmt(r.truth.flat_phase_purity) << ",0," << fmt(1 / r.truth.flat_phase_purity)
       << ",N/A,N/A,N/A,N/A,N/A,N/A,N/A,,truth_jsi.csv\n";
    return os.str();
}

std::string render_table(const SuiteReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"technique", "purity", "+-", "K", "peak rate", "time (s)", "time/bin (s)", "resolution (nm)",
                    "raw SNR", "scaled SNR", "unit"});
    for (const auto& x : r.techniques) {
        if (!x.ok) {
            rows.push_back({x.id, "error: " + x.error, "", "", "", "", "", "", "", "", ""});
            continue;
        }
        std::string res = x.resolution_signal_nm ? fmt(*x.resolution_signal_nm) + " x " + fmt(*x.resolution_idler_nm) : "N/A";
        rows.push_back({x.id, cell(x.purity), cell(x.purity_error), cell(x.schmidt_number), cell(x.peak_rate),
                        cell(x.acquisition_time_s), cell(x.time_per_bin_s), res, cell(x.raw_snr), cell(x.scaled_snr),
                        x.scaled_snr_unit});
    }
    rows.push_back({"truth", fmt(r.truth.purity), "", fmt(r.truth.schmidt_number), "", "", "", "", "", "", ""});
    rows.push_back({"truth (|f| only)", fmt(r.truth.flat_phase_purity), "", fmt(1 / r.truth.flat_phase_purity), "", "", "",
                    "", "", "", ""});
    std::vector<std::size_t> w(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t k = 0; k < row.size(); ++k) w[k] = std::max(w[k], row[k].size());
    std::ostringstream os;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) line += "  ";
            line += row[k] + std::string(w[k] - row[k].size(), ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        os << line << '\n';
    }
    return os.str();
}

std::string render(const SuiteReport& r, const std::string& format) {
    if (format == "json") return render_json(r);
    if (format == "csv") return render_csv(r);
    if (format == "table") return render_table(r);
    throw Error(Errc::config, "unknown format '" + format + "'");
}

}  // namespace jsi
