#include "jsi/fibre.hpp"

#include <algorithm>
#include <cmath>

#include "jsi/error.hpp"
#include "jsi/fit.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"
#include "jsi/units.hpp"

namespace jsi {

namespace {
constexpr std::size_t kBlock = 1024;

double slope_ps_per_nm(const FibreSpec& f) { return f.dispersion_ps_nm_km * f.length_km; }

struct DelayStats {
    double mean = 0;
    double stddev = 0;
};

DelayStats delay_stats(const Spectrum1D& s, const FibreSpec& f, double extra) {
    double w = 0, m1 = 0, m2 = 0;
    for (Eigen::Index k = 0; k < s.nu.size(); ++k) {
        double t = wavelength_to_delay(nm_from_omega(s.center + s.nu[k]), f) + extra;
        w += s.density[k];
        m1 += s.density[k] * t;
        m2 += s.density[k] * t * t;
    }
    if (!(w > 0)) throw Error(Errc::degenerate_input, "empty marginal");
    m1 /= w;
    return {m1, std::sqrt(std::max(0.0, m2 / w - m1 * m1))};
}

Eigen::VectorXd axis_to_nm(const Eigen::VectorXd& edges, const FibreSpec& f, double extra) {
    Eigen::VectorXd out(edges.size());
    for (Eigen::Index k = 0; k < edges.size(); ++k) out[k] = delay_to_wavelength(edges[k] - extra, f);
    return out;
}

Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& centers, double sigma) {
    const Eigen::Index n = centers.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double z = (centers[i] - centers[j]) / sigma;
            k(i, j) = std::exp(-0.5 * z * z);
        }
        k.col(j) /= k.col(j).sum();
    }
    return k;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
}  // namespace

void validate(const FibreSpec& f) {
    if (!(f.length_km > 0)) throw Error(Errc::invalid_input, "fibre length must be positive");
    if (!std::isfinite(f.dispersion_ps_nm_km) || f.dispersion_ps_nm_km == 0)
        throw Error(Errc::invalid_input, "fibre dispersion must be non-zero");
    if (!(f.reference_wavelength_nm > 0)) throw Error(Errc::invalid_input, "reference wavelength must be positive");
    if (!(f.loss_db_per_km >= 0)) throw Error(Errc::invalid_input, "fibre loss must be non-negative");
    if (!std::isfinite(f.fixed_offset_ps)) throw Error(Errc::invalid_input, "fixed offset must be finite");
}

double wavelength_to_delay(double wavelength_nm, const FibreSpec& f) {
    return slope_ps_per_nm(f) * (wavelength_nm - f.reference_wavelength_nm) + f.fixed_offset_ps;
}

double delay_to_wavelength(double delay_ps, const FibreSpec& f) {
    return f.reference_wavelength_nm + (delay_ps - f.fixed_offset_ps) / slope_ps_per_nm(f);
}

Eigen::VectorXd Histogram1D::centers() const {
    Eigen::Index n = edges.size() - 1;
    return 0.5 * (edges.head(n) + edges.tail(n));
}

Histogram2D time_to_wavelength(const Histogram2D& th, const FibreSpec& f, double idler_path_delay_ps) {
    validate(f);
    Histogram2D h;
    h.x_unit = h.y_unit = "nm";
    h.x_edges = axis_to_nm(th.x_edges, f, 0.0);
    h.y_edges = axis_to_nm(th.y_edges, f, idler_path_delay_ps);
    h.counts = th.counts;
    if (slope_ps_per_nm(f) < 0) {
        h.x_edges.reverseInPlace();
        h.y_edges.reverseInPlace();
        h.counts = h.counts.colwise().reverse().eval();
        h.counts = h.counts.rowwise().reverse().eval();
    }
    return h;
}

FibreMeasurement run_fibre_measurement(const JointIntensity& jsi, const FibreMeasurementSpec& spec,
                                       std::uint64_t rng_seed) {
    validate(spec.fibre);
    validate(spec.detector_a);
    validate(spec.detector_b);
    if (spec.tagger_bin_ps <= 0) throw Error(Errc::invalid_input, "tagger bin must be positive");
    if (spec.n_pairs == 0) throw Error(Errc::invalid_input, "at least one pair is required");
    if (spec.pulse_spacing == 0) throw Error(Errc::invalid_input, "pulse spacing must be positive");
    const auto& f = spec.fibre;

    FibreMeasurement out;
    auto ms = delay_stats(marginal(jsi, Arm::signal), f, 0.0);
    auto mi = delay_stats(marginal(jsi, Arm::idler), f, spec.idler_path_delay_ps);
    const std::int64_t bin = spec.tagger_bin_ps;
    out.signal_center_ps = std::llround(ms.mean / static_cast<double>(bin)) * bin;
    out.idler_center_ps = std::llround(mi.mean / static_cast<double>(bin)) * bin;

    std::int64_t range = spec.range_ps;
    if (range == 0) {
        auto blur = [&](const DetectorSpec& d) {
            double j2 = d.jitter_fwhm_ps * d.jitter_fwhm_ps + spec.tagger_jitter_fwhm_ps * spec.tagger_jitter_fwhm_ps +
                        spec.reference_jitter_fwhm_ps * spec.reference_jitter_fwhm_ps;
            return j2 / (fwhm_per_sigma * fwhm_per_sigma);
        };
        double ss = std::sqrt(ms.stddev * ms.stddev + blur(spec.detector_a));
        double si = std::sqrt(mi.stddev * mi.stddev + blur(spec.detector_b));
        double half = 5 * std::max(ss, si);
        range = 2 * std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(half / static_cast<double>(bin)))) * bin;
    }
    if (spec.routing == Routing::beamsplitter && std::abs(spec.idler_path_delay_ps) < static_cast<double>(range))
        out.warnings.push_back("swapped-arm events overlap the histogram window; increase the idler path delay");

    auto pairs = sample_pairs(jsi, spec.n_pairs, rng_seed);
    const double transmission = std::pow(10.0, -f.loss_db_per_km * f.length_km / 10.0);

    // Each pair contributes up to two arrivals; slots for lost photons keep channel -1.
    std::vector<PhotonArrival> slots(2 * pairs.size());
    std::size_t blocks = (pairs.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t blk) {
        Rng loss(rng_seed, streams::fibre_loss, blk);
        Rng route(rng_seed, streams::routing, blk);
        std::size_t end = std::min(pairs.size(), (blk + 1) * kBlock);
        for (std::size_t k = blk * kBlock; k < end; ++k) {
            std::uint64_t pulse = k * spec.pulse_spacing;
            double ds = wavelength_to_delay(pairs[k].first, f);
            double di = wavelength_to_delay(pairs[k].second, f) + spec.idler_path_delay_ps;
            bool keep_s = transmission >= 1 || loss.bernoulli(transmission);
            bool keep_i = transmission >= 1 || loss.bernoulli(transmission);
            int cs = 1, ci = 2;
            if (spec.routing == Routing::beamsplitter) {
                cs = route.bernoulli(0.5) ? 1 : 2;
                ci = route.bernoulli(0.5) ? 1 : 2;
            }
            slots[2 * k] = {pulse, keep_s ? cs : -1, ds};
            slots[2 * k + 1] = {pulse, keep_i ? ci : -1, di};
        }
    });
    std::vector<PhotonArrival> events;
    events.reserve(slots.size());
    for (const auto& e : slots)
        if (e.channel > 0) events.push_back(e);

    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, spec.detector_a, spec.detector_b};
    setup.rep_rate_mhz = spec.rep_rate_mhz;
    setup.reference_jitter_fwhm_ps = spec.reference_jitter_fwhm_ps;
    setup.tagger_jitter_fwhm_ps = spec.tagger_jitter_fwhm_ps;
    setup.shared_reference = spec.shared_reference;
    auto stream = apply_detection(events, setup, rng_seed);

    bool has_a = false, has_b = false;
    for (const auto& t : stream) {
        has_a |= t.channel == 1;
        has_b |= t.channel == 2;
    }
    if (has_a && has_b) {
        out.time_hist = build_timing_histogram(stream, 0, 1, 2, bin, range, out.signal_center_ps, out.idler_center_ps);
        if (spec.routing == Routing::beamsplitter)
            out.time_hist.counts +=
                build_timing_histogram(stream, 0, 2, 1, bin, range, out.signal_center_ps, out.idler_center_ps).counts;
    } else {
        const std::int64_t n = range / bin;
        out.time_hist.x_edges = Eigen::VectorXd::LinSpaced(n + 1, static_cast<double>(out.signal_center_ps - range / 2),
                                                           static_cast<double>(out.signal_center_ps + range / 2));
        out.time_hist.y_edges = Eigen::VectorXd::LinSpaced(n + 1, static_cast<double>(out.idler_center_ps - range / 2),
                                                           static_cast<double>(out.idler_center_ps + range / 2));
        out.time_hist.counts = Eigen::MatrixXd::Zero(n, n);
    }
    out.coincidences = out.time_hist.total();
    if (out.coincidences < 100)
        out.warnings.push_back("insufficient coincidences: " + std::to_string(static_cast<long long>(out.coincidences)));
    out.nm_hist = time_to_wavelength(out.time_hist, f, spec.idler_path_delay_ps);
    return out;
}

Histogram2D richardson_lucy_2d(const Histogram2D& hist, double kernel_fwhm, int iterations, double stop_tol,
                               RichardsonLucyInfo* info) {
    if (!(kernel_fwhm > 0)) throw Error(Errc::invalid_input, "kernel FWHM must be positive");
    if (iterations < 1) throw Error(Errc::invalid_input, "at least one iteration is required");
    if (!(stop_tol >= 0)) throw Error(Errc::invalid_input, "stop tolerance must be non-negative");
    if ((hist.counts.array() < 0).any()) throw Error(Errc::invalid_input, "negative histogram counts");
    const double total = hist.counts.sum();
    if (!(total > 0)) throw Error(Errc::degenerate_input, "empty histogram");
    const double sigma = kernel_fwhm / fwhm_per_sigma;
    const Eigen::MatrixXd kx = kernel_matrix(hist.x_centers(), sigma);
    const Eigen::MatrixXd ky = kernel_matrix(hist.y_centers(), sigma);
    const Eigen::MatrixXd& d = hist.counts;

    Eigen::MatrixXd u = d;
    RichardsonLucyInfo local;
    for (int it = 0; it < iterations; ++it) {
        Eigen::MatrixXd b = kx * u * ky.transpose();
        Eigen::MatrixXd ratio = (b.array() > 0).select(d.array() / b.array(), 0.0);
        Eigen::MatrixXd next = u.array() * (kx.transpose() * ratio * ky).array();
        local.iterations = it + 1;
        local.last_update = (next - u).cwiseAbs().sum() / std::max(u.sum(), 1e-300);
        u = std::move(next);
        if (local.last_update < stop_tol) break;
    }
    if (info) *info = local;
    Histogram2D out = hist;
    out.counts = u;
    return out;
}

Eigen::VectorXd jitter_forward_model(const SampledSpectrum& known, const Eigen::VectorXd& edges, const FibreSpec& f,
                                     double fwhm_ps, double shift_ps) {
    const Eigen::Index nb = edges.size() - 1;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nb);
    const double sigma = fwhm_ps / fwhm_per_sigma;
    for (Eigen::Index j = 0; j < known.wavelength_nm.size(); ++j) {
        double p = known.power[j];
        if (p == 0) continue;
        double t = wavelength_to_delay(known.wavelength_nm[j], f) + shift_ps;
        for (Eigen::Index k = 0; k < nb; ++k) {
            if (sigma > 0) {
                m[k] += p * (norm_cdf((edges[k + 1] - t) / sigma) - norm_cdf((edges[k] - t) / sigma));
            } else if (t >= edges[k] && t < edges[k + 1]) {
                m[k] += p;
            }
        }
    }
    return m;
}

JitterCalibration calibrate_jitter(const SampledSpectrum& known, const Eigen::VectorXd& edges,
                                   const Eigen::VectorXd& counts, const FibreSpec& f, double max_fwhm_ps) {
    validate(f);
    if (known.wavelength_nm.size() < 2 || known.power.size() != known.wavelength_nm.size())
        throw Error(Errc::invalid_input, "known spectrum needs matching wavelength and power samples");
    if ((known.power.array() < 0).any()) throw Error(Errc::invalid_input, "negative spectral power");
    if (edges.size() != counts.size() + 1 || counts.size() < 3)
        throw Error(Errc::invalid_input, "histogram edges must have one more entry than counts");
    const double peak = counts.maxCoeff();
    if (!(peak > 0)) throw Error(Errc::degenerate_input, "empty timing histogram");
    if (!(known.power.sum() > 0)) throw Error(Errc::degenerate_input, "known spectrum has no power");

    const Eigen::VectorXd c = 0.5 * (edges.head(counts.size()) + edges.tail(counts.size()));
    const double measured_centroid = counts.dot(c) / counts.sum();
    double model_centroid = 0;
    for (Eigen::Index j = 0; j < known.power.size(); ++j)
        model_centroid += known.power[j] * wavelength_to_delay(known.wavelength_nm[j], f);
    model_centroid /= known.power.sum();
    const double shift = measured_centroid - model_centroid;

    if (max_fwhm_ps <= 0) max_fwhm_ps = 0.5 * (edges[edges.size() - 1] - edges[0]);
    auto residual = [&](double fwhm, double* scale) {
        Eigen::VectorXd m = jitter_forward_model(known, edges, f, fwhm, shift);
        double mm = m.squaredNorm();
        double a = mm > 0 ? m.dot(counts) / mm : 0.0;
        if (scale) *scale = a;
        return std::sqrt((counts - a * m).squaredNorm() / static_cast<double>(counts.size())) / peak;
    };
    double best = golden_section([&](double x) { return residual(x, nullptr); }, 0.0, max_fwhm_ps,
                                 1e-4 * max_fwhm_ps);
    if (best > 0.99 * max_fwhm_ps)
        throw Error(Errc::calibration, "jitter fit ran into the search bound; the spectrum does not explain the data");
    JitterCalibration out;
    out.fwhm_ps = best;
    out.shift_ps = shift;
    out.rms_residual = residual(best, &out.scale);
    return out;
}

Histogram1D build_timing_histogram_1d(const TimeTagStream& stream, int reference_channel, int channel,
                                      std::int64_t bin_width_ps, std::int64_t range_ps, std::int64_t center_ps) {
    if (bin_width_ps <= 0) throw Error(Errc::invalid_input, "bin width must be positive");
    if (range_ps <= 0 || range_ps % bin_width_ps != 0)
        throw Error(Errc::alignment, "histogram range must be a positive multiple of the bin width");
    if (range_ps % 2 != 0) throw Error(Errc::alignment, "histogram range must be an even number of ps");
    const std::int64_t n = range_ps / bin_width_ps;
    const std::int64_t x0 = center_ps - range_ps / 2;
    // Validates the channels once before the per-bin queries.
    find_coincidences(stream, {{reference_channel, channel}, {0, 0}, bin_width_ps});
    Histogram1D h;
    h.edges.resize(n + 1);
    for (std::int64_t k = 0; k <= n; ++k) h.edges[k] = static_cast<double>(x0 + k * bin_width_ps);
    h.counts = Eigen::VectorXd::Zero(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t a) {
        CoincidenceQuery q{{reference_channel, channel}, {0, -(x0 + static_cast<std::int64_t>(a) * bin_width_ps)}, bin_width_ps};
        h.counts[static_cast<Eigen::Index>(a)] = static_cast<double>(find_coincidences(stream, q));
    });
    return h;
}

}  // namespace jsi
