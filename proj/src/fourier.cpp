#include "jsi/fourier.hpp"

#include <algorithm>
#include <cmath>

#include "jsi/error.hpp"
#include "jsi/fit.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"
#include "jsi/units.hpp"

namespace jsi {

std::size_t PolInterferometerSpec::points() const {
    return static_cast<std::size_t>(std::floor(stage_range_mm / stage_step_mm + 1e-9)) + 1;
}

Eigen::VectorXd PolInterferometerSpec::delays_fs() const {
    auto n = static_cast<Eigen::Index>(points());
    Eigen::VectorXd t(n);
    for (Eigen::Index k = 0; k < n; ++k) t[k] = fixed_offset_fs + delay_step_fs() * static_cast<double>(k);
    return t;
}

void validate(const PolInterferometerSpec& s) {
    if (!(s.delay_per_mm_fs > 0)) throw Error(Errc::config, "delay per mm must be positive");
    if (!(s.stage_step_mm > 0)) throw Error(Errc::config, "stage step must be positive");
    if (!(s.stage_range_mm >= s.stage_step_mm)) throw Error(Errc::config, "stage range must cover at least one step");
    if (!std::isfinite(s.fixed_offset_fs)) throw Error(Errc::config, "fixed offset must be finite");
}

double interferometer_transmission(double delay_fs, double wavelength_nm) {
    if (!(wavelength_nm > 0)) throw Error(Errc::domain, "wavelength must be positive");
    double phase = 2 * pi * speed_of_light * delay_fs * 1e-15 / (wavelength_nm * 1e-9);
    return 0.5 * (1 + std::cos(phase));
}

namespace {

// cos(omega_j tau_k) with omega in rad/s and tau in fs.
Eigen::MatrixXd cos_matrix(const Eigen::VectorXd& omega, const Eigen::VectorXd& tau_fs) {
    Eigen::MatrixXd m(omega.size(), tau_fs.size());
    for (Eigen::Index k = 0; k < tau_fs.size(); ++k)
        for (Eigen::Index j = 0; j < omega.size(); ++j) m(j, k) = std::cos(omega[j] * tau_fs[k] * 1e-15);
    return m;
}

Eigen::VectorXd weights(Eigen::Index n, bool hann) {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    w[0] = w[n - 1] = 0.5;
    if (hann)
        for (Eigen::Index k = 0; k < n; ++k)
            w[k] *= 0.5 * (1 + std::cos(pi * static_cast<double>(k) / static_cast<double>(n - 1)));
    return w;
}

Eigen::VectorXd absolute(const Eigen::VectorXd& nu, double center) { return nu.array() + center; }

double scan_span_fs(const Eigen::VectorXd& tau) { return tau[tau.size() - 1] - tau[0]; }

double step_fs(const Eigen::VectorXd& tau) { return tau[1] - tau[0]; }

void check_band(const Eigen::VectorXd& tau, const Eigen::VectorXd& omega, const char* arm) {
    if (tau.size() < 3) throw Error(Errc::insufficient_data, std::string(arm) + " scan has too few points");
    double dt = step_fs(tau) * 1e-15;
    double span = scan_span_fs(tau) * 1e-15;
    double resolution = pi / span;
    if (omega.size() > 1) {
        double d = omega[1] - omega[0];
        if (d < resolution * (1 - 1e-9))
            throw Error(Errc::insufficient_data,
                        std::string(arm) + " delay range too short for the requested frequency resolution");
    }
    double zone = pi / dt;
    double lo = omega.minCoeff(), hi = omega.maxCoeff();
    if (lo <= 0) throw Error(Errc::alignment, std::string(arm) + " band must lie at positive frequency");
    if (std::floor(lo / zone) != std::floor(hi / zone) || std::fmod(lo, zone) == 0.0)
        throw Error(Errc::alignment, std::string(arm) + " band straddles a Nyquist zone boundary (aliasing)");
}

Spectrum1D to_spectrum(Eigen::VectorXd r, const Eigen::VectorXd& nu, double center) {
    r = r.cwiseMax(0.0);
    double area = r.sum() * (nu[1] - nu[0]);
    if (!(area > 0)) throw Error(Errc::degenerate_input, "recovered spectrum is empty");
    Spectrum1D s;
    s.nu = nu;
    s.center = center;
    s.density = r / area;
    return s;
}

struct Centered {
    Eigen::MatrixXd x;
    Eigen::VectorXd ws, wi;
    double mean = 0;
    Eigen::VectorXd row_mean, col_mean;
};

Centered center_2d(const Interferogram& ig, bool hann) {
    Centered c;
    const auto& X = ig.intensity;
    c.ws = weights(X.rows(), hann);
    c.wi = weights(X.cols(), hann);
    double sws = c.ws.sum(), swi = c.wi.sum();
    c.row_mean = X * c.wi / swi;
    c.col_mean = X.transpose() * c.ws / sws;
    c.mean = c.ws.dot(X * c.wi) / (sws * swi);
    c.x = X;
    c.x.colwise() -= c.row_mean;
    c.x.rowwise() -= c.col_mean.transpose();
    c.x.array() += c.mean;
    return c;
}

}  // namespace

Interferogram simulate_1d_interferogram(const Spectrum1D& spectrum, const PolInterferometerSpec& spec, double scale) {
    validate(spec);
    double area = spectrum.density.sum() * spectrum.spacing();
    if (std::abs(area - 1) > 1e-6) throw Error(Errc::invalid_input, "spectrum is not normalized");
    Interferogram ig;
    ig.tau_s_fs = spec.delays_fs();
    Eigen::MatrixXd c = cos_matrix(absolute(spectrum.nu, spectrum.center), ig.tau_s_fs);
    Eigen::VectorXd s = spectrum.density * spectrum.spacing();
    ig.intensity = (scale * 0.5 * (s.sum() + (c.transpose() * s).array())).matrix();
    double coherence = 1.0 / spectrum.stddev();
    if (scan_span_fs(ig.tau_s_fs) * 1e-15 < 2 * coherence)
        ig.warnings.push_back("stage range shorter than two coherence times");
    return ig;
}

Spectrum1D recover_spectrum_1d(const Interferogram& ig, const Eigen::VectorXd& nu, double center,
                               const TransformOptions& opts) {
    if (ig.is_2d()) throw Error(Errc::invalid_input, "expected a 1D interferogram");
    Eigen::VectorXd omega = absolute(nu, center);
    check_band(ig.tau_s_fs, omega, "signal");
    Eigen::VectorXd x = ig.intensity.col(0);
    Eigen::VectorXd w = weights(x.size(), opts.hann);
    x.array() -= w.dot(x) / w.sum();
    Eigen::VectorXd r = cos_matrix(omega, ig.tau_s_fs) * w.cwiseProduct(x);
    return to_spectrum(r, nu, center);
}

Interferogram simulate_2d_interferogram(const JointIntensity& jsi, const PolInterferometerSpec& spec_s,
                                        const PolInterferometerSpec& spec_i, double pairs_per_point,
                                        std::uint64_t rng_seed, bool sample) {
    validate(spec_s);
    validate(spec_i);
    if (!(pairs_per_point > 0)) throw Error(Errc::invalid_input, "pairs per point must be positive");
    const auto& g = jsi.grid();
    Interferogram ig;
    ig.tau_s_fs = spec_s.delays_fs();
    ig.tau_i_fs = spec_i.delays_fs();
    Eigen::MatrixXd cs = cos_matrix(absolute(g.signal(), g.center_signal()), ig.tau_s_fs).transpose();
    Eigen::MatrixXd ci = cos_matrix(absolute(g.idler(), g.center_idler()), ig.tau_i_fs).transpose();
    cs = 0.5 * (cs.array() + 1.0);
    ci = 0.5 * (ci.array() + 1.0);
    ig.intensity = pairs_per_point * g.cell_area() * (cs * jsi.values() * ci.transpose());
    if (sample) {
        const auto nt = static_cast<std::size_t>(ig.intensity.rows()), nu = static_cast<std::size_t>(ig.intensity.cols());
        parallel_for(nt * nu, [&](std::size_t p) {
            auto a = static_cast<Eigen::Index>(p / nu), b = static_cast<Eigen::Index>(p % nu);
            Rng rng(rng_seed, streams::fourier, p);
            ig.intensity(a, b) = static_cast<double>(rng.poisson(ig.intensity(a, b)));
        });
    }
    double cs_sig = marginal(jsi, Arm::signal).stddev(), ci_sig = marginal(jsi, Arm::idler).stddev();
    if (scan_span_fs(ig.tau_s_fs) * 1e-15 < 2 / cs_sig || scan_span_fs(ig.tau_i_fs) * 1e-15 < 2 / ci_sig)
        ig.warnings.push_back("stage range shorter than two coherence times");
    return ig;
}

JointIntensity extract_jsi_quadrant(const Interferogram& ig, const FrequencyGrid& target, const TransformOptions& opts) {
    if (!ig.is_2d()) throw Error(Errc::invalid_input, "expected a 2D interferogram");
    Eigen::VectorXd ws_abs = absolute(target.signal(), target.center_signal());
    Eigen::VectorXd wi_abs = absolute(target.idler(), target.center_idler());
    check_band(ig.tau_s_fs, ws_abs, "signal");
    check_band(ig.tau_i_fs, wi_abs, "idler");
    Centered c = center_2d(ig, opts.hann);
    Eigen::MatrixXd cs = cos_matrix(ws_abs, ig.tau_s_fs) * c.ws.asDiagonal();
    Eigen::MatrixXd ci = cos_matrix(wi_abs, ig.tau_i_fs) * c.wi.asDiagonal();
    Eigen::MatrixXd r = (cs * c.x * ci.transpose()).cwiseMax(0.0);
    return JointIntensity(target, r);
}

QuadrantTerms quadrant_terms(const Interferogram& ig, const FrequencyGrid& target, const TransformOptions& opts) {
    if (!ig.is_2d()) throw Error(Errc::invalid_input, "expected a 2D interferogram");
    Eigen::VectorXd ws_abs = absolute(target.signal(), target.center_signal());
    Eigen::VectorXd wi_abs = absolute(target.idler(), target.center_idler());
    check_band(ig.tau_s_fs, ws_abs, "signal");
    check_band(ig.tau_i_fs, wi_abs, "idler");
    Centered c = center_2d(ig, opts.hann);
    QuadrantTerms q;
    q.origin = c.mean;
    Eigen::VectorXd rs = c.row_mean.array() - c.mean;
    Eigen::VectorXd ri = c.col_mean.array() - c.mean;
    q.signal_axis = to_spectrum(cos_matrix(ws_abs, ig.tau_s_fs) * c.ws.cwiseProduct(rs), target.signal(),
                                target.center_signal());
    q.idler_axis = to_spectrum(cos_matrix(wi_abs, ig.tau_i_fs) * c.wi.cwiseProduct(ri), target.idler(),
                               target.center_idler());
    return q;
}

FrequencyGrid matched_grid(const PolInterferometerSpec& spec_s, const PolInterferometerSpec& spec_i,
                           double approx_center_s, double approx_center_i, double half_span_s, double half_span_i,
                           int stride) {
    validate(spec_s);
    validate(spec_i);
    if (stride < 1) throw Error(Errc::invalid_input, "stride must be at least 1");
    auto axis = [stride](const PolInterferometerSpec& sp, double approx, double half, double& center) {
        double t = static_cast<double>(sp.points() - 1) * sp.delay_step_fs() * 1e-15;
        double unit = pi / t;
        center = std::round(approx / unit) * unit;
        double d = unit * stride;
        auto m = static_cast<Eigen::Index>(std::round(half / d));
        if (m < 1) throw Error(Errc::insufficient_data, "span smaller than one frequency bin");
        Eigen::VectorXd v(2 * m + 1);
        for (Eigen::Index k = -m; k <= m; ++k) v[k + m] = d * static_cast<double>(k);
        return v;
    };
    double cs, ci;
    Eigen::VectorXd s = axis(spec_s, approx_center_s, half_span_s, cs);
    Eigen::VectorXd i = axis(spec_i, approx_center_i, half_span_i, ci);
    return FrequencyGrid(s, i, cs, ci);
}

Interferogram simulate_diagonal_scan(const JointIntensity& jsi, const PolInterferometerSpec& spec, DiagonalAxis axis,
                                     double pairs_per_point, std::uint64_t rng_seed) {
    validate(spec);
    const auto& g = jsi.grid();
    Interferogram ig;
    ig.tau_s_fs = spec.delays_fs();
    const Eigen::Index n = ig.tau_s_fs.size();
    const double sign = axis == DiagonalAxis::sum ? 1.0 : -1.0;
    Eigen::VectorXd ws = absolute(g.signal(), g.center_signal());
    Eigen::VectorXd wi = absolute(g.idler(), g.center_idler());
    ig.intensity.resize(n, 1);
    const double scale = pairs_per_point > 0 ? pairs_per_point : 1.0;
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t kk) {
        auto k = static_cast<Eigen::Index>(kk);
        double t = ig.tau_s_fs[k] * 1e-15;
        Eigen::VectorXd a = 0.5 * (1.0 + (ws * t).array().cos());
        Eigen::VectorXd b = 0.5 * (1.0 + (wi * (sign * t)).array().cos());
        double v = scale * g.cell_area() * a.dot(jsi.values() * b);
        if (pairs_per_point > 0) {
            Rng rng(rng_seed, streams::fourier, (axis == DiagonalAxis::sum ? 0u : 1u) + 2 * kk);
            v = static_cast<double>(rng.poisson(v));
        }
        ig.intensity(k, 0) = v;
    });
    return ig;
}

namespace {

// Cosine transform of a centred scan on a frequency window.
Eigen::VectorXd transform(const Interferogram& ig, const Eigen::VectorXd& omega, bool hann) {
    Eigen::VectorXd x = ig.intensity.col(0);
    Eigen::VectorXd w = weights(x.size(), hann);
    x.array() -= w.dot(x) / w.sum();
    return cos_matrix(omega, ig.tau_s_fs) * w.cwiseProduct(x);
}

// Baseline-subtracted transform for a peak at zero frequency. A global mean
// would cancel the peak itself, so the baseline comes from the far half of
// the scan where the difference-frequency envelope has decayed.
Eigen::VectorXd transform_low(const Interferogram& ig, const Eigen::VectorXd& omega, bool hann) {
    Eigen::VectorXd x = ig.intensity.col(0);
    const Eigen::Index n = x.size();
    double base = x.tail(n / 2).mean();
    Eigen::VectorXd w = weights(n, hann);
    x.array() -= base;
    return cos_matrix(omega, ig.tau_s_fs) * w.cwiseProduct(x);
}

PeakFit fit_peak(const Eigen::VectorXd& omega, const Eigen::VectorXd& r, bool centered_at_zero) {
    Eigen::Index imax;
    double peak = r.maxCoeff(&imax);
    if (!(peak > 0)) throw Error(Errc::estimation, "no peak found in transformed scan");
    double half = peak / 2;
    Eigen::Index hi = imax, lo = imax;
    while (hi < r.size() - 1 && r[hi] > half) ++hi;
    while (lo > 0 && r[lo] > half) --lo;
    double hw = centered_at_zero ? omega[hi] - omega[0] : 0.5 * (omega[hi] - omega[lo]);
    double s0 = std::max(hw / std::sqrt(2 * std::log(2.0)), omega[1] - omega[0]);
    double mu0 = centered_at_zero ? 0.0 : omega[imax];

    // Fit region: within 4 widths of the peak.
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < omega.size(); ++k)
        if (std::abs(omega[k] - mu0) <= 4 * s0) idx.push_back(k);
    Eigen::VectorXd x(static_cast<Eigen::Index>(idx.size())), y(x.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        x[static_cast<Eigen::Index>(k)] = omega[idx[k]];
        y[static_cast<Eigen::Index>(k)] = r[idx[k]];
    }
    // Off-peak noise level.
    double ss = 0;
    std::size_t cnt = 0;
    for (Eigen::Index k = 0; k < omega.size(); ++k)
        if (std::abs(omega[k] - mu0) > 6 * s0) {
            ss += r[k] * r[k];
            ++cnt;
        }
    double noise = cnt ? std::sqrt(ss / static_cast<double>(cnt)) : 0.0;

    // Work in units of s0 to keep the problem well scaled.
    Eigen::VectorXd xs = (x.array() - mu0) / s0;
    Eigen::VectorXd ys = y / peak;
    PeakFit pf;
    pf.noise = noise;
    Model single = centered_at_zero
                       ? Model([](const Eigen::VectorXd& p, double t) { return p[0] * std::exp(-0.5 * t * t / (p[1] * p[1])); })
                       : Model([](const Eigen::VectorXd& p, double t) {
                             double z = (t - p[1]) / p[2];
                             return p[0] * std::exp(-0.5 * z * z);
                         });
    Eigen::VectorXd p0 = centered_at_zero ? Eigen::VectorXd(Eigen::Vector2d(1.0, 1.0))
                                          : Eigen::VectorXd(Eigen::Vector3d(1.0, 0.0, 1.0));
    CurveFit f = fit_curve(single, xs, ys, p0);
    if (!f.params.allFinite())
        throw Error(Errc::estimation, "Gaussian fit diverged (rms residual " + std::to_string(f.rms_residual) + ")");
    double width = std::abs(f.params[centered_at_zero ? 1 : 2]);
    double center = centered_at_zero ? 0.0 : f.params[1];
    pf.rms_residual = f.rms_residual * peak;
    pf.sigma = width * s0;
    pf.center = mu0 + center * s0;

    double floor = std::max(noise, 1e-3 * peak);
    if (pf.rms_residual > 3 * floor) {
        Model twin = [centered_at_zero](const Eigen::VectorXd& p, double t) {
            double mu = centered_at_zero ? 0.0 : p[3];
            double a = (t - mu - p[2]) / p[1], b = (t - mu + p[2]) / p[1];
            return p[0] * (std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b));
        };
        Eigen::VectorXd q0(4);
        q0 << 0.5, 0.7 * width, 0.5 * width, center;
        CurveFit d = fit_curve(twin, xs, ys, q0);
        if (d.params.allFinite() && d.rms_residual < f.rms_residual) {
            pf.double_peak = true;
            pf.sigma = std::abs(d.params[1]) * s0;
            pf.split = std::abs(d.params[2]) * s0;
            pf.center = centered_at_zero ? 0.0 : mu0 + d.params[3] * s0;
            pf.rms_residual = d.rms_residual * peak;
        }
        if (pf.rms_residual > 10 * floor)
            throw Error(Errc::estimation, "peak fit did not converge (rms residual " + std::to_string(pf.rms_residual) +
                                              ", noise " + std::to_string(floor) + ")");
    }
    if (!(pf.sigma > 0) || !std::isfinite(pf.sigma)) throw Error(Errc::estimation, "fitted width is not positive");
    return pf;
}

}  // namespace

DiagonalScanResult diagonal_scan_purity(const JointIntensity& jsi, const PolInterferometerSpec& spec,
                                        const DiagonalScanOptions& opts) {
    validate(spec);
    const auto& g = jsi.grid();
    DiagonalScanResult res;
    res.scan_sum = simulate_diagonal_scan(jsi, spec, DiagonalAxis::sum, opts.pairs_per_point, opts.rng_seed);
    res.scan_difference =
        simulate_diagonal_scan(jsi, spec, DiagonalAxis::difference, opts.pairs_per_point, opts.rng_seed);
    res.points = 2 * spec.points();

    const double dt = spec.delay_step_fs() * 1e-15;
    const double span = static_cast<double>(spec.points() - 1) * dt;
    const double omega_sum = g.center_signal() + g.center_idler();
    const double nyquist = pi / dt;
    const double w_sum = omega_sum / 4;
    if (nyquist < omega_sum + w_sum)
        throw Error(Errc::alignment, "delay step too coarse: the sum-frequency peak aliases");
    double sigma_min = std::min(marginal(jsi, Arm::signal).stddev(), marginal(jsi, Arm::idler).stddev());
    if (span < 2 / sigma_min) res.warnings.push_back("stage range shorter than two coherence times");

    const double d_omega = pi / span / 2;
    auto window = [d_omega](double lo, double hi) {
        auto n = static_cast<Eigen::Index>(std::floor((hi - lo) / d_omega)) + 1;
        Eigen::VectorXd v(n);
        for (Eigen::Index k = 0; k < n; ++k) v[k] = lo + d_omega * static_cast<double>(k);
        return v;
    };
    Eigen::VectorXd om_sum = window(omega_sum - w_sum, omega_sum + w_sum);
    Eigen::VectorXd om_diff = window(0.0, w_sum);

    Eigen::VectorXd t_sum = transform(res.scan_sum, om_sum, opts.transform.hann);
    Eigen::VectorXd t_diff = transform_low(res.scan_sum, om_diff, opts.transform.hann);
    // The anti-diagonal scan carries the same projections; average the two.
    t_sum = 0.5 * (t_sum + transform(res.scan_difference, om_sum, opts.transform.hann));
    t_diff = 0.5 * (t_diff + transform_low(res.scan_difference, om_diff, opts.transform.hann));

    res.sum_peak = fit_peak(om_sum, t_sum, false);
    res.difference_peak = fit_peak(om_diff, t_diff, true);
    res.sigma_a = res.sum_peak.sigma;
    res.sigma_d = res.difference_peak.sigma;
    if (res.sum_peak.double_peak || res.difference_peak.double_peak)
        res.warnings.push_back("double-peak model used for at least one diagonal peak");
    res.purity = purity_from_diagonal_widths(res.sigma_d, res.sigma_a);
    return res;
}

}  // namespace jsi
