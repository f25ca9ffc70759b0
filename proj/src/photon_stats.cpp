#include "jsi/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "jsi/error.hpp"
#include "jsi/fit.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"

namespace jsi {

namespace {
constexpr std::uint64_t kPulseBlock = 1 << 16;

struct BlockCounts {
    std::uint64_t s1 = 0, s2 = 0, c = 0;
};

// rho_1 o rho_2^T scaled so that its quadratic form gives the overlap.
Eigen::MatrixXcd overlap_kernel(const JointAmplitude& amp1, const JointAmplitude& amp2) {
    if (!amp1.grid().same_as(amp2.grid(), 1e-9)) throw Error(Errc::invalid_input, "sources must share a grid");
    DensityMatrix r1 = marginal_density_matrix(amp1, Arm::signal);
    DensityMatrix r2 = marginal_density_matrix(amp2, Arm::signal);
    return r1.rho.cwiseProduct(r2.rho.transpose()) * (r1.d_omega * r1.d_omega);
}

// Standard deviation in fs of the dip, the inverse spread of the kernel
// along omega - omega'.
double dip_width_fs(const Eigen::MatrixXcd& m, const Eigen::VectorXd& nu) {
    double w = 0, w2 = 0;
    for (Eigen::Index b = 0; b < m.cols(); ++b)
        for (Eigen::Index a = 0; a < m.rows(); ++a) {
            double x = std::abs(m(a, b)), d = nu[a] - nu[b];
            w += x;
            w2 += x * d * d;
        }
    if (!(w > 0) || !(w2 > 0)) throw Error(Errc::degenerate_input, "signal density matrix has no spectral width");
    return 1e15 / std::sqrt(w2 / w);
}
}  // namespace

double ThermalModeEnsemble::total_mean() const {
    double t = 0;
    for (double m : mode_means) t += m;
    return t;
}

double expected_g2(const ThermalModeEnsemble& e) {
    double s = 0, s2 = 0;
    for (double m : e.mode_means) {
        s += m;
        s2 += m * m;
    }
    if (!(s > 0)) throw Error(Errc::degenerate_input, "ensemble has no photons");
    return 1 + s2 / (s * s);
}

void set_implied(G2Result& r) {
    double x = r.g2 - 1;
    r.implied_K = x > 0 ? 1 / x : std::numeric_limits<double>::infinity();
    r.purity_out_of_range = x < 0 || x > 1;
    r.implied_purity = std::clamp(x, 0.0, 1.0);
    if (r.purity_out_of_range) r.warnings.push_back("g2 - 1 lies outside [0, 1]; implied purity clipped");
}

G2Result simulate_hbt(const ThermalModeEnsemble& ens, const DetectorSpec& d1, const DetectorSpec& d2,
                      std::uint64_t rng_seed) {
    validate(d1);
    validate(d2);
    if (ens.pulses < 10000) throw Error(Errc::invalid_input, "at least 1e4 pulses are required");
    if (ens.mode_means.empty()) throw Error(Errc::invalid_input, "ensemble has no modes");
    for (double m : ens.mode_means)
        if (!(m >= 0) || !std::isfinite(m)) throw Error(Errc::invalid_input, "mode means must be finite and non-negative");
    const double total = ens.total_mean();
    if (total >= 0.5) throw Error(Errc::domain, "mean photon number per pulse must stay well below 1 (multi-pair regime)");
    if (!(total > 0)) throw Error(Errc::degenerate_input, "ensemble has no photons");

    G2Result r;
    if (total > 0.05) r.warnings.push_back("mean photon number above 0.05; multi-pair contributions are significant");
    const std::uint64_t blocks = (ens.pulses + kPulseBlock - 1) / kPulseBlock;
    std::vector<BlockCounts> per(blocks);
    parallel_for(blocks, [&](std::size_t blk) {
        Rng rng(rng_seed, streams::hbt, blk);
        const std::uint64_t b0 = blk * kPulseBlock, b1 = std::min(ens.pulses, b0 + kPulseBlock);
        // Occupied pulses of each mode are found by geometric skipping; the
        // photon number of an occupied pulse is 1 + geometric by memorylessness.
        std::vector<std::pair<std::uint64_t, std::uint64_t>> hits;
        for (double mu : ens.mode_means) {
            if (mu <= 0) continue;
            const double lq = std::log1p(-mu / (1 + mu));
            std::uint64_t pos = b0;
            while (true) {
                double skip = std::floor(std::log(rng.uniform_pos()) / lq);
                if (skip >= static_cast<double>(b1 - pos)) break;
                pos += static_cast<std::uint64_t>(skip);
                hits.push_back({pos, 1 + rng.geometric(mu)});
                ++pos;
                if (pos >= b1) break;
            }
        }
        std::sort(hits.begin(), hits.end());
        BlockCounts bc;
        for (std::size_t k = 0; k < hits.size();) {
            std::uint64_t n = 0, pulse = hits[k].first;
            for (; k < hits.size() && hits[k].first == pulse; ++k) n += hits[k].second;
            std::uint64_t n1 = rng.binomial(n, 0.5);
            std::uint64_t k1 = rng.binomial(n1, d1.efficiency);
            std::uint64_t k2 = rng.binomial(n - n1, d2.efficiency);
            bc.s1 += k1;
            bc.s2 += k2;
            bc.c += k1 * k2;
        }
        per[blk] = bc;
    });
    for (const auto& b : per) {
        r.singles_1 += b.s1;
        r.singles_2 += b.s2;
        r.coincidences += b.c;
    }
    r.pulses = ens.pulses;
    const double s1 = static_cast<double>(r.singles_1), s2 = static_cast<double>(r.singles_2);
    const double c = static_cast<double>(r.coincidences);
    if (s1 == 0 || s2 == 0) throw Error(Errc::insufficient_data, "no singles recorded");
    r.g2 = c * static_cast<double>(r.pulses) / (s1 * s2);
    r.std_error = c > 0 ? r.g2 * std::sqrt(1 / c + 1 / s1 + 1 / s2) : std::numeric_limits<double>::infinity();
    if (c < 100) r.warnings.push_back("fewer than 100 coincidences; g2 is poorly determined");
    set_implied(r);
    return r;
}

G2Result simulate_hbt(const ThermalModeEnsemble& ensemble, std::uint64_t rng_seed) {
    return simulate_hbt(ensemble, DetectorSpec{}, DetectorSpec{}, rng_seed);
}

ThermalModeEnsemble ensemble_from_amplitude(const JointAmplitude& amp, double mean_pairs, std::uint64_t pulses) {
    if (!(mean_pairs > 0)) throw Error(Errc::invalid_input, "mean pair number must be positive");
    SchmidtResult s = schmidt_decompose(amp, false);
    ThermalModeEnsemble e;
    e.pulses = pulses;
    for (Eigen::Index k = 0; k < s.lambdas.size(); ++k) e.mode_means.push_back(mean_pairs * s.lambdas[k]);
    return e;
}

G2Result g2_from_amplitude(const JointAmplitude& amp, double mean_pairs, std::uint64_t pulses, std::uint64_t rng_seed) {
    return simulate_hbt(ensemble_from_amplitude(amp, mean_pairs, pulses), rng_seed);
}

Eigen::VectorXd hom_expected(const JointAmplitude& amp1, const JointAmplitude& amp2, const Eigen::VectorXd& delays_fs) {
    const Eigen::MatrixXcd m = overlap_kernel(amp1, amp2);
    const Eigen::VectorXd& nu = amp1.grid().signal();
    Eigen::VectorXd c(delays_fs.size());
    parallel_for(static_cast<std::size_t>(delays_fs.size()), [&](std::size_t k) {
        const double tau = delays_fs[static_cast<Eigen::Index>(k)] * 1e-15;
        Eigen::VectorXcd x(nu.size());
        for (Eigen::Index a = 0; a < nu.size(); ++a) x[a] = std::polar(1.0, nu[a] * tau);
        std::complex<double> s = x.dot(m * x);
        c[static_cast<Eigen::Index>(k)] = 1 - s.real();
    });
    return c;
}

Eigen::VectorXd hom_delays(const JointAmplitude& amp, std::size_t points, double n_widths) {
    if (points < 5) throw Error(Errc::invalid_input, "at least five delays are required");
    double w = dip_width_fs(overlap_kernel(amp, amp), amp.grid().signal());
    return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(points), -n_widths * w, n_widths * w);
}

HomScanResult hom_visibility(const JointAmplitude& amp1, const JointAmplitude& amp2, const Eigen::VectorXd& delays_fs,
                             double fourfolds_per_point, std::uint64_t rng_seed) {
    if (delays_fs.size() < 5) throw Error(Errc::invalid_input, "at least five delays are required");
    if (!(fourfolds_per_point > 0)) throw Error(Errc::invalid_input, "baseline counts must be positive");
    HomScanResult r;
    r.delays_fs = delays_fs;
    r.expected = hom_expected(amp1, amp2, delays_fs);
    const Eigen::Index n = delays_fs.size();
    r.fourfold_counts.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Rng rng(rng_seed, streams::hom, static_cast<std::uint64_t>(k));
        r.fourfold_counts[k] = static_cast<double>(rng.poisson(fourfolds_per_point * std::max(0.0, r.expected[k])));
    }

    const double scale = r.fourfold_counts.maxCoeff();
    if (!(scale > 0)) throw Error(Errc::estimation, "no fourfold counts recorded");
    Eigen::VectorXd y = r.fourfold_counts / scale;
    Eigen::Index imin;
    y.minCoeff(&imin);
    const Eigen::Index edge = std::max<Eigen::Index>(1, n / 5);
    double b0 = 0.5 * (y.head(edge).mean() + y.tail(edge).mean());
    double w0 = dip_width_fs(overlap_kernel(amp1, amp2), amp1.grid().signal());
    Eigen::VectorXd p0(4);
    p0 << b0, std::clamp(1 - y[imin] / b0, 0.05, 1.0), delays_fs[imin], w0;
    Model model = [](const Eigen::VectorXd& p, double t) {
        double z = (t - p[2]) / p[3];
        return p[0] * (1 - p[1] * std::exp(-0.5 * z * z));
    };
    CurveFit fit = fit_curve(model, delays_fs, y, p0);
    if (!fit.converged || !fit.params.allFinite() || !(std::abs(fit.params[3]) > 0) || !(fit.params[0] > 0))
        throw Error(Errc::estimation, "HOM dip fit failed");
    fit.params[3] = std::abs(fit.params[3]);

    Eigen::MatrixXd jac(n, 4);
    for (Eigen::Index k = 0; k < 4; ++k) {
        Eigen::VectorXd hi = fit.params, lo = fit.params;
        double h = 1e-6 * std::max(std::abs(fit.params[k]), 1e-6);
        hi[k] += h;
        lo[k] -= h;
        for (Eigen::Index i = 0; i < n; ++i) jac(i, k) = (model(hi, delays_fs[i]) - model(lo, delays_fs[i])) / (2 * h);
    }
    double s2 = fit.rms_residual * fit.rms_residual * static_cast<double>(n) / static_cast<double>(std::max<Eigen::Index>(1, n - 4));
    Eigen::MatrixXd cov = (jac.transpose() * jac).inverse() * s2;

    r.fit_params = fit.params;
    r.fit_params[0] *= scale;
    r.baseline = r.fit_params[0];
    r.visibility = fit.params[1];
    r.c_min = r.baseline * (1 - r.visibility);
    r.visibility_error = std::sqrt(std::max(0.0, cov(1, 1)));
    r.out_of_range = r.visibility < 0 || r.visibility > 1;
    if (r.out_of_range) r.warnings.push_back("fitted visibility lies outside [0, 1]");
    return r;
}

}  // namespace jsi
