#include "jsi/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "jsi/error.hpp"

namespace jsi {

namespace {

void check_axis(const Eigen::VectorXd& a, const char* name) {
    if (a.size() < 2) throw Error(Errc::invalid_input, std::string(name) + " axis needs at least 2 points");
    if (!a.allFinite()) throw Error(Errc::invalid_input, std::string(name) + " axis has non-finite values");
    double h = a[1] - a[0];
    if (!(h > 0)) throw Error(Errc::invalid_input, std::string(name) + " axis must be strictly increasing");
    for (Eigen::Index k = 1; k < a.size(); ++k) {
        double d = a[k] - a[k - 1];
        if (!(d > 0)) throw Error(Errc::invalid_input, std::string(name) + " axis must be strictly increasing");
        double tol = 1e-9 * h + 4e-16 * std::max(std::abs(a[k]), std::abs(a[k - 1]));
        if (std::abs(d - h) > tol)
            throw Error(Errc::invalid_input, std::string(name) + " axis spacing is not uniform");
    }
}

Eigen::VectorXd lin(double lo, double hi, std::size_t n) {
    if (n < 2) throw Error(Errc::invalid_input, "grid needs at least 2 points per axis");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) v[static_cast<Eigen::Index>(k)] = lo + h * static_cast<double>(k);
    return v;
}

}  // namespace

FrequencyGrid::FrequencyGrid(Eigen::VectorXd signal, Eigen::VectorXd idler, double center_signal,
                             double center_idler)
    : signal_(std::move(signal)), idler_(std::move(idler)), center_signal_(center_signal),
      center_idler_(center_idler) {
    check_axis(signal_, "signal");
    check_axis(idler_, "idler");
    if (!std::isfinite(center_signal_) || !std::isfinite(center_idler_) || center_signal_ <= 0 ||
        center_idler_ <= 0)
        throw Error(Errc::invalid_input, "grid centre frequencies must be positive and finite");
}

FrequencyGrid FrequencyGrid::linspace(double s_lo, double s_hi, std::size_t ns, double i_lo,
                                      double i_hi, std::size_t ni, double center_signal,
                                      double center_idler) {
    return FrequencyGrid(lin(s_lo, s_hi, ns), lin(i_lo, i_hi, ni), center_signal, center_idler);
}

FrequencyGrid FrequencyGrid::symmetric(double half_span_s, std::size_t ns, double half_span_i,
                                       std::size_t ni, double center_signal, double center_idler) {
    return linspace(-half_span_s, half_span_s, ns, -half_span_i, half_span_i, ni, center_signal,
                    center_idler);
}

bool FrequencyGrid::same_as(const FrequencyGrid& o, double rel_tol) const {
    if (ns() != o.ns() || ni() != o.ni()) return false;
    auto close = [rel_tol](double a, double b, double scale) {
        return std::abs(a - b) <= rel_tol * scale;
    };
    double ss = ds() * static_cast<double>(ns());
    double si = di() * static_cast<double>(ni());
    for (std::size_t k = 0; k < ns(); ++k)
        if (!close(signal_[k], o.signal_[k], ss)) return false;
    for (std::size_t k = 0; k < ni(); ++k)
        if (!close(idler_[k], o.idler_[k], si)) return false;
    return close(center_signal_, o.center_signal_, center_signal_) &&
           close(center_idler_, o.center_idler_, center_idler_);
}

JointAmplitude::JointAmplitude(FrequencyGrid grid, Eigen::MatrixXcd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != grid_.ns() ||
        static_cast<std::size_t>(values_.cols()) != grid_.ni())
        throw Error(Errc::invalid_input, "amplitude matrix does not match grid dimensions");
    if (!values_.allFinite()) throw Error(Errc::invalid_input, "amplitude has non-finite entries");
    double norm2 = values_.squaredNorm() * grid_.cell_area();
    if (!(norm2 > 0)) throw Error(Errc::degenerate_input, "amplitude is identically zero");
    values_ /= std::sqrt(norm2);
}

JointIntensity JointAmplitude::intensity() const {
    return JointIntensity(grid_, values_.cwiseAbs2());
}

JointIntensity::JointIntensity(FrequencyGrid grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != grid_.ns() ||
        static_cast<std::size_t>(values_.cols()) != grid_.ni())
        throw Error(Errc::invalid_input, "intensity matrix does not match grid dimensions");
    if (!values_.allFinite()) throw Error(Errc::invalid_input, "intensity has non-finite entries");
    if (values_.minCoeff() < 0) throw Error(Errc::invalid_input, "intensity has negative entries");
    double total = values_.sum() * grid_.cell_area();
    if (!(total > 0)) throw Error(Errc::degenerate_input, "intensity is identically zero");
    values_ /= total;
}

double Spectrum1D::mean() const {
    double w = density.sum();
    return density.dot(nu) / w;
}

double Spectrum1D::stddev() const {
    double m = mean();
    double w = density.sum();
    return std::sqrt(density.dot((nu.array() - m).square().matrix()) / w);
}

Spectrum1D marginal(const JointIntensity& jsi, Arm arm) {
    const auto& g = jsi.grid();
    Spectrum1D s;
    s.nu = g.axis(arm);
    s.center = g.center(arm);
    if (arm == Arm::signal)
        s.density = jsi.values().rowwise().sum() * g.di();
    else
        s.density = jsi.values().colwise().sum().transpose() * g.ds();
    return s;
}

namespace {

template <typename Svd>
SchmidtResult finish(const Svd& svd, double total, double ds, double di, bool with_modes) {
    Eigen::VectorXd sv = svd.singularValues();
    Eigen::VectorXd lam = sv.array().square() / total;
    double lmax = lam.size() ? lam.maxCoeff() : 0.0;
    Eigen::Index keep = 0;
    while (keep < lam.size() && lam[keep] >= 1e-12 * lmax) ++keep;
    SchmidtResult r;
    r.lambdas = lam.head(keep);
    r.lambdas /= r.lambdas.sum();
    r.schmidt_number = 1.0 / r.lambdas.squaredNorm();
    r.purity = 1.0 / r.schmidt_number;
    if (with_modes) {
        r.signal_modes = svd.matrixU().leftCols(keep).template cast<std::complex<double>>() / std::sqrt(ds);
        r.idler_modes =
            svd.matrixV().leftCols(keep).template cast<std::complex<double>>().conjugate() / std::sqrt(di);
    }
    return r;
}

}  // namespace

SchmidtResult schmidt_decompose_matrix(const Eigen::MatrixXcd& f, double ds, double di,
                                       bool with_modes) {
    if (!f.allFinite()) throw Error(Errc::invalid_input, "amplitude has non-finite entries");
    if (!(ds > 0) || !(di > 0)) throw Error(Errc::invalid_input, "cell widths must be positive");
    double w = std::sqrt(ds * di);
    double total = f.squaredNorm() * ds * di;
    if (!(total > 0)) throw Error(Errc::degenerate_input, "amplitude is identically zero");
    unsigned opts = with_modes ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0;
    if (f.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::MatrixXd m = f.real() * w;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, opts);
        return finish(svd, total, ds, di, with_modes);
    }
    Eigen::MatrixXcd m = f * w;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, opts);
    return finish(svd, total, ds, di, with_modes);
}

SchmidtResult schmidt_decompose(const JointAmplitude& amp, bool with_modes) {
    return schmidt_decompose_matrix(amp.values(), amp.grid().ds(), amp.grid().di(), with_modes);
}

SchmidtResult schmidt_from_intensity(const JointIntensity& jsi, bool with_modes) {
    if (jsi.values().minCoeff() < 0) throw Error(Errc::invalid_input, "intensity has negative entries");
    Eigen::MatrixXcd f = jsi.values().cwiseSqrt().cast<std::complex<double>>();
    return schmidt_decompose_matrix(f, jsi.grid().ds(), jsi.grid().di(), with_modes);
}

SchmidtResult schmidt_from_counts(const Eigen::MatrixXd& counts) {
    if (counts.size() == 0) throw Error(Errc::degenerate_input, "empty count matrix");
    if (!counts.allFinite()) throw Error(Errc::invalid_input, "counts have non-finite entries");
    if (counts.minCoeff() < 0) throw Error(Errc::invalid_input, "counts have negative entries");
    Eigen::MatrixXcd f = counts.cwiseSqrt().cast<std::complex<double>>();
    return schmidt_decompose_matrix(f, 1.0, 1.0, false);
}

double analytic_filtered_purity(double sigma_pump, double sigma_filter) {
    if (!(sigma_pump > 0) || !(sigma_filter > 0))
        throw Error(Errc::domain, "bandwidths must be positive");
    double x = sigma_pump / sigma_filter;
    double q = 1.0 / (1.0 + x * x);
    return std::sqrt(1.0 - q * q);
}

double purity_from_diagonal_widths(double sigma_d, double sigma_a) {
    if (!(sigma_d > 0) || !(sigma_a > 0)) throw Error(Errc::domain, "widths must be positive");
    double r = (sigma_d * sigma_d) / (sigma_a * sigma_a);
    double q = (r - 1) / (r + 1);
    return std::sqrt(std::max(0.0, 1.0 - q * q));
}

double DensityMatrix::trace() const { return rho.trace().real() * d_omega; }

double DensityMatrix::purity() const { return rho.squaredNorm() * d_omega * d_omega; }

DensityMatrix marginal_density_matrix(const JointAmplitude& amp, Arm arm) {
    const auto& f = amp.values();
    const auto& g = amp.grid();
    DensityMatrix d;
    if (arm == Arm::signal) {
        d.rho = f * f.adjoint() * g.di();
        d.d_omega = g.ds();
    } else {
        d.rho = f.transpose() * f.conjugate() * g.ds();
        d.d_omega = g.di();
    }
    return d;
}

double l1_distance(const JointIntensity& a, const JointIntensity& b) {
    if (!a.grid().same_as(b.grid(), 1e-9)) throw Error(Errc::invalid_input, "JSIs are on different grids");
    return (a.values() - b.values()).cwiseAbs().sum() * a.grid().cell_area();
}

JointIntensity resample(const JointIntensity& src, const FrequencyGrid& target) {
    const auto& g = src.grid();
    const double s0 = g.center_signal() + g.signal()[0];
    const double i0 = g.center_idler() + g.idler()[0];
    const double ds = g.ds(), di = g.di();
    const auto ns = static_cast<Eigen::Index>(g.ns()), ni = static_cast<Eigen::Index>(g.ni());
    auto locate = [](double x, Eigen::Index n, Eigen::Index& k, double& t) {
        if (x < 0 || x > static_cast<double>(n - 1)) return false;
        k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), n - 2);
        t = x - static_cast<double>(k);
        return true;
    };
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(target.ns()),
                                                static_cast<Eigen::Index>(target.ni()));
    const auto& v = src.values();
    for (Eigen::Index a = 0; a < out.rows(); ++a) {
        Eigen::Index ks;
        double ts;
        double xs = (target.center_signal() + target.signal()[a] - s0) / ds;
        if (!locate(xs, ns, ks, ts)) continue;
        for (Eigen::Index b = 0; b < out.cols(); ++b) {
            Eigen::Index ki;
            double ti;
            double xi = (target.center_idler() + target.idler()[b] - i0) / di;
            if (!locate(xi, ni, ki, ti)) continue;
            out(a, b) = (1 - ts) * (1 - ti) * v(ks, ki) + ts * (1 - ti) * v(ks + 1, ki) +
                        (1 - ts) * ti * v(ks, ki + 1) + ts * ti * v(ks + 1, ki + 1);
        }
    }
    return JointIntensity(target, out);
}

}  // namespace jsi
