#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace jsi {

enum class Arm { signal, idler };

/// Rectangular grid of signal/idler detunings nu = omega - omega0 (rad/s).
class FrequencyGrid {
public:
    FrequencyGrid(Eigen::VectorXd signal, Eigen::VectorXd idler, double center_signal,
                  double center_idler);

    static FrequencyGrid linspace(double s_lo, double s_hi, std::size_t ns, double i_lo,
                                  double i_hi, std::size_t ni, double center_signal,
                                  double center_idler);
    static FrequencyGrid symmetric(double half_span_s, std::size_t ns, double half_span_i,
                                   std::size_t ni, double center_signal, double center_idler);

    const Eigen::VectorXd& signal() const { return signal_; }
    const Eigen::VectorXd& idler() const { return idler_; }
    const Eigen::VectorXd& axis(Arm a) const { return a == Arm::signal ? signal_ : idler_; }
    double center_signal() const { return center_signal_; }
    double center_idler() const { return center_idler_; }
    double center(Arm a) const { return a == Arm::signal ? center_signal_ : center_idler_; }
    std::size_t ns() const { return static_cast<std::size_t>(signal_.size()); }
    std::size_t ni() const { return static_cast<std::size_t>(idler_.size()); }
    double ds() const { return signal_[1] - signal_[0]; }
    double di() const { return idler_[1] - idler_[0]; }
    double spacing(Arm a) const { return a == Arm::signal ? ds() : di(); }
    double cell_area() const { return ds() * di(); }

    bool same_as(const FrequencyGrid& other, double rel_tol = 1e-12) const;

private:
    Eigen::VectorXd signal_;
    Eigen::VectorXd idler_;
    double center_signal_;
    double center_idler_;
};

class JointIntensity;

/// Complex joint spectral amplitude, normalized to unit L2 norm on
/// construction (sum |f|^2 * cell area = 1).
class JointAmplitude {
public:
    JointAmplitude(FrequencyGrid grid, Eigen::MatrixXcd values);

    const FrequencyGrid& grid() const { return grid_; }
    const Eigen::MatrixXcd& values() const { return values_; }
    JointIntensity intensity() const;

private:
    FrequencyGrid grid_;
    Eigen::MatrixXcd values_;
};

/// Non-negative joint spectral intensity, normalized to unit area.
class JointIntensity {
public:
    JointIntensity(FrequencyGrid grid, Eigen::MatrixXd values);

    const FrequencyGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }
    /// Per-cell probabilities (intensity times cell area).
    Eigen::MatrixXd probabilities() const { return values_ * grid_.cell_area(); }

private:
    FrequencyGrid grid_;
    Eigen::MatrixXd values_;
};

/// One-dimensional spectral density on a detuning axis.
struct Spectrum1D {
    Eigen::VectorXd nu;
    double center = 0;
    Eigen::VectorXd density;

    double spacing() const { return nu[1] - nu[0]; }
    double mean() const;
    double stddev() const;
};

Spectrum1D marginal(const JointIntensity& jsi, Arm arm);

struct SchmidtResult {
    Eigen::VectorXd lambdas;
    /// Columns are mode functions, orthonormal under sum(conj(g) h) * d_nu.
    Eigen::MatrixXcd signal_modes;
    Eigen::MatrixXcd idler_modes;
    double schmidt_number = 1;
    double purity = 1;
};

SchmidtResult schmidt_decompose(const JointAmplitude& amp, bool with_modes = true);

/// Decomposes an arbitrary sampled amplitude with cell widths ds, di.
SchmidtResult schmidt_decompose_matrix(const Eigen::MatrixXcd& f, double ds, double di,
                                       bool with_modes = true);

/// Flat-phase decomposition of a JSI: the square root of the intensity is
/// treated as a real amplitude.
SchmidtResult schmidt_from_intensity(const JointIntensity& jsi, bool with_modes = false);

/// Flat-phase decomposition of raw counts on a uniform grid.
SchmidtResult schmidt_from_counts(const Eigen::MatrixXd& counts);

/// 1/K for a Gaussian pump of width sigma under Gaussian filters sigma_f.
double analytic_filtered_purity(double sigma_pump, double sigma_filter);

/// Purity of the Gaussian ellipse with sum width sigma_a and difference
/// width sigma_d.
double purity_from_diagonal_widths(double sigma_d, double sigma_a);

/// Reduced single-photon density matrix rho(omega, omega') on one arm.
struct DensityMatrix {
    Eigen::MatrixXcd rho;
    double d_omega = 1;

    double trace() const;
    double purity() const;
};

DensityMatrix marginal_density_matrix(const JointAmplitude& amp, Arm arm);

/// L1 distance sum |a - b| * cell area between two JSIs on the same grid.
double l1_distance(const JointIntensity& a, const JointIntensity& b);

/// Bilinear resampling in absolute frequency; zero outside the source grid.
JointIntensity resample(const JointIntensity& src, const FrequencyGrid& target);

// Serialization. CSV rows are signal bins and columns idler bins, both in
// ascending frequency order; header lines carry the axis extents in nm.
void write_jsi_csv(std::ostream& os, const JointIntensity& jsi);
JointIntensity read_jsi_csv(std::istream& is);
std::string jsi_to_json(const JointIntensity& jsi);
JointIntensity jsi_from_json(const std::string& text);

}  // namespace jsi
