#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jsi/config.hpp"
#include "jsi/spectral.hpp"

namespace jsi {

struct TruthReport {
    double schmidt_number = 0;
    double purity = 0;
    /// Purity of |f| alone, which is what intensity-only techniques see.
    double flat_phase_purity = 0;
    double signal_center_nm = 0;
    double idler_center_nm = 0;
    std::size_t grid_points = 0;
};

/// One row of the comparison table. Fields that do not apply to a
/// technique are left empty and rendered as N/A.
struct TechniqueReport {
    std::string id;
    bool ok = false;
    std::string error;
    bool reconstructs_jsi = false;
    bool phase_sensitive = false;
    std::optional<double> purity;
    std::optional<double> purity_error;
    std::optional<double> schmidt_number;
    std::optional<std::string> jsi_path;
    std::optional<double> peak_rate;            // counts/s
    std::optional<double> acquisition_time_s;   // simulated dwell-time total
    std::optional<double> time_per_bin_s;
    std::optional<double> resolution_signal_nm;
    std::optional<double> resolution_idler_nm;
    std::optional<double> raw_snr;
    std::optional<double> scaled_snr;
    std::string scaled_snr_unit;
    std::vector<std::string> warnings;
};

struct SuiteReport {
    std::uint64_t seed = 0;
    TruthReport truth;
    std::vector<TechniqueReport> techniques;

    bool all_ok() const;
};

/// Raw SNR normalized by the time per bin and the spectral bin area,
/// in 1/(s nm^2).
double scaled_snr_binned(double raw_snr, double time_per_bin_s, double resolution_signal_nm,
                         double resolution_idler_nm);

/// Raw SNR normalized by a time only (1/s).
double scaled_snr_per_time(double raw_snr, double time_s);

/// Seed for one technique derived from the global seed.
std::uint64_t technique_seed(std::uint64_t global_seed, const std::string& id);

TruthReport compute_truth(const JointAmplitude& amp);

/// Runs one technique against the shared source. Artifacts are written into
/// out_dir unless it is empty. Failures are returned as ok = false.
TechniqueReport run_technique(const std::string& id, const RunConfig& config, const JointAmplitude& amp,
                              const std::string& out_dir);

/// Runs every enabled technique. Artifacts and report files are written to
/// out_dir unless it is empty.
SuiteReport run_suite(const RunConfig& config, const std::string& out_dir);

std::string render_json(const SuiteReport& r);
std::string render_csv(const SuiteReport& r);
std::string render_table(const SuiteReport& r);
std::string render(const SuiteReport& r, const std::string& format);

SuiteReport parse_report_json(const std::string& text);

}  // namespace jsi
