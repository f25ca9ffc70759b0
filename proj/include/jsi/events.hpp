#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "jsi/spectral.hpp"

namespace jsi {

struct DetectorSpec {
    double efficiency = 1;
    double jitter_fwhm_ps = 0;
    double dead_time_ns = 0;
    double dark_rate = 0;  // counts/s
};

void validate(const DetectorSpec& d);

struct TimeTag {
    std::uint8_t channel = 0;
    std::int64_t timestamp_ps = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Tags sorted by (timestamp, channel).
using TimeTagStream = std::vector<TimeTag>;

void sort_stream(TimeTagStream& s);

/// A tuple is counted when every other channel has a tag whose
/// offset-corrected time lies in [t_first, t_first + window), where t_first
/// is the offset-corrected time of a tag on channels[0]. Matching is greedy
/// in time order and each tag is used at most once.
struct CoincidenceQuery {
    std::vector<int> channels;
    std::vector<std::int64_t> offsets_ps;
    std::int64_t window_ps = 1;
};

/// Binned joint distribution. Counts are stored as doubles so that
/// deconvolved histograms share the type.
struct Histogram2D {
    Eigen::VectorXd x_edges;
    Eigen::VectorXd y_edges;
    Eigen::MatrixXd counts;
    std::string x_unit = "ps";
    std::string y_unit = "ps";

    double total() const { return counts.sum(); }
    Eigen::VectorXd x_centers() const;
    Eigen::VectorXd y_centers() const;
};

void write_histogram_csv(std::ostream& os, const Histogram2D& h);
Histogram2D read_histogram_csv(std::istream& is);

/// A photon reaching a detector channel, delay_ps after its pump pulse.
struct PhotonArrival {
    std::uint64_t pulse = 0;
    int channel = 1;
    double delay_ps = 0;
};

struct DetectionSetup {
    /// detectors[c] describes channel c; entries for the reference channel
    /// are ignored.
    std::vector<DetectorSpec> detectors;
    double rep_rate_mhz = 76;
    /// Channel receiving a pump-synchronised tag for every pulse that carries
    /// photons; negative disables it.
    int reference_channel = 0;
    double reference_jitter_fwhm_ps = 0;
    /// Jitter of the time-to-digital converter, applied to detector channels.
    double tagger_jitter_fwhm_ps = 0;
    /// When true the reference jitter is drawn once per pulse and is common
    /// to both arms; otherwise each detection gets its own draw.
    bool shared_reference = true;
    std::int64_t origin_ps = 1000000;
};

/// Samples photon pairs (lambda_s, lambda_i) in nm from a JSI.
std::vector<std::pair<double, double>> sample_pairs(const JointIntensity& jsi, std::size_t n_pairs,
                                                    std::uint64_t rng_seed);

/// Applies loss, jitter, dead time and dark counts to ideal arrivals and
/// returns the sorted tag stream.
TimeTagStream apply_detection(const std::vector<PhotonArrival>& events, const DetectionSetup& setup,
                              std::uint64_t rng_seed);

/// Two-detector form: events are per-pulse (signal, idler) delays routed to
/// channels 1 and 2, with the reference on channel 0.
TimeTagStream apply_detection(const std::vector<std::pair<double, double>>& pair_delays_ps,
                              const DetectorSpec& det_s, const DetectorSpec& det_i, double rep_rate_mhz,
                              std::uint64_t rng_seed);

std::uint64_t find_coincidences(const TimeTagStream& stream, const CoincidenceQuery& q);

/// Relative-timing histogram of (t_signal - t_ref, t_idler - t_ref) built by
/// iterating three-fold coincidence queries over all offsets, one query per
/// bin with window equal to the bin width. Axes span center +- range / 2.
Histogram2D build_timing_histogram(const TimeTagStream& stream, int reference_channel,
                                   int signal_channel, int idler_channel, std::int64_t bin_width_ps,
                                   std::int64_t range_ps, std::int64_t signal_center_ps = 0,
                                   std::int64_t idler_center_ps = 0);

/// FWHM of a 1D histogram by linear interpolation at half maximum.
double histogram_fwhm(const Eigen::VectorXd& centers, const Eigen::VectorXd& counts);

// Binary tag format: 8-byte magic "JSITAG01", then 16-byte little-endian
// records (u8 channel, 7 zero bytes, u64 timestamp in ps).
void write_tags(std::ostream& os, const TimeTagStream& s);
TimeTagStream read_tags(std::istream& is);
void write_tags_csv(std::ostream& os, const TimeTagStream& s);

}  // namespace jsi
