#include "jsi/events.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "jsi/error.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"
#include "jsi/units.hpp"

namespace jsi {

namespace {
constexpr std::size_t kBlock = 1024;
}

void validate(const DetectorSpec& d) {
    if (!(d.efficiency >= 0 && d.efficiency <= 1)) throw Error(Errc::invalid_input, "detector efficiency must lie in [0, 1]");
    if (!(d.jitter_fwhm_ps >= 0)) throw Error(Errc::invalid_input, "detector jitter must be non-negative");
    if (!(d.dead_time_ns >= 0)) throw Error(Errc::invalid_input, "detector dead time must be non-negative");
    if (!(d.dark_rate >= 0)) throw Error(Errc::invalid_input, "dark count rate must be non-negative");
}

void sort_stream(TimeTagStream& s) {
    std::sort(s.begin(), s.end(), [](const TimeTag& a, const TimeTag& b) {
        return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps : a.channel < b.channel;
    });
}

Eigen::VectorXd Histogram2D::x_centers() const {
    Eigen::Index n = x_edges.size() - 1;
    return 0.5 * (x_edges.head(n) + x_edges.tail(n));
}

Eigen::VectorXd Histogram2D::y_centers() const {
    Eigen::Index n = y_edges.size() - 1;
    return 0.5 * (y_edges.head(n) + y_edges.tail(n));
}

std::vector<std::pair<double, double>> sample_pairs(const JointIntensity& jsi, std::size_t n_pairs,
                                                    std::uint64_t rng_seed) {
    const auto& g = jsi.grid();
    Eigen::MatrixXd p = jsi.probabilities();
    double total = p.sum();
    if (std::abs(total - 1.0) > 1e-6) throw Error(Errc::invalid_input, "JSI is not normalized");
    const auto ns = static_cast<std::size_t>(p.rows()), ni = static_cast<std::size_t>(p.cols());
    std::vector<double> cdf(ns * ni);
    double acc = 0;
    for (std::size_t a = 0; a < ns; ++a)
        for (std::size_t b = 0; b < ni; ++b) {
            acc += p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            cdf[a * ni + b] = acc;
        }
    std::vector<std::pair<double, double>> out(n_pairs);
    std::size_t blocks = (n_pairs + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t blk) {
        Rng rng(rng_seed, streams::sample_pairs, blk);
        std::size_t end = std::min(n_pairs, (blk + 1) * kBlock);
        for (std::size_t k = blk * kBlock; k < end; ++k) {
            double u = rng.uniform() * acc;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            std::size_t cell = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
            while (p(static_cast<Eigen::Index>(cell / ni), static_cast<Eigen::Index>(cell % ni)) <= 0 && cell > 0) --cell;
            auto a = static_cast<Eigen::Index>(cell / ni), b = static_cast<Eigen::Index>(cell % ni);
            double ws = g.center_signal() + g.signal()[a] + (rng.uniform() - 0.5) * g.ds();
            double wi = g.center_idler() + g.idler()[b] + (rng.uniform() - 0.5) * g.di();
            out[k] = {nm_from_omega(ws), nm_from_omega(wi)};
        }
    });
    return out;
}

TimeTagStream apply_detection(const std::vector<PhotonArrival>& events, const DetectionSetup& setup,
                              std::uint64_t rng_seed) {
    if (!(setup.rep_rate_mhz > 0)) throw Error(Errc::invalid_input, "repetition rate must be positive");
    for (const auto& d : setup.detectors) validate(d);
    if (!(setup.reference_jitter_fwhm_ps >= 0) || !(setup.tagger_jitter_fwhm_ps >= 0))
        throw Error(Errc::invalid_input, "jitter must be non-negative");
    const double period = 1e6 / setup.rep_rate_mhz;
    const double s_ref = setup.reference_jitter_fwhm_ps / fwhm_per_sigma;
    const double s_tag = setup.tagger_jitter_fwhm_ps / fwhm_per_sigma;
    const bool have_ref = setup.reference_channel >= 0;
    for (const auto& e : events) {
        if (e.channel < 0 || e.channel > 255 || static_cast<std::size_t>(e.channel) >= setup.detectors.size())
            throw Error(Errc::invalid_input, "photon routed to unconfigured channel " + std::to_string(e.channel));
        if (have_ref && e.channel == setup.reference_channel)
            throw Error(Errc::invalid_input, "photon routed to the reference channel");
    }

    auto ref_jitter = [&](std::uint64_t pulse) {
        if (s_ref == 0) return 0.0;
        Rng r(rng_seed, streams::reference, pulse);
        return s_ref * r.normal();
    };

    // Detector outcome per event; NaN marks a lost photon.
    std::vector<double> t(events.size());
    std::size_t blocks = (events.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t blk) {
        Rng rng(rng_seed, streams::detection, blk);
        std::size_t end = std::min(events.size(), (blk + 1) * kBlock);
        for (std::size_t k = blk * kBlock; k < end; ++k) {
            const auto& e = events[k];
            const auto& d = setup.detectors[static_cast<std::size_t>(e.channel)];
            bool kept = rng.uniform() < d.efficiency;
            double j = rng.normal() * d.jitter_fwhm_ps / fwhm_per_sigma + rng.normal() * s_tag;
            double r = rng.normal() * s_ref;
            if (!kept) {
                t[k] = std::nan("");
                continue;
            }
            double ref = have_ref && setup.shared_reference ? 0.0 : r;
            t[k] = static_cast<double>(setup.origin_ps) + static_cast<double>(e.pulse) * period + e.delay_ps + j + ref;
        }
    });

    std::uint64_t max_pulse = 0;
    for (const auto& e : events) max_pulse = std::max(max_pulse, e.pulse);
    const double duration_ps = events.empty() ? 0.0 : static_cast<double>(max_pulse + 1) * period;

    std::map<int, std::vector<std::int64_t>> per_channel;
    for (std::size_t k = 0; k < events.size(); ++k)
        if (!std::isnan(t[k])) per_channel[events[k].channel].push_back(std::llround(t[k]));

    std::set<std::uint64_t> ref_pulses;
    if (have_ref)
        for (const auto& e : events) ref_pulses.insert(e.pulse);

    for (std::size_t c = 0; c < setup.detectors.size(); ++c) {
        if (have_ref && static_cast<int>(c) == setup.reference_channel) continue;
        const auto& d = setup.detectors[c];
        if (d.dark_rate <= 0 || duration_ps <= 0) continue;
        Rng rng(rng_seed, streams::dark_counts, c);
        std::uint64_t n = rng.poisson(d.dark_rate * duration_ps * 1e-12);
        auto& v = per_channel[static_cast<int>(c)];
        for (std::uint64_t k = 0; k < n; ++k) {
            double x = rng.uniform() * duration_ps;
            v.push_back(setup.origin_ps + std::llround(x));
            if (have_ref) ref_pulses.insert(static_cast<std::uint64_t>(std::floor(x / period)));
        }
    }

    TimeTagStream out;
    for (auto& [c, v] : per_channel) {
        std::sort(v.begin(), v.end());
        const auto dead = std::llround(setup.detectors[static_cast<std::size_t>(c)].dead_time_ns * 1000.0);
        bool first = true;
        std::int64_t last = 0;
        for (auto x : v) {
            if (!first && dead > 0 && x - last < dead) continue;
            out.push_back({static_cast<std::uint8_t>(c), x});
            last = x;
            first = false;
        }
    }
    if (have_ref) {
        for (auto p : ref_pulses) {
            double x = static_cast<double>(setup.origin_ps) + static_cast<double>(p) * period +
                       (setup.shared_reference ? ref_jitter(p) : 0.0);
            out.push_back({static_cast<std::uint8_t>(setup.reference_channel), std::llround(x)});
        }
    }
    sort_stream(out);
    return out;
}

TimeTagStream apply_detection(const std::vector<std::pair<double, double>>& pair_delays_ps,
                              const DetectorSpec& det_s, const DetectorSpec& det_i, double rep_rate_mhz,
                              std::uint64_t rng_seed) {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, det_s, det_i};
    setup.rep_rate_mhz = rep_rate_mhz;
    std::vector<PhotonArrival> ev;
    ev.reserve(2 * pair_delays_ps.size());
    for (std::size_t k = 0; k < pair_delays_ps.size(); ++k) {
        ev.push_back({k, 1, pair_delays_ps[k].first});
        ev.push_back({k, 2, pair_delays_ps[k].second});
    }
    return apply_detection(ev, setup, rng_seed);
}

namespace {

using Lists = std::vector<const std::vector<std::int64_t>*>;

std::uint64_t count_tuples(const Lists& lists, const std::vector<std::int64_t>& offsets, std::int64_t window) {
    const std::size_t m = lists.size();
    std::vector<std::size_t> ptr(m, 0);
    const auto& anchor = *lists[0];
    std::uint64_t count = 0;
    for (std::size_t a = 0; a < anchor.size(); ++a) {
        const std::int64_t t0 = anchor[a] + offsets[0];
        bool ok = true;
        for (std::size_t c = 1; c < m; ++c) {
            const auto& v = *lists[c];
            std::size_t& p = ptr[c];
            while (p < v.size() && v[p] + offsets[c] < t0) ++p;
            if (p >= v.size() || v[p] + offsets[c] >= t0 + window) ok = false;
        }
        if (ok) {
            ++count;
            for (std::size_t c = 1; c < m; ++c) ++ptr[c];
        }
    }
    return count;
}

std::map<int, std::vector<std::int64_t>> split(const TimeTagStream& s) {
    std::map<int, std::vector<std::int64_t>> by;
    for (const auto& t : s) by[t.channel].push_back(t.timestamp_ps);
    return by;
}

void check_query(const CoincidenceQuery& q, const std::map<int, std::vector<std::int64_t>>& by) {
    if (q.channels.empty()) throw Error(Errc::query, "query has no channels");
    if (q.offsets_ps.size() != q.channels.size()) throw Error(Errc::query, "one offset per channel is required");
    if (q.window_ps <= 0) throw Error(Errc::query, "coincidence window must be positive");
    std::set<int> seen;
    for (int c : q.channels) {
        if (!seen.insert(c).second) throw Error(Errc::query, "channel listed twice in query");
        if (!by.count(c)) throw Error(Errc::query, "unknown channel " + std::to_string(c));
    }
}

}  // namespace

std::uint64_t find_coincidences(const TimeTagStream& stream, const CoincidenceQuery& q) {
    auto by = split(stream);
    check_query(q, by);
    Lists lists;
    for (int c : q.channels) lists.push_back(&by.at(c));
    return count_tuples(lists, q.offsets_ps, q.window_ps);
}

Histogram2D build_timing_histogram(const TimeTagStream& stream, int reference_channel, int signal_channel,
                                   int idler_channel, std::int64_t bin_width_ps, std::int64_t range_ps,
                                   std::int64_t signal_center_ps, std::int64_t idler_center_ps) {
    if (bin_width_ps <= 0) throw Error(Errc::invalid_input, "bin width must be positive");
    if (range_ps <= 0 || range_ps % bin_width_ps != 0)
        throw Error(Errc::alignment, "histogram range must be a positive multiple of the bin width");
    if (range_ps % 2 != 0) throw Error(Errc::alignment, "histogram range must be an even number of ps");
    auto by = split(stream);
    CoincidenceQuery probe{{reference_channel, signal_channel, idler_channel}, {0, 0, 0}, bin_width_ps};
    check_query(probe, by);
    const Lists lists{&by.at(reference_channel), &by.at(signal_channel), &by.at(idler_channel)};
    const std::int64_t n = range_ps / bin_width_ps;
    const std::int64_t x0 = signal_center_ps - range_ps / 2;
    const std::int64_t y0 = idler_center_ps - range_ps / 2;

    Histogram2D h;
    h.x_edges.resize(n + 1);
    h.y_edges.resize(n + 1);
    for (std::int64_t k = 0; k <= n; ++k) {
        h.x_edges[k] = static_cast<double>(x0 + k * bin_width_ps);
        h.y_edges[k] = static_cast<double>(y0 + k * bin_width_ps);
    }
    h.counts = Eigen::MatrixXd::Zero(n, n);
    parallel_for(static_cast<std::size_t>(n * n), [&](std::size_t idx) {
        std::int64_t a = static_cast<std::int64_t>(idx) / n, b = static_cast<std::int64_t>(idx) % n;
        std::vector<std::int64_t> off{0, -(x0 + a * bin_width_ps), -(y0 + b * bin_width_ps)};
        h.counts(a, b) = static_cast<double>(count_tuples(lists, off, bin_width_ps));
    });
    return h;
}

double histogram_fwhm(const Eigen::VectorXd& centers, const Eigen::VectorXd& counts) {
    if (centers.size() != counts.size() || counts.size() < 3)
        throw Error(Errc::invalid_input, "histogram too short for a width estimate");
    Eigen::Index imax;
    double peak = counts.maxCoeff(&imax);
    if (!(peak > 0)) throw Error(Errc::degenerate_input, "empty histogram");
    double half = peak / 2;
    Eigen::Index l = imax, r = imax;
    while (l > 0 && counts[l] > half) --l;
    while (r < counts.size() - 1 && counts[r] > half) ++r;
    if (counts[l] > half || counts[r] > half) throw Error(Errc::estimation, "peak not contained in histogram");
    auto cross = [&](Eigen::Index lo, Eigen::Index hi) {
        double f = (half - counts[lo]) / (counts[hi] - counts[lo]);
        return centers[lo] + f * (centers[hi] - centers[lo]);
    };
    return cross(r, r - 1) - cross(l, l + 1);
}

}  // namespace jsi
