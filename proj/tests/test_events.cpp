#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "jsi/events.hpp"
#include "jsi/parallel.hpp"
#include "jsi/rng.hpp"

using namespace jsi;
using testing::error_code;

namespace {

// Earliest unused tag in the window of each anchor, found by exhaustive scan.
std::uint64_t brute_force(const TimeTagStream& s, const CoincidenceQuery& q) {
    std::vector<std::vector<std::int64_t>> t(q.channels.size());
    for (const auto& tag : s)
        for (std::size_t c = 0; c < q.channels.size(); ++c)
            if (tag.channel == q.channels[c]) t[c].push_back(tag.timestamp_ps + q.offsets_ps[c]);
    std::vector<std::vector<bool>> used(t.size());
    for (std::size_t c = 0; c < t.size(); ++c) used[c].assign(t[c].size(), false);
    std::uint64_t n = 0;
    for (std::size_t a = 0; a < t[0].size(); ++a) {
        std::int64_t t0 = t[0][a];
        std::vector<std::size_t> pick(t.size(), 0);
        bool ok = true;
        for (std::size_t c = 1; c < t.size() && ok; ++c) {
            bool found = false;
            std::int64_t best = 0;
            for (std::size_t k = 0; k < t[c].size(); ++k) {
                if (used[c][k] || t[c][k] < t0) continue;
                if (!found || t[c][k] < best) {
                    best = t[c][k];
                    pick[c] = k;
                    found = true;
                }
            }
            ok = found && best < t0 + q.window_ps;
        }
        if (ok) {
            ++n;
            for (std::size_t c = 1; c < t.size(); ++c) used[c][pick[c]] = true;
        }
    }
    return n;
}

TimeTagStream random_stream(Rng& r, int channels, std::size_t n, std::int64_t span) {
    TimeTagStream s;
    for (std::size_t k = 0; k < n; ++k)
        s.push_back({static_cast<std::uint8_t>(static_cast<int>(r.uniform() * channels)),
                     static_cast<std::int64_t>(r.uniform() * static_cast<double>(span))});
    for (int c = 0; c < channels; ++c) s.push_back({static_cast<std::uint8_t>(c), span + c});
    sort_stream(s);
    return s;
}

double std_of(const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("detector validation") {
    CHECK(error_code([] { validate(DetectorSpec{1.5, 0, 0, 0}); }) == Errc::invalid_input);
    CHECK(error_code([] { validate(DetectorSpec{0.5, -1, 0, 0}); }) == Errc::invalid_input);
    CHECK(error_code([] { validate(DetectorSpec{0.5, 0, -1, 0}); }) == Errc::invalid_input);
    CHECK_FALSE(error_code([] { validate(DetectorSpec{0.5, 10, 20, 100}); }));
}

TEST_CASE("sample_pairs edge cases") {
    JointIntensity jsi = testing::correlated(1e13, 0.5, 32).intensity();
    CHECK(sample_pairs(jsi, 0, 1).empty());
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(32, 32);
    delta(7, 20) = 1;
    JointIntensity d(jsi.grid(), delta);
    const auto& g = d.grid();
    double s_lo = nm_from_omega(g.center_signal() + g.signal()[7] + g.ds() / 2);
    double s_hi = nm_from_omega(g.center_signal() + g.signal()[7] - g.ds() / 2);
    double i_lo = nm_from_omega(g.center_idler() + g.idler()[20] + g.di() / 2);
    double i_hi = nm_from_omega(g.center_idler() + g.idler()[20] - g.di() / 2);
    for (auto [s, i] : sample_pairs(d, 5000, 3)) {
        REQUIRE(s >= s_lo);
        REQUIRE(s <= s_hi);
        REQUIRE(i >= i_lo);
        REQUIRE(i <= i_hi);
    }
}

TEST_CASE("sampled pairs reproduce K of the filtered source") {
    JointAmplitude amp = testing::filtered_source(1.0, 128);
    JointIntensity jsi = amp.intensity();
    const auto& g = jsi.grid();
    auto pairs = sample_pairs(jsi, 1000000, 11);
    // Bin back onto a 4x coarser version of the source grid.
    const Eigen::Index n = 32;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    double s0 = g.signal()[0] - g.ds() / 2, i0 = g.idler()[0] - g.di() / 2;
    double ws = 4 * g.ds(), wi = 4 * g.di();
    for (auto [ls, li] : pairs) {
        auto a = static_cast<Eigen::Index>(std::floor((omega_from_nm(ls) - g.center_signal() - s0) / ws));
        auto b = static_cast<Eigen::Index>(std::floor((omega_from_nm(li) - g.center_idler() - i0) / wi));
        if (a >= 0 && a < n && b >= 0 && b < n) h(a, b) += 1;
    }
    double k = schmidt_from_counts(h).schmidt_number;
    CHECK(k == doctest::Approx(schmidt_decompose(amp, false).schmidt_number).epsilon(0.02));
}

TEST_CASE("sample_pairs is deterministic across thread counts") {
    JointIntensity jsi = testing::correlated(1e13, 0.5, 32).intensity();
    set_default_threads(1);
    auto a = sample_pairs(jsi, 5000, 99);
    set_default_threads(3);
    auto b = sample_pairs(jsi, 5000, 99);
    set_default_threads(0);
    CHECK(a == b);
    CHECK(a != sample_pairs(jsi, 5000, 100));
}

TEST_CASE("ideal detectors return ideal arrival times") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{}, DetectorSpec{}};
    setup.rep_rate_mhz = 80;
    std::vector<PhotonArrival> ev{{0, 1, 100.4}, {0, 2, 250}, {3, 1, 7}, {5, 2, 1999.6}};
    TimeTagStream s = apply_detection(ev, setup, 1);
    const double period = 12500;
    std::vector<TimeTag> want{{0, 1000000}, {1, 1000100}, {2, 1000250}, {0, 1000000 + 3 * 12500},
                              {1, 1000000 + 3 * 12500 + 7}, {0, 1000000 + 5 * 12500}, {2, 1000000 + 5 * 12500 + 2000}};
    CHECK(period == 1e6 / setup.rep_rate_mhz);
    CHECK(s == want);
}

TEST_CASE("photons routed to the reference or an unknown channel are rejected") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{}};
    CHECK(error_code([&] { apply_detection({{0, 0, 1.0}}, setup, 1); }) == Errc::invalid_input);
    CHECK(error_code([&] { apply_detection({{0, 4, 1.0}}, setup, 1); }) == Errc::invalid_input);
    setup.rep_rate_mhz = 0;
    CHECK(error_code([&] { apply_detection({{0, 1, 1.0}}, setup, 1); }) == Errc::invalid_input);
}

TEST_CASE("efficiency thins the stream binomially") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{0.3, 0, 0, 0}};
    std::vector<PhotonArrival> ev;
    for (std::uint64_t p = 0; p < 100000; ++p) ev.push_back({p, 1, 10});
    TimeTagStream s = apply_detection(ev, setup, 5);
    auto n = static_cast<double>(std::count_if(s.begin(), s.end(), [](const TimeTag& t) { return t.channel == 1; }));
    CHECK(std::abs(n - 30000) < 4 * std::sqrt(100000 * 0.3 * 0.7));
}

TEST_CASE("jitter of independent channels adds in quadrature") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{1, 150, 0, 0}, DetectorSpec{1, 220, 0, 0}};
    setup.reference_channel = -1;
    std::vector<PhotonArrival> ev;
    const std::uint64_t n = 100000;
    for (std::uint64_t p = 0; p < n; ++p) {
        ev.push_back({p, 1, 0});
        ev.push_back({p, 2, 0});
    }
    TimeTagStream s = apply_detection(ev, setup, 17);
    std::map<int, std::vector<std::int64_t>> by;
    for (const auto& t : s) by[t.channel].push_back(t.timestamp_ps);
    REQUIRE(by[1].size() == n);
    // Pulses are 13 ns apart, so the k-th tags of the two channels pair up.
    Eigen::VectorXd edges = Eigen::VectorXd::LinSpaced(161, -800, 800);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(160);
    for (std::size_t k = 0; k < n; ++k) {
        double d = static_cast<double>(by[2][k] - by[1][k]);
        auto b = static_cast<Eigen::Index>(std::floor((d + 800) / 10));
        if (b >= 0 && b < 160) counts[b] += 1;
    }
    Eigen::VectorXd centers = 0.5 * (edges.head(160) + edges.tail(160));
    CHECK(histogram_fwhm(centers, counts) == doctest::Approx(std::hypot(150.0, 220.0)).epsilon(0.03));
}

TEST_CASE("detector, tagger and reference jitter combine to 275 ps") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{1, 203, 0, 0}};
    setup.tagger_jitter_fwhm_ps = 174;
    setup.reference_jitter_fwhm_ps = 64;
    std::vector<PhotonArrival> ev;
    for (std::uint64_t p = 0; p < 100000; ++p) ev.push_back({p, 1, 0});
    TimeTagStream s = apply_detection(ev, setup, 23);
    std::vector<double> ref, sig;
    for (const auto& t : s) (t.channel == 0 ? ref : sig).push_back(static_cast<double>(t.timestamp_ps));
    REQUIRE(ref.size() == sig.size());
    std::vector<double> d(ref.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = sig[k] - ref[k];
    CHECK(std_of(d) * fwhm_per_sigma == doctest::Approx(275).epsilon(8.0 / 275));
}

TEST_CASE("dead time removes the second photon on the same channel") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{1, 0, 20, 0}};
    setup.rep_rate_mhz = 1;
    std::vector<PhotonArrival> ev;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        ev.push_back({p, 1, 100});
        ev.push_back({p, 1, 1100});
    }
    TimeTagStream s = apply_detection(ev, setup, 2);
    std::vector<std::int64_t> t;
    for (const auto& x : s)
        if (x.channel == 1) t.push_back(x.timestamp_ps);
    REQUIRE(t.size() == 1000);
    for (std::size_t k = 0; k < t.size(); ++k) CHECK((t[k] - 1000000) % 1000000 == 100);
}

TEST_CASE("dark counts are Poisson in number") {
    DetectionSetup setup;
    setup.detectors = {DetectorSpec{}, DetectorSpec{0, 0, 0, 5e4}};
    setup.reference_channel = -1;
    setup.rep_rate_mhz = 1;
    const std::uint64_t pulses = 200000;  // 0.2 s
    std::vector<PhotonArrival> ev{{pulses - 1, 1, 0}};
    const double mu = 5e4 * 0.2;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TimeTagStream s = apply_detection(ev, setup, seed);
        CHECK(std::abs(static_cast<double>(s.size()) - mu) < 4 * std::sqrt(mu));
    }
}

TEST_CASE("coincidences of identical tags") {
    TimeTagStream s;
    for (int k = 0; k < 50; ++k) {
        s.push_back({1, 1000 * k});
        s.push_back({2, 1000 * k});
    }
    sort_stream(s);
    CHECK(find_coincidences(s, {{1, 2}, {0, 0}, 100}) == 50);
}

TEST_CASE("query validation") {
    TimeTagStream s{{1, 10}, {2, 12}};
    CHECK(error_code([&] { find_coincidences(s, {{1, 3}, {0, 0}, 10}); }) == Errc::query);
    CHECK(error_code([&] { find_coincidences(s, {{1, 2}, {0}, 10}); }) == Errc::query);
    CHECK(error_code([&] { find_coincidences(s, {{1, 2}, {0, 0}, 0}); }) == Errc::query);
    CHECK(error_code([&] { find_coincidences(s, {{1, 1}, {0, 0}, 10}); }) == Errc::query);
    CHECK(error_code([&] { find_coincidences(s, {{}, {}, 10}); }) == Errc::query);
}

TEST_CASE("find_coincidences matches a brute-force matcher") {
    Rng r(314);
    for (int trial = 0; trial < 300; ++trial) {
        int channels = 2 + static_cast<int>(r.uniform() * 3);
        std::size_t n = 5 + static_cast<std::size_t>(r.uniform() * (trial < 290 ? 200 : 10000));
        std::int64_t span = 100 + static_cast<std::int64_t>(r.uniform() * 20000);
        TimeTagStream s = random_stream(r, channels, n, span);
        CoincidenceQuery q;
        int m = 2 + static_cast<int>(r.uniform() * (channels - 1));
        std::vector<int> pool(static_cast<std::size_t>(channels));
        for (int c = 0; c < channels; ++c) pool[static_cast<std::size_t>(c)] = c;
        for (int c = 0; c < m; ++c) {
            auto pick = static_cast<std::size_t>(r.uniform() * static_cast<double>(pool.size()));
            q.channels.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
            q.offsets_ps.push_back(static_cast<std::int64_t>((r.uniform() - 0.5) * 400));
        }
        q.window_ps = 1 + static_cast<std::int64_t>(r.uniform() * 300);
        CAPTURE(trial);
        REQUIRE(find_coincidences(s, q) == brute_force(s, q));
    }
}

TEST_CASE("shifting by one pulse period leaves only accidentals") {
    Rng r(8);
    const std::int64_t period = 12500;
    std::vector<bool> occupied(20000);
    TimeTagStream s;
    for (std::size_t p = 0; p < occupied.size(); ++p) {
        occupied[p] = r.uniform() < 0.1;
        if (!occupied[p]) continue;
        auto t = static_cast<std::int64_t>(p) * period;
        s.push_back({1, t + 300});
        s.push_back({2, t + 310});
    }
    sort_stream(s);
    std::uint64_t neighbours = 0, pairs = 0;
    for (std::size_t p = 0; p + 1 < occupied.size(); ++p) {
        pairs += occupied[p];
        neighbours += occupied[p] && occupied[p + 1];
    }
    CHECK(find_coincidences(s, {{1, 2}, {0, 0}, 100}) >= pairs);
    std::uint64_t shifted = find_coincidences(s, {{1, 2}, {period, 0}, 100});
    CHECK(shifted == neighbours);
    CHECK(static_cast<double>(shifted) < 0.15 * static_cast<double>(pairs));
}

TEST_CASE("timing histogram of fixed delays fills one bin") {
    std::vector<std::pair<double, double>> d(200, {120.0, 370.0});
    TimeTagStream s = apply_detection(d, DetectorSpec{}, DetectorSpec{}, 76, 4);
    Histogram2D h = build_timing_histogram(s, 0, 1, 2, 50, 1000, 0, 0);
    CHECK(h.total() == 200);
    CHECK(h.counts.maxCoeff() == 200);
    Eigen::Index a, b;
    h.counts.maxCoeff(&a, &b);
    CHECK(h.x_edges[a] <= 120);
    CHECK(h.x_edges[a + 1] > 120);
    CHECK(h.y_edges[b] <= 370);
    CHECK(h.y_edges[b + 1] > 370);
}

TEST_CASE("offset-iteration histogram equals direct per-event binning") {
    Rng r(12);
    std::vector<std::pair<double, double>> d(3000);
    for (auto& x : d) x = {r.normal(0, 150), r.normal(50, 200)};
    TimeTagStream s = apply_detection(d, DetectorSpec{0.8, 100, 0, 0}, DetectorSpec{0.7, 60, 0, 0}, 76, 9);
    const std::int64_t bin = 50, range = 1600;
    Histogram2D h = build_timing_histogram(s, 0, 1, 2, bin, range, 0, 0);
    // Direct binning: each pulse carries at most one tag per channel, and
    // every tag belongs to the nearest pulse.
    const double period = 1e6 / 76;
    std::map<std::int64_t, std::map<int, std::int64_t>> per_pulse;
    for (const auto& t : s)
        per_pulse[std::llround(static_cast<double>(t.timestamp_ps - 1000000) / period)][t.channel] = t.timestamp_ps;
    Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(h.counts.rows(), h.counts.cols());
    double accepted = 0;
    for (const auto& [p, m] : per_pulse) {
        if (!m.count(0) || !m.count(1) || !m.count(2)) continue;
        std::int64_t t0 = m.at(0);
        std::int64_t a = m.at(1) - t0 + range / 2, b = m.at(2) - t0 + range / 2;
        if (a < 0 || b < 0 || a >= range || b >= range) continue;
        direct(a / bin, b / bin) += 1;
        accepted += 1;
    }
    CHECK(h.counts == direct);
    CHECK(h.total() == accepted);
}

TEST_CASE("timing histogram validation") {
    TimeTagStream s{{0, 0}, {1, 10}, {2, 20}};
    CHECK(error_code([&] { build_timing_histogram(s, 0, 1, 2, 50, 1010); }) == Errc::alignment);
    CHECK(error_code([&] { build_timing_histogram(s, 0, 1, 2, 0, 1000); }) == Errc::invalid_input);
    CHECK(error_code([&] { build_timing_histogram(s, 0, 1, 3, 50, 1000); }) == Errc::query);
}

TEST_CASE("detection and histograms are deterministic across thread counts") {
    Rng r(3);
    std::vector<std::pair<double, double>> d(5000);
    for (auto& x : d) x = {r.normal(0, 100), r.normal(0, 100)};
    set_default_threads(1);
    TimeTagStream a = apply_detection(d, DetectorSpec{0.9, 80, 1, 1e3}, DetectorSpec{0.9, 80, 1, 1e3}, 76, 5);
    Histogram2D ha = build_timing_histogram(a, 0, 1, 2, 50, 800);
    set_default_threads(4);
    TimeTagStream b = apply_detection(d, DetectorSpec{0.9, 80, 1, 1e3}, DetectorSpec{0.9, 80, 1, 1e3}, 76, 5);
    Histogram2D hb = build_timing_histogram(b, 0, 1, 2, 50, 800);
    set_default_threads(0);
    CHECK(a == b);
    CHECK(ha.counts == hb.counts);
}

TEST_CASE("tag file round trips") {
    TimeTagStream s{{0, 5}, {1, 7}, {2, 123456789012}};
    std::stringstream bin;
    write_tags(bin, s);
    CHECK(bin.str().size() == 8 + 16 * s.size());
    CHECK(bin.str().substr(0, 8) == "JSITAG01");
    CHECK(read_tags(bin) == s);
    std::stringstream bad("JSITAG02" + std::string(16, '\0'));
    CHECK(error_code([&] { read_tags(bad); }) == Errc::invalid_input);
    std::stringstream trunc("JSITAG01" + std::string(9, '\0'));
    CHECK(error_code([&] { read_tags(trunc); }) == Errc::invalid_input);
    std::ostringstream csv;
    write_tags_csv(csv, s);
    CHECK(csv.str().find("123456789012") != std::string::npos);
}

TEST_CASE("histogram CSV round trip") {
    Histogram2D h;
    h.x_edges = Eigen::VectorXd::LinSpaced(4, 0, 150);
    h.y_edges = Eigen::VectorXd::LinSpaced(3, -50, 50);
    h.counts = Eigen::MatrixXd::Random(3, 2).cwiseAbs();
    std::stringstream ss;
    write_histogram_csv(ss, h);
    Histogram2D g = read_histogram_csv(ss);
    CHECK(g.x_edges == h.x_edges);
    CHECK(g.y_edges == h.y_edges);
    CHECK((g.counts - h.counts).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("histogram FWHM of a sampled Gaussian") {
    Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(201, -100, 100);
    Eigen::VectorXd y = (-0.5 * (c.array() / 10).square()).exp();
    CHECK(histogram_fwhm(c, y) == doctest::Approx(10 * fwhm_per_sigma).epsilon(1e-3));
    CHECK(error_code([] { histogram_fwhm(Eigen::VectorXd::LinSpaced(5, 0, 4), Eigen::VectorXd::Zero(5)); }) ==
          Errc::degenerate_input);
}
