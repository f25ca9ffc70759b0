#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "jsi/error.hpp"
#include "jsi/events.hpp"

namespace jsi {

namespace {
constexpr char kMagic[8] = {'J', 'S', 'I', 'T', 'A', 'G', '0', '1'};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<double> parse_row(const std::string& line, std::size_t skip) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string f;
    std::size_t k = 0;
    while (std::getline(ss, f, ',')) {
        if (k++ < skip) continue;
        try {
            out.push_back(std::stod(f));
        } catch (const std::logic_error&) {
            throw Error(Errc::invalid_input, "unparseable value '" + f + "'");
        }
    }
    return out;
}
}  // namespace

void write_tags(std::ostream& os, const TimeTagStream& s) {
    os.write(kMagic, 8);
    unsigned char rec[16];
    for (const auto& t : s) {
        if (t.timestamp_ps < 0) throw Error(Errc::invalid_input, "negative timestamp cannot be written");
        std::memset(rec, 0, sizeof rec);
        rec[0] = t.channel;
        auto v = static_cast<std::uint64_t>(t.timestamp_ps);
        for (int b = 0; b < 8; ++b) rec[8 + b] = static_cast<unsigned char>(v >> (8 * b));
        os.write(reinterpret_cast<const char*>(rec), sizeof rec);
    }
}

TimeTagStream read_tags(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw Error(Errc::invalid_input, "not a tag file (bad magic)");
    TimeTagStream s;
    unsigned char rec[16];
    while (is.read(reinterpret_cast<char*>(rec), sizeof rec)) {
        for (int b = 1; b < 8; ++b)
            if (rec[b] != 0) throw Error(Errc::invalid_input, "non-zero reserved bytes in tag record");
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(rec[8 + b]) << (8 * b);
        if (v > static_cast<std::uint64_t>(INT64_MAX)) throw Error(Errc::invalid_input, "timestamp out of range");
        s.push_back({rec[0], static_cast<std::int64_t>(v)});
    }
    if (is.gcount() != 0) throw Error(Errc::invalid_input, "truncated tag record");
    return s;
}

void write_tags_csv(std::ostream& os, const TimeTagStream& s) {
    os << "channel,timestamp_ps\n";
    for (const auto& t : s) os << static_cast<int>(t.channel) << ',' << t.timestamp_ps << '\n';
}

void write_histogram_csv(std::ostream& os, const Histogram2D& h) {
    os << "# x_edges," << h.x_unit;
    for (Eigen::Index k = 0; k < h.x_edges.size(); ++k) os << ',' << fmt(h.x_edges[k]);
    os << "\n# y_edges," << h.y_unit;
    for (Eigen::Index k = 0; k < h.y_edges.size(); ++k) os << ',' << fmt(h.y_edges[k]);
    os << '\n';
    for (Eigen::Index r = 0; r < h.counts.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.counts.cols(); ++c) {
            if (c) os << ',';
            os << fmt(h.counts(r, c));
        }
        os << '\n';
    }
}

Histogram2D read_histogram_csv(std::istream& is) {
    Histogram2D h;
    std::vector<std::vector<double>> rows;
    bool hx = false, hy = false;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# x_edges,", 0) == 0 || line.rfind("# y_edges,", 0) == 0) {
            bool x = line[2] == 'x';
            std::string rest = line.substr(10);
            auto comma = rest.find(',');
            std::string unit = rest.substr(0, comma);
            auto e = parse_row(rest, 1);
            Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
            (x ? h.x_edges : h.y_edges) = v;
            (x ? h.x_unit : h.y_unit) = unit;
            (x ? hx : hy) = true;
            continue;
        }
        if (line[0] == '#') continue;
        rows.push_back(parse_row(line, 0));
    }
    if (!hx || !hy) throw Error(Errc::invalid_input, "histogram CSV is missing edge headers");
    Eigen::Index nr = h.x_edges.size() - 1, nc = h.y_edges.size() - 1;
    if (nr < 1 || nc < 1 || static_cast<Eigen::Index>(rows.size()) != nr)
        throw Error(Errc::invalid_input, "histogram CSV row count does not match edges");
    h.counts.resize(nr, nc);
    for (Eigen::Index r = 0; r < nr; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != nc)
            throw Error(Errc::invalid_input, "histogram CSV column count does not match edges");
        for (Eigen::Index c = 0; c < nc; ++c) h.counts(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return h;
}

}  // namespace jsi
