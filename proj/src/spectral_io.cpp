#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jsi/error.hpp"
#include "jsi/spectral.hpp"
#include "jsi/units.hpp"

namespace jsi {

namespace {

struct AxisNm {
    double min_nm, max_nm;
    std::size_t count;
};

AxisNm axis_nm(const FrequencyGrid& g, Arm arm) {
    const auto& a = g.axis(arm);
    double c = g.center(arm);
    return {nm_from_omega(c + a[a.size() - 1]), nm_from_omega(c + a[0]), static_cast<std::size_t>(a.size())};
}

Eigen::VectorXd axis_from_nm(const AxisNm& ax, double center_omega) {
    if (ax.count < 2 || !(ax.min_nm > 0) || !(ax.max_nm > ax.min_nm))
        throw Error(Errc::invalid_input, "bad axis extents in JSI header");
    double lo = omega_from_nm(ax.max_nm) - center_omega;
    double hi = omega_from_nm(ax.min_nm) - center_omega;
    Eigen::VectorXd v(static_cast<Eigen::Index>(ax.count));
    double h = (hi - lo) / static_cast<double>(ax.count - 1);
    for (std::size_t k = 0; k < ax.count; ++k) v[static_cast<Eigen::Index>(k)] = lo + h * static_cast<double>(k);
    return v;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void write_jsi_csv(std::ostream& os, const JointIntensity& jsi) {
    const auto& g = jsi.grid();
    AxisNm s = axis_nm(g, Arm::signal), i = axis_nm(g, Arm::idler);
    os << "# signal_nm," << fmt(s.min_nm) << ',' << fmt(s.max_nm) << ',' << s.count << '\n';
    os << "# idler_nm," << fmt(i.min_nm) << ',' << fmt(i.max_nm) << ',' << i.count << '\n';
    os << "# center_nm," << fmt(nm_from_omega(g.center_signal())) << ','
       << fmt(nm_from_omega(g.center_idler())) << '\n';
    os << "# order,frequency-ascending\n";
    const auto& v = jsi.values();
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            if (c) os << ',';
            os << fmt(v(r, c));
        }
        os << '\n';
    }
}

JointIntensity read_jsi_csv(std::istream& is) {
    AxisNm s{}, i{};
    double cs = 0, ci = 0;
    bool have_s = false, have_i = false, have_c = false;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            std::stringstream ss(body);
            std::string key;
            std::getline(ss, key, ',');
            key.erase(0, key.find_first_not_of(' '));
            std::vector<std::string> fields;
            std::string f;
            while (std::getline(ss, f, ',')) fields.push_back(f);
            try {
                if (key == "signal_nm" || key == "idler_nm") {
                    if (fields.size() != 3) throw Error(Errc::invalid_input, "bad axis header");
                    AxisNm ax{std::stod(fields[0]), std::stod(fields[1]),
                              static_cast<std::size_t>(std::stoul(fields[2]))};
                    if (key == "signal_nm") {
                        s = ax;
                        have_s = true;
                    } else {
                        i = ax;
                        have_i = true;
                    }
                } else if (key == "center_nm") {
                    if (fields.size() != 2) throw Error(Errc::invalid_input, "bad centre header");
                    cs = std::stod(fields[0]);
                    ci = std::stod(fields[1]);
                    have_c = true;
                }
            } catch (const std::logic_error&) {
                throw Error(Errc::invalid_input, "unparseable JSI header line: " + line);
            }
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            try {
                row.push_back(std::stod(f));
            } catch (const std::logic_error&) {
                throw Error(Errc::invalid_input, "unparseable JSI value '" + f + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (!have_s || !have_i || !have_c) throw Error(Errc::invalid_input, "JSI CSV is missing header lines");
    if (rows.size() != s.count) throw Error(Errc::invalid_input, "JSI CSV row count does not match header");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(s.count), static_cast<Eigen::Index>(i.count));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != i.count) throw Error(Errc::invalid_input, "JSI CSV column count does not match header");
        for (std::size_t c = 0; c < i.count; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    double ws = omega_from_nm(cs), wi = omega_from_nm(ci);
    return JointIntensity(FrequencyGrid(axis_from_nm(s, ws), axis_from_nm(i, wi), ws, wi), m);
}

std::string jsi_to_json(const JointIntensity& jsi) {
    const auto& g = jsi.grid();
    AxisNm s = axis_nm(g, Arm::signal), i = axis_nm(g, Arm::idler);
    nlohmann::ordered_json j;
    j["format"] = "jsi";
    j["order"] = "frequency-ascending";
    j["signal_nm"] = {{"min", s.min_nm}, {"max", s.max_nm}, {"count", s.count}};
    j["idler_nm"] = {{"min", i.min_nm}, {"max", i.max_nm}, {"count", i.count}};
    j["center_nm"] = {{"signal", nm_from_omega(g.center_signal())}, {"idler", nm_from_omega(g.center_idler())}};
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    const auto& v = jsi.values();
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(v.cols()));
        for (Eigen::Index c = 0; c < v.cols(); ++c) row[static_cast<std::size_t>(c)] = v(r, c);
        rows.push_back(row);
    }
    j["values"] = std::move(rows);
    return j.dump();
}

JointIntensity jsi_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        AxisNm s{j.at("signal_nm").at("min").get<double>(), j.at("signal_nm").at("max").get<double>(),
                 j.at("signal_nm").at("count").get<std::size_t>()};
        AxisNm i{j.at("idler_nm").at("min").get<double>(), j.at("idler_nm").at("max").get<double>(),
                 j.at("idler_nm").at("count").get<std::size_t>()};
        double ws = omega_from_nm(j.at("center_nm").at("signal").get<double>());
        double wi = omega_from_nm(j.at("center_nm").at("idler").get<double>());
        const auto& rows = j.at("values");
        if (rows.size() != s.count) throw Error(Errc::invalid_input, "JSI JSON row count does not match header");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(s.count), static_cast<Eigen::Index>(i.count));
        for (std::size_t r = 0; r < s.count; ++r) {
            if (rows[r].size() != i.count) throw Error(Errc::invalid_input, "JSI JSON column count does not match header");
            for (std::size_t c = 0; c < i.count; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
        return JointIntensity(FrequencyGrid(axis_from_nm(s, ws), axis_from_nm(i, wi), ws, wi), m);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_input, std::string("malformed JSI JSON: ") + e.what());
    }
}

}  // namespace jsi
