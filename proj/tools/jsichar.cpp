#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "jsi/config.hpp"
#include "jsi/error.hpp"
#include "jsi/parallel.hpp"
#include "jsi/report.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kPartial = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "table";
    unsigned threads = 0;
    std::string technique;
    std::string input;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config) {
    auto* c = cmd->add_option("--config", o.config, "YAML run configuration");
    if (needs_config) c->required();
    cmd->add_option("--seed", o.seed, "global RNG seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory (overrides the config)");
    cmd->add_option("--format", o.format, "stdout format")->check(CLI::IsMember({"json", "csv", "table"}));
    cmd->add_option("--threads", o.threads, "worker threads (0 = default)");
}

jsi::RunConfig load(const Options& o) {
    jsi::RunConfig c = jsi::load_config(o.config);
    if (o.seed) c.seed = o.seed;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.threads) c.threads = o.threads;
    if (c.threads) jsi::set_default_threads(c.threads);
    return c;
}

void write(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / name, std::ios::binary) << text;
}

int cmd_truth(const Options& o) {
    jsi::RunConfig c = load(o);
    if (!c.seed) throw jsi::Error(jsi::Errc::config, "a global 'seed' is required (or pass --seed)");
    jsi::JointAmplitude amp = jsi::build_source(c.source);
    jsi::SuiteReport r;
    r.seed = *c.seed;
    r.truth = jsi::compute_truth(amp);
    write(c.output_dir, "truth.json", jsi::render_json(r));
    std::ostringstream os;
    jsi::write_jsi_csv(os, amp.intensity());
    write(c.output_dir, "truth_jsi.csv", os.str());
    std::cout << jsi::render(r, o.format);
    return kOk;
}

int cmd_run(const Options& o) {
    jsi::RunConfig c = load(o);
    const auto& ids = jsi::technique_ids();
    if (std::find(ids.begin(), ids.end(), o.technique) == ids.end())
        throw jsi::Error(jsi::Errc::config, "unknown technique '" + o.technique + "'");
    if (!c.seed) throw jsi::Error(jsi::Errc::config, "a global 'seed' is required (or pass --seed)");
    jsi::JointAmplitude amp = jsi::build_source(c.source);
    jsi::SuiteReport r;
    r.seed = *c.seed;
    r.truth = jsi::compute_truth(amp);
    r.techniques.push_back(jsi::run_technique(o.technique, c, amp, c.output_dir));
    write(c.output_dir, "run_" + o.technique + ".json", jsi::render_json(r));
    std::cout << jsi::render(r, o.format);
    if (!r.all_ok()) std::cerr << "technique failed: " << r.techniques.front().error << '\n';
    return r.all_ok() ? kOk : kPartial;
}

int cmd_suite(const Options& o) {
    jsi::RunConfig c = load(o);
    jsi::validate(c);
    jsi::SuiteReport r = jsi::run_suite(c, c.output_dir);
    std::cout << jsi::render(r, o.format);
    for (const auto& t : r.techniques)
        if (!t.ok) std::cerr << t.id << " failed: " << t.error << '\n';
    return r.all_ok() ? kOk : kPartial;
}

int cmd_report(const Options& o) {
    std::string path = o.input;
    if (path.empty()) {
        std::string dir = o.out;
        if (dir.empty() && !o.config.empty()) dir = jsi::load_config(o.config).output_dir;
        if (dir.empty()) dir = "out";
        path = (std::filesystem::path(dir) / "report.json").string();
    }
    std::ifstream in(path);
    if (!in) throw jsi::Error(jsi::Errc::invalid_input, "cannot open report '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    jsi::SuiteReport r = jsi::parse_report_json(ss.str());
    std::cout << jsi::render(r, o.format);
    return r.all_ok() ? kOk : kPartial;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint spectral characterization simulator"};
    app.require_subcommand(1);
    Options o;
    auto* truth = app.add_subcommand("truth", "ground-truth Schmidt number and purity of the configured source");
    add_common(truth, o, true);
    auto* run = app.add_subcommand("run", "run a single technique");
    run->add_option("technique", o.technique, "monochromator|fourier|fibre|stimulated|g2|hom")->required();
    add_common(run, o, true);
    auto* suite = app.add_subcommand("suite", "run every enabled technique and write the comparison report");
    add_common(suite, o, true);
    auto* report = app.add_subcommand("report", "re-render a saved report.json");
    add_common(report, o, false);
    report->add_option("--input", o.input, "report JSON file (default <out>/report.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }
    try {
        if (*truth) return cmd_truth(o);
        if (*run) return cmd_run(o);
        if (*suite) return cmd_suite(o);
        return cmd_report(o);
    } catch (const jsi::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == jsi::Errc::config ? kConfigError : kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
