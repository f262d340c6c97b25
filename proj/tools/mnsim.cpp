// mnsim: command-line front end for the mixed-numerology MU-MIMO simulator.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mnmimo/errors.hpp"
#include "mnmimo/log.hpp"
#include "mnmimo/runner.hpp"
#include "mnmimo/scenario.hpp"
#include "mnmimo/selfcheck.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kSelfcheckFailed = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t jobs = 1;
    std::string method;
    std::vector<double> snr;
    std::optional<std::size_t> drops;
    bool verbose = false;
    bool quiet = false;
    bool inject_failure = false;
};

std::string read_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw mnmimo::ConfigError(fmt::format("cannot open config '{}'", path));
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Returns the scenario and the config bytes it came from.
std::pair<mnmimo::Scenario, std::string> configure(const Options& o) {
    std::string text;
    mnmimo::Scenario s;
    if (o.config.empty()) {
        s = mnmimo::reference_scenario();
    } else {
        text = read_text(o.config);
        s = mnmimo::parse_scenario(text);
    }
    if (o.seed) s.master_seed = *o.seed;
    if (o.drops) s.drops = *o.drops;
    if (!o.out.empty()) s.output_dir = o.out;
    if (!o.method.empty() && o.method != "both")
        s.methods = {mnmimo::parse_precoder_method(o.method)};
    else if (o.method == "both")
        s.methods = {mnmimo::PrecoderMethod::CB, mnmimo::PrecoderMethod::SLNR};
    if (!o.snr.empty()) {
        for (std::size_t i = 1; i < o.snr.size(); ++i)
            if (!(o.snr[i] > o.snr[i - 1]))
                throw mnmimo::ConfigError("--snr values must be strictly ascending");
        s.snr_db = o.snr;
    }
    if (s.drops == 0) throw mnmimo::ConfigError("drops must be positive");
    return {std::move(s), std::move(text)};
}

int run_selfcheck(const Options& o) {
    auto checks = mnmimo::default_selfchecks();
    if (o.inject_failure) checks.push_back(mnmimo::injected_failure());
    const auto report = mnmimo::run_selfcheck(checks);
    for (std::size_t i = 0; i < report.names.size(); ++i)
        std::cout << (report.results[i].passed ? "PASS " : "FAIL ") << report.names[i] << ": "
                  << report.results[i].detail << '\n';
    return report.all_passed() ? kOk : kSelfcheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-numerology downlink MU-MIMO link simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mnmimo::kToolVersion);

    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "YAML scenario (reference scenario when omitted)");
        sub->add_option("--seed", o.seed, "master seed, overrides the config");
        sub->add_option("--out", o.out, "output directory, overrides the config");
        sub->add_option("--jobs", o.jobs, "worker threads for drops")->check(CLI::PositiveNumber);
        sub->add_option("--method", o.method, "precoder")->check(CLI::IsMember({"cb", "slnr", "both"}));
        sub->add_option("--snr", o.snr, "SNR points in dB, comma separated")->delimiter(',');
        sub->add_option("--drops", o.drops, "number of channel drops, overrides the config");
        sub->add_flag("-v,--verbose", o.verbose, "progress messages");
        sub->add_flag("-q,--quiet", o.quiet, "suppress warnings");
    };

    auto* constellation = app.add_subcommand("constellation", "EVM and constellation dumps");
    add_common(constellation);
    auto* capacity = app.add_subcommand("capacity", "capacity sweep versus SNR");
    add_common(capacity);
    auto* selfcheck = app.add_subcommand("selfcheck", "run the built-in oracle checks");
    selfcheck->add_flag("--inject-failure", o.inject_failure, "append a check that always fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    mnmimo::log::set_level(o.quiet ? mnmimo::log::Level::Quiet
                           : o.verbose ? mnmimo::log::Level::Info
                                       : mnmimo::log::Level::Warn);

    if (selfcheck->parsed()) {
        try {
            return run_selfcheck(o);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kRuntimeError;
        }
    }

    mnmimo::Scenario scenario;
    std::string text;
    try {
        std::tie(scenario, text) = configure(o);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        const mnmimo::RunOptions run{o.jobs};
        const auto& dir = scenario.output_dir;
        if (constellation->parsed()) {
            const auto result = mnmimo::run_constellation(scenario, run);
            mnmimo::write_constellation_outputs(result, scenario, dir);
            mnmimo::write_manifest(mnmimo::make_manifest("constellation", text, scenario), scenario, dir);
        } else {
            const auto result = mnmimo::run_capacity_sweep(scenario, run);
            mnmimo::write_capacity_outputs(result, scenario, dir);
            mnmimo::write_manifest(mnmimo::make_manifest("capacity", text, scenario), scenario, dir);
        }
        mnmimo::log::info(fmt::format("wrote results to {}", dir.string()));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
