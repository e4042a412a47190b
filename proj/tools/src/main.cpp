#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "checks.hpp"
#include "config.hpp"
#include "fbsc/exact.hpp"
#include "fbsc/propagator.hpp"
#include "io.hpp"

using namespace fbsc;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInvalid = 2;
constexpr int kNumerical = 3;

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned threads{1};
    std::string output;
};

cli::RunConfig load(const std::string& path, const Globals& g) {
    auto config = cli::load_config(path);
    if (g.seed) cli::set_seed(config, *g.seed);
    config.numerics.threads = g.threads;
    return config;
}

// Why a finished series is not trustworthy, or empty.
std::string degradation(const prop::ObservableSeries& series, double trace_tolerance) {
    if (!series.ok) return series.failure;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        if (!series.valid[k]) return "no usable contributions at t=" + cli::format_double(series.times[k]);
        const double dev = std::abs(series.traces[k] - 1.0);
        if (!(dev <= trace_tolerance))
            return "trace deviates from 1 by " + cli::format_double(dev) + " at t=" + cli::format_double(series.times[k]);
    }
    return {};
}

int write_outputs(const cli::RunConfig& config, const std::string& command, const std::string& config_path,
                  const Globals& g, const prop::ObservableSeries& series, int code) {
    const auto csv = cli::resolve_output(g.output, config, config_path);
    cli::write_text(csv, cli::series_csv(series));
    cli::write_text(cli::manifest_path(csv), cli::run_manifest(config, command, csv, series, code).dump(2) + "\n");
    std::cerr << "wrote " << csv << "\n";
    return code;
}

int cmd_run(const std::string& path, const Globals& g) {
    const auto config = load(path, g);
    const auto bath = config.build_bath();
    const auto series = prop::expectation_position(config.state, config.system, bath, config.times, config.numerics);
    const auto problem = degradation(series, config.trace_tolerance);
    if (!problem.empty()) std::cerr << "numerical failure: " << problem << "\n";
    return write_outputs(config, "run", path, g, series, problem.empty() ? kOk : kNumerical);
}

int cmd_exact(const std::string& path, const Globals& g) {
    const auto config = load(path, g);
    const auto bath = config.build_bath();
    exact::NormalModeDecomposition modes;
    try {
        modes = exact::build_normal_modes(config.system, bath);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    }
    std::optional<bath::BathPhasePoint> mean;
    if (config.numerics.bath_init == prop::BathInit::Equilibrium)
        mean = bath::equilibrium_placement(bath, config.system, config.numerics.equilibrium_position);
    const auto series =
        exact::exact_position_expectation(modes, config.state, config.times, mean ? &*mean : nullptr);
    return write_outputs(config, "exact", path, g, series, kOk);
}

int cmd_compare(const std::string& a_path, const std::string& b_path, double tol) {
    const auto a = cli::read_csv(a_path);
    const auto b = cli::read_csv(b_path);
    if (a.t.size() != b.t.size()) {
        std::cerr << "time grids differ in length (" << a.t.size() << " vs " << b.t.size() << ")\n";
        return kInvalid;
    }
    double max_abs = 0.0, scale = 0.0, worst_t = 0.0;
    for (std::size_t k = 0; k < a.t.size(); ++k) {
        if (std::abs(a.t[k] - b.t[k]) > 1e-12 * std::max(1.0, std::abs(b.t[k]))) {
            std::cerr << "time grids differ at row " << k + 1 << "\n";
            return kInvalid;
        }
        const double dev = std::abs(a.s[k] - b.s[k]);
        if (!(dev <= max_abs)) {
            max_abs = std::isnan(dev) ? INFINITY : dev;
            worst_t = a.t[k];
        }
        scale = std::max(scale, std::abs(b.s[k]));
    }
    const double max_rel = scale > 0.0 ? max_abs / scale : (max_abs > 0.0 ? INFINITY : 0.0);
    std::printf("max_abs_dev=%.6e max_rel_dev=%.6e at_t=%s tol=%.6e\n", max_abs, max_rel,
                cli::format_double(worst_t).c_str(), tol);
    return max_abs <= tol ? kOk : kFailed;
}

int cmd_check(const std::string& path, const Globals& g) {
    const auto config = load(path, g);
    const auto rows = cli::run_checks(config);
    bool all = true;
    std::printf("%-42s %12s %12s  %s\n", "check", "value", "tolerance", "result");
    for (const auto& r : rows) {
        std::printf("%-42s %12.3e %12.3e  %s\n", r.name.c_str(), r.value, r.tolerance, r.pass ? "PASS" : "FAIL");
        all = all && r.pass;
    }
    return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical forward-backward propagation of a system in a harmonic bath"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Override numerics.seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    app.add_option("--output", g.output, "CSV output path (manifest goes next to it)");

    std::string config_path, a_path, b_path;
    double tol = 0.0;
    auto* run = app.add_subcommand("run", "Semiclassical <s>(t) for a config");
    run->add_option("config", config_path, "JSON config")->required();
    auto* ex = app.add_subcommand("exact", "Normal-mode oracle for a harmonic config");
    ex->add_option("config", config_path, "JSON config")->required();
    auto* cmp = app.add_subcommand("compare", "Compare the s_expect columns of two CSVs");
    cmp->add_option("a", a_path)->required();
    cmp->add_option("b", b_path)->required();
    cmp->add_option("--tol", tol, "Allowed max absolute deviation")->required()->check(CLI::NonNegativeNumber);
    auto* chk = app.add_subcommand("check", "Self-verification battery at small N");
    chk->add_option("config", config_path, "JSON config")->required();
    for (auto* sub : {run, ex, cmp, chk}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*run) return cmd_run(config_path, g);
        if (*ex) return cmd_exact(config_path, g);
        if (*cmp) return cmd_compare(a_path, b_path, tol);
        if (*chk) return cmd_check(config_path, g);
    } catch (const cli::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cmp->parsed() ? kInvalid : kNumerical;
    }
    return kInvalid;
}
