// Command-line front end: derive, evolve, gate, sweep, validate.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cpg/commands.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cpg::ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled-cavity quantum-dot controlled-phase gate simulator"};
    app.require_subcommand(1);

    std::string config_path;
    cpg::CommandOptions opt;
    std::uint64_t seed = 0;
    bool seed_set = false;

    app.add_option("--config", config_path, "run configuration file")
        ->required();
    app.add_option("--out", opt.out_path, "output file path");
    app.add_flag("--strict", opt.strict,
                 "treat regime warnings as errors (exit 3)");
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; },
           "override the run seed");
    app.add_option("--threads", opt.threads, "worker pool size (0: automatic)");
    app.add_flag("--echo-config", opt.echo_config,
                 "print the resolved configuration");
    app.add_option("--warn-threshold", opt.regime_warn_threshold,
                   "regime warning threshold ratio");

    auto* derive = app.add_subcommand("derive", "closed-form derived couplings");
    auto* evolve = app.add_subcommand("evolve", "trajectory CSV");
    auto* gate = app.add_subcommand("gate", "CZ protocol report");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep CSV");
    auto* validate =
        app.add_subcommand("validate", "full-vs-effective model comparison");
    validate->add_option("--horizon", opt.validate_horizon,
                         "validation horizon in ns (default 0.5)");
    validate->add_option("--budget", opt.validate_budget_ns,
                         "largest accepted eq3 horizon in ns");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string text = slurp(config_path);
        cpg::RunConfig cfg = cpg::parse_config(text);
        if (seed_set) opt.seed_override = seed;
        if (seed_set) cfg.run.seed = seed;

        if (derive->parsed()) return cpg::cmd_derive(cfg, opt, std::cout);
        if (evolve->parsed()) return cpg::cmd_evolve(cfg, opt, std::cout);
        if (gate->parsed()) return cpg::cmd_gate(cfg, opt, std::cout);
        if (sweep->parsed()) {
            const auto spec = cpg::parse_sweep(text);
            if (!spec) {
                std::cout << "error: config has no [sweep] section\n";
                return cpg::kExitEmptySweep;
            }
            return cpg::cmd_sweep(cfg, *spec, opt, std::cout);
        }
        if (validate->parsed()) return cpg::cmd_validate(cfg, opt, std::cout);
    } catch (const cpg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cpg::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cpg::kExitEngine;
    }
    return cpg::kExitOk;
}
