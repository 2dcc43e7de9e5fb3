// Command-line front-end for the insider game solver.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "insider/app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Insider stochastic differential games: solve and verify equilibria"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    bool quiet = false;
    app.add_option("--config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "root seed, overrides the scenario");
    app.add_option("--paths", paths, "Monte Carlo path count, overrides the scenario")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "suppress progress lines");
    app.fallthrough();
    for (const char* name : {"donsker", "simulate", "solve", "verify", "all"}) app.add_subcommand(name);
    app.get_subcommand("donsker")->description("kernel tables and normalization report");
    app.get_subcommand("simulate")->description("realized state paths and moments");
    app.get_subcommand("solve")->description("equilibrium controls and diagnostics");
    app.get_subcommand("verify")->description("FOC, concavity, Gateaux and ordering checks");
    app.get_subcommand("all")->description("every stage in order");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : insider::exit_config_error;
    }
    insider::ScenarioConfig config;
    try {
        config = insider::load_config(config_path);
        if (seed) config.seed = *seed;
        if (paths) config.n_paths = *paths;
    } catch (const insider::ConfigError& e) {
        insider::RunResult r{insider::exit_config_error, {{"config", e.what()}}};
        std::cerr << insider::failure_summary(r) << '\n';
        return insider::exit_config_error;
    }
    insider::RunOptions opt;
    opt.command = app.get_subcommands().front()->get_name();
    opt.out = out_dir;
    opt.quiet = quiet;
    return insider::run(config, opt);
}
