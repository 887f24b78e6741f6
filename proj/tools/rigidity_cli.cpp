// Batch experiment driver. Each subcommand runs a fixed pipeline selection
// against the map described by --config and writes verdict.txt plus CSV
// tables into --out. Exit codes: 0 success, 2 config error, 3 numerical
// failure (the message names the operation that failed).

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rigidity/pipelines.hpp"

namespace {

struct Invocation {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 42;
    int threads = 1;
    rigidity::PipelineSelection sel;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rigidity laboratory: periodic data, conjugacy, density and entropy reports"};
    app.require_subcommand(1);

    Invocation inv;
    const auto add = [&](const std::string& name, const std::string& desc,
                         rigidity::PipelineSelection sel) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--config", inv.config_path, "experiment config file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", inv.out_dir, "output directory, created if missing");
        cmd->add_option("--seed", inv.seed, "seed for all stochastic sampling");
        cmd->add_option("--threads", inv.threads, "worker thread count")
            ->check(CLI::Range(1, 256));
        cmd->callback([&inv, sel] { inv.sel = sel; });
        return cmd;
    };

    add("periodic", "enumerate periodic orbits and test for constant data",
        {.periodic = true, .density = false, .conjugacy = false, .entropy = false});
    add("density", "invariant density of a circle map by the Ulam method",
        {.periodic = false, .density = true, .conjugacy = false, .entropy = false});
    add("conjugacy", "conjugacy to the linear model plus regularity estimates",
        {.periodic = false, .density = false, .conjugacy = true, .entropy = false});
    add("entropy", "unstable volume growth and entropy identities of a toral map",
        {.periodic = false, .density = false, .conjugacy = false, .entropy = true});
    add("circle-report", "periodic + conjugacy + density pipelines for a circle map",
        {.periodic = true, .density = true, .conjugacy = true, .entropy = false});
    add("torus-report", "periodic + conjugacy + entropy pipelines for a toral map",
        {.periodic = true, .density = false, .conjugacy = true, .entropy = true});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto cfg = rigidity::ExperimentConfig::parse_file(inv.config_path);
        const rigidity::RunOptions opt{inv.out_dir, inv.seed, inv.threads};
        const rigidity::Verdict v = rigidity::run_experiment(cfg, inv.sel, opt);
        std::cout << v.render();
        return 0;
    } catch (const rigidity::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
