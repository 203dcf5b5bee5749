#include <iostream>

#include "CLI11.hpp"

#include "qlsv/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Experiment runner for random compositions of intermittent "
                 "interval maps"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute one configured experiment");
    std::string config_path;
    std::string out_dir, cache_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    run->add_option("config", config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--cache", cache_dir, "cache directory override");
    run->add_option("--seed", seed, "RNG seed override")
        ->each([&](const std::string&) { seed_set = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        qlsv::ExperimentConfig config =
            qlsv::ExperimentConfig::from_file(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!cache_dir.empty()) config.cache_dir = cache_dir;
        if (seed_set) config.seed = seed;

        const qlsv::RunResult res = qlsv::run_experiment(config);
        std::cout << qlsv::kVersionString << ": " << res.verdict << "\n";
        if (!res.manifest_path.empty()) {
            std::cout << "manifest: " << res.manifest_path.string() << "\n";
        }
        return res.exit_code;
    } catch (const qlsv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
