#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "scbl/commands.hpp"

int main(int argc, char** argv) {
    std::string commands;
    for (const auto& n : scbl::command_names()) commands += (commands.empty() ? "" : ", ") + n;

    CLI::App app{"Numerical lab for magnetic Schrodinger operators on flat tori"};
    std::string command, config, out, cache;
    int workers = 0;
    std::uint64_t seed = 0;
    app.add_option("command", command, "one of: " + commands)->required();
    app.add_option("--config", config, "JSON configuration")->required();
    auto* out_opt = app.add_option("--out", out, "output directory (default: config \"output\")");
    app.add_option("--workers", workers, "worker threads (default: logical cores)");
    auto* cache_opt = app.add_option("--cache", cache, "result cache directory")->envname("SCBL_CACHE");
    auto* seed_opt = app.add_option("--seed", seed, "random seed for stochastic estimators");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : scbl::exit_config;
    }

    scbl::CommandOptions opt;
    opt.config = config;
    opt.workers = workers;
    if (*out_opt) opt.out = out;
    if (*cache_opt) opt.cache = cache;
    if (*seed_opt) opt.seed = seed;
    return scbl::run_command(command, opt, std::cout, std::cerr);
}
