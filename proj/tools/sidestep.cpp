#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sidestep/driver.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Trace-expansion experiments: run models, fit expansions, detect bases, certify bounds"};
    app.require_subcommand(1, 1);

    sidestep::driver_options opt;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;

    const char* help[][2] = {
        {"run", "sample the model over n_grid and write trace tables"},
        {"analyze", "fit the expansion, detect larger bases, estimate amplitudes"},
        {"certify", "check the Markov, real-trace, exceptional and sidestepping bounds"},
        {"report", "collect stage outputs into report.md"},
    };
    for (const auto& [name, text] : help) {
        auto* sub = app.add_subcommand(name, text);
        sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out, "override the output directory");
        sub->add_option("--threads", threads, "worker threads (default: SIDESTEP_THREADS or 1)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sidestep::exit_config;
    }
    opt.seed = seed;
    opt.out = out;
    opt.threads = sidestep::resolve_threads(threads);
    return sidestep::run_command(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
