// mrsq: command-line front end for the quantification experiments.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mrsq/error.hpp"
#include "mrsq/harness/config.hpp"
#include "mrsq/harness/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args)
{
    cmd->add_option("--config", args.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "Output directory");
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--workers", args.workers, "Worker threads for generation and fitting (1 = bit-deterministic)")
        ->check(CLI::PositiveNumber);
}

mrsq::harness::Experiment make_experiment(const CommonArgs& args)
{
    auto cfg = args.config.empty() ? mrsq::harness::ExperimentConfig{} : mrsq::harness::load_experiment_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    return mrsq::harness::Experiment(cfg, args.out, args.workers);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"MRS quantification toolkit: synthetic data, VARPRO-LM fitting and CNN regression"};
    app.require_subcommand(1);
    CommonArgs args;

    struct Command {
        const char* name;
        const char* help;
        void (mrsq::harness::Experiment::*run)();
    };
    const Command commands[] = {
        {"gen-basis", "Write the basis file into the output directory", &mrsq::harness::Experiment::gen_basis},
        {"gen-data", "Generate train/test datasets for every SNR", &mrsq::harness::Experiment::gen_data},
        {"train", "Train one network per SNR", &mrsq::harness::Experiment::train},
        {"fit", "Run the VARPRO-LM baseline on every test set", &mrsq::harness::Experiment::fit},
        {"eval", "Write SMAPE tables and scatter data", &mrsq::harness::Experiment::eval},
        {"learning-curve", "Train on nested subsets and report train/val losses",
         &mrsq::harness::Experiment::learning_curves},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), args);

    CLI11_PARSE(app, argc, argv);

    try {
        auto exp = make_experiment(args);
        for (const auto& c : commands) {
            if (app.got_subcommand(c.name)) (exp.*c.run)();
        }
    } catch (const mrsq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
