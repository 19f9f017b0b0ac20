// Command-line front end: price / fair-fee / policy / simulate over a
// config file. Exit codes: 0 success, 2 configuration error, 3 numerical
// fault.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hybridva/scenario.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides [run] out)");
    cmd->add_option("--seed", args.seed, "simulation seed (overrides [simulation] seed)")
        ->each([&](const std::string&) { args.seed_given = true; });
    cmd->add_option("--threads", args.threads, "worker threads for scenario cells");
}

hybridva::RunConfig resolve(const CommonArgs& args) {
    hybridva::RunConfig cfg = hybridva::load_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed_given) cfg.sim.seed = args.seed;
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid variable annuity pricing and policy analysis"};
    app.require_subcommand(1);

    CommonArgs price_args, fee_args, policy_args, sim_args;
    CLI::App* price = app.add_subcommand("price", "value the configured contract");
    add_common(price, price_args);
    CLI::App* fee = app.add_subcommand("fair-fee", "calibrate fair guarantee fees per cell");
    add_common(fee, fee_args);
    CLI::App* policy = app.add_subcommand("policy", "export optimal-withdrawal ratio surfaces");
    add_common(policy, policy_args);
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo replay of solved policies");
    add_common(simulate, sim_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (price->parsed()) hybridva::cmd_price(resolve(price_args));
        else if (fee->parsed()) hybridva::cmd_fair_fee(resolve(fee_args));
        else if (policy->parsed()) hybridva::cmd_policy(resolve(policy_args));
        else if (simulate->parsed()) hybridva::cmd_simulate(resolve(sim_args));
    } catch (const hybridva::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
