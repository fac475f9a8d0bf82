#include "ermakov/lab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    using namespace ermakov::lab;

    CLI::App app{"ermakov_lab - measured oscillator invariants: ODE, PDE and identity checks"};
    app.require_subcommand(1);

    std::string run_config;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario in the mode named by its config");
    run_cmd->add_option("config", run_config, "Scenario JSON file")->required();

    std::string verify_config;
    auto* verify_cmd = app.add_subcommand("verify", "Run the verification report for a scenario");
    verify_cmd->add_option("config", verify_config, "Scenario JSON file")->required();

    std::string sweep_config, parameter, values;
    bool sweep_verify = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a scenario over values of one numeric field");
    sweep_cmd->add_option("config", sweep_config, "Scenario JSON file")->required();
    sweep_cmd->add_option("--param", parameter, "Field name (leaf such as tau, or dotted path params.tau)")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated list of values")->required();
    sweep_cmd->add_flag("--verify", sweep_verify, "Run each point in verify mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kConfigError;
    }

    if (*run_cmd) return run(run_config, std::cerr);
    if (*verify_cmd) return run(verify_config, std::cerr, Mode::Verify);
    return sweep(sweep_config, parameter, values, std::cerr,
                 sweep_verify ? std::optional<Mode>(Mode::Verify) : std::nullopt);
}
