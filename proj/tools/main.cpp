#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "mtlsched/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-task training schedules: hand-engineered, oracle-guided, learned"};
    app.require_subcommand(1);

    std::string run_config;
    std::string compare_config;
    mtlsched::CliOverrides run_overrides;
    mtlsched::CliOverrides compare_overrides;

    CLI::App* run = app.add_subcommand("run", "train one schedule from a config file");
    run->add_option("config", run_config, "config file (JSON)")->required();
    run->add_option("--seed", run_overrides.seed, "override the config seed");
    run->add_option("--out", run_overrides.out_dir, "override the output directory");

    CLI::App* compare =
        app.add_subcommand("compare", "run every listed schedule on shared data");
    compare->add_option("config", compare_config, "config file (JSON)")->required();
    compare->add_option("--seed", compare_overrides.seed, "override the config seed");
    compare->add_option("--out", compare_overrides.out_dir, "override the output directory");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return mtlsched::run_experiment(run_config, run_overrides);
    return mtlsched::compare_schedules(compare_config, compare_overrides);
}
