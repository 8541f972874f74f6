#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "solpol/experiment.hpp"
#include "solpol/traces.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "JSON experiment config (defaults when omitted)");
    cmd->add_option("--seed", a.seed, "Run seed, overrides the config");
    cmd->add_option("--out", a.out, "Output directory, overrides the config");
    cmd->add_option("--override", a.overrides, "Dotted config override key=value (repeatable)");
}

solpol::ExperimentConfig resolve(const CommonArgs& a) {
    solpol::ExperimentConfig c = a.config_path.empty() ? solpol::ExperimentConfig{} : solpol::load_config(a.config_path);
    c = solpol::apply_overrides(c, a.overrides);
    if (a.seed) c.seed = *a.seed;
    if (!a.out.empty()) c.output_dir = a.out;
    solpol::validate(c);
    return c;
}

void print_summary(const solpol::RunOutputs& o) {
    std::cout << "mode " << solpol::to_string(o.config.mode) << " vs " << solpol::to_string(o.config.baseline)
              << ", episodes " << o.episodes << ", infeasible plans " << o.infeasible_plans << ", clipped actions "
              << o.clipped_actions << "\n";
    solpol::print_metric_table(o.report, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned virtual-price planning for building storage, with guided evolutionary search"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, bb_args;
    auto* run = app.add_subcommand("run", "Run one experiment and write its outputs");
    add_common(run, run_args);

    auto* sweep = app.add_subcommand("sweep", "Grid sweep over config keys, several seeds per cell");
    add_common(sweep, sweep_args);
    std::vector<std::string> axes;
    std::size_t n_seeds = 10;
    sweep->add_option("--grid", axes, "Axis key=v1,v2,... (repeatable; cells are the Cartesian product)");
    sweep->add_option("--seeds", n_seeds, "Seeds per cell")->check(CLI::PositiveNumber);

    auto* bb = app.add_subcommand("blackbox", "Convergence suite on synthetic test functions");
    add_common(bb, bb_args);

    auto* gen = app.add_subcommand("gen-data", "Write synthetic building traces as CSV");
    std::size_t n_buildings = 9, n_weeks = 52;
    std::uint64_t data_seed = 2021;
    double noise = 0.1;
    std::string data_out = "traces.csv";
    gen->add_option("--buildings", n_buildings, "Number of buildings")->check(CLI::PositiveNumber);
    gen->add_option("--weeks", n_weeks, "Number of weeks")->check(CLI::PositiveNumber);
    gen->add_option("--seed", data_seed, "Generator seed");
    gen->add_option("--noise", noise, "Relative multiplicative noise")->check(CLI::Range(0.0, 0.99));
    gen->add_option("--out", data_out, "Output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            const auto cfg = resolve(run_args);
            const auto out = solpol::run_experiment(cfg);
            solpol::write_outputs(out, cfg.output_dir);
            if (cfg.mode != solpol::RunMode::Blackbox) print_summary(out);
            std::cout << "outputs written to " << cfg.output_dir << "\n";
        } else if (*sweep) {
            const auto cfg = resolve(sweep_args);
            std::vector<solpol::SweepAxis> grid;
            for (const auto& a : axes) grid.push_back(solpol::parse_sweep_axis(a));
            const auto result = solpol::run_sweep(cfg, grid, n_seeds, cfg.output_dir);
            const std::string csv = solpol::sweep_summary_csv(result);
            std::filesystem::create_directories(cfg.output_dir);
            std::ofstream(std::filesystem::path(cfg.output_dir) / "sweep_summary.csv", std::ios::binary) << csv;
            std::cout << csv;
        } else if (*bb) {
            auto cfg = resolve(bb_args);
            cfg.mode = solpol::RunMode::Blackbox;
            const auto out = solpol::run_blackbox_suite(cfg);
            solpol::write_outputs(out, cfg.output_dir);
            std::cout << "blackbox results written to " << cfg.output_dir << "/blackbox.csv\n";
        } else if (*gen) {
            const auto traces = solpol::generate_synthetic_traces(n_buildings, n_weeks, data_seed, noise);
            solpol::save_traces_csv(traces, data_out);
            std::cout << "wrote " << traces.size() << " buildings to " << data_out << "\n";
        }
    } catch (const solpol::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
