// Batch experiment runner: loads a scenario config, sweeps ranks and
// balancer kinds on the simulated cluster, and writes the metrics CSV
// (plus optional plot data and forest snapshots).

#include "octolb/experiments.hpp"
#include "octolb/metrics.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw octolb::IoError("cannot read config file \"" + path + "\"");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::string plot_out;
    std::string snapshot_dir;
    std::string balancers; // comma separated
    std::string p_list;    // comma separated
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config (JSON)");
    if (config_required)
        opt->required();
    cmd->add_option("--out", flags.out, "output CSV path (overrides the config)");
    cmd->add_option("--plot-out", flags.plot_out, "plot data path (overrides the config)");
    cmd->add_option("--snapshot-dir", flags.snapshot_dir,
                    "directory for forest snapshots, one file per run");
    cmd->add_option("--balancer", flags.balancers,
                    "comma separated balancers (sfc_hilbert, sfc_morton, diffusive, "
                    "greedy_global)");
    cmd->add_option("--p", flags.p_list, "comma separated rank counts");
    cmd->add_option("--seed", flags.seed, "scenario seed");
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

octolb::ExperimentConfig load_config(const CommonFlags& flags, const char* fallback) {
    const std::string text =
        flags.config_path.empty() ? std::string(fallback) : read_file(flags.config_path);
    octolb::ExperimentConfig cfg = octolb::validate_config(text);
    if (!flags.out.empty())
        cfg.out = flags.out;
    if (!flags.plot_out.empty())
        cfg.plot_out = flags.plot_out;
    if (!flags.snapshot_dir.empty())
        cfg.snapshot_dir = flags.snapshot_dir;
    if (!flags.balancers.empty()) {
        const std::uint32_t iterations =
            cfg.balancers.empty() ? 10 : cfg.balancers.front().iterations;
        cfg.balancers.clear();
        for (const std::string& name : split_csv(flags.balancers))
            cfg.balancers.push_back(octolb::Balancer::parse(name, iterations));
        if (cfg.balancers.empty())
            throw octolb::ValidationError("--balancer: empty list");
    }
    if (!flags.p_list.empty()) {
        cfg.p_sweep.clear();
        for (const std::string& p : split_csv(flags.p_list))
            cfg.p_sweep.push_back(static_cast<std::uint32_t>(std::stoul(p)));
    }
    if (flags.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.hopper.velocity_seed = cfg.seed;
    }
    return cfg;
}

int run(const octolb::ExperimentConfig& cfg) {
    const std::vector<octolb::ExperimentRecord> rows = octolb::run_experiment(cfg);
    octolb::report_csv(rows, cfg.out);
    if (!cfg.plot_out.empty())
        octolb::write_plot_data(rows, cfg.plot_out);
    std::cout << rows.size() << " rows -> " << cfg.out << "\n";
    return 0;
}

constexpr const char* kDefaultSweepConfig = R"({
  "scenario": {"type": "sweep", "leaves_per_rank": 8, "leaf_weight": 1000},
  "balancers": ["sfc_hilbert", "sfc_morton", "diffusive", "greedy_global"],
  "p_sweep": [8, 64, 512, 4096],
  "out": "sweep.csv"
})";

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"forest-of-octrees load balancing laboratory"};
    app.require_subcommand(1);

    CommonFlags static_flags, hopper_flags, sweep_flags;
    CLI::App* cmd_static =
        app.add_subcommand("static", "hcp box-fill scenario: baseline, one pipeline run, gain");
    add_common(cmd_static, static_flags, true);
    CLI::App* cmd_hopper =
        app.add_subcommand("hopper", "hopper discharge time series with periodic rebalancing");
    add_common(cmd_hopper, hopper_flags, true);
    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "weak-scaling complexity sweep on synthetic forests");
    add_common(cmd_sweep, sweep_flags, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_static->parsed()) {
            octolb::ExperimentConfig cfg = load_config(static_flags, "");
            if (cfg.kind != octolb::ExperimentConfig::Kind::Static)
                throw octolb::ValidationError("scenario.type: expected \"static\"");
            return run(cfg);
        }
        if (cmd_hopper->parsed()) {
            octolb::ExperimentConfig cfg = load_config(hopper_flags, "");
            if (cfg.kind != octolb::ExperimentConfig::Kind::Hopper)
                throw octolb::ValidationError("scenario.type: expected \"hopper\"");
            return run(cfg);
        }
        octolb::ExperimentConfig cfg = load_config(sweep_flags, kDefaultSweepConfig);
        if (cfg.kind != octolb::ExperimentConfig::Kind::Sweep)
            throw octolb::ValidationError("scenario.type: expected \"sweep\"");
        return run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
