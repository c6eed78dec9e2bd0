#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "memlif/presets.hpp"

int main(int argc, char** argv) {
    CLI::App app{"memlif - behavioral simulator of a memristor-interfaced "
                 "analog LIF neuron chip"};
    app.require_subcommand(1);

    memlif::cli::CommonOptions opt;
    std::string params_file;
    double dt = 0.0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", opt.outdir, "output directory");
        sub->add_option("--dt", dt, "integration step override, seconds");
        sub->add_option("--params", params_file,
                        "parameter file from `calibrate`");
        sub->add_option("--seed", opt.seed, "random seed");
        sub->add_option("--jobs", opt.jobs, "worker threads for grids");
        sub->add_flag("--power-gating", opt.power_gating,
                      "gate read-path static power outside stimulus pulses");
    };

    std::string figure;
    auto* rep = app.add_subcommand("reproduce",
                                   "rerun a characterization experiment");
    rep->add_option("figure", figure,
                    "res | dc-rate | dc-pw | temporal | leak-down | leak-up | "
                    "adaptive")
        ->required();
    add_common(rep);

    std::string config_path;
    auto* runc = app.add_subcommand("run", "run a config file");
    runc->add_option("--config", config_path, "experiment config")->required();
    add_common(runc);

    std::string variable;
    double from = 0.0, to = 0.0;
    int steps = 1;
    bool log_spaced = false;
    auto* sweep = app.add_subcommand("sweep", "grid over a bias or stimulus field");
    sweep->add_option("--config", config_path, "experiment config")->required();
    sweep->add_option("--variable", variable,
                      "bias.<field> or stimulus.<field>")
        ->required();
    sweep->add_option("--from", from, "grid start")->required();
    sweep->add_option("--to", to, "grid end")->required();
    sweep->add_option("--steps", steps, "grid points")->required();
    sweep->add_flag("--log", log_spaced, "logarithmic spacing");
    add_common(sweep);

    std::string anchors_path;
    auto* cal = app.add_subcommand("calibrate",
                                   "fit physical constants to anchors");
    cal->add_option("--anchors", anchors_path,
                    "anchor CSV (omit for the builtin set)");
    add_common(cal);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return memlif::cli::kExitUsage;
    }

    if (dt > 0.0) opt.dt = dt;
    if (!params_file.empty()) opt.params_file = params_file;

    try {
        if (rep->parsed()) return memlif::cli::cmd_reproduce(figure, opt);
        if (runc->parsed()) return memlif::cli::cmd_run(config_path, opt);
        if (sweep->parsed())
            return memlif::cli::cmd_sweep(config_path, variable, from, to,
                                          steps, log_spaced, opt);
        if (cal->parsed()) return memlif::cli::cmd_calibrate(anchors_path, opt);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return memlif::cli::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return memlif::cli::kExitValidation;
    }
    return memlif::cli::kExitUsage;
}
