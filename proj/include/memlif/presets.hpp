#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memlif/calibration.hpp"
#include "memlif/chip.hpp"
#include "memlif/config.hpp"
#include "memlif/engine.hpp"

namespace memlif::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCheckFailed = 3;

struct CommonOptions {
    std::string outdir = ".";
    std::optional<double> dt;
    std::optional<std::string> params_file;
    std::uint64_t seed = 12345;
    int jobs = 1;
    bool power_gating = false;
};

// Measurement helpers shared by presets, summaries and the acceptance suite.

// Pulse onsets at or before the neuron's first spike; 0 when it never fires.
std::size_t first_fire_pulse_count(const TraceSet& traces, std::size_t neuron,
                                   const Stimulus& stim);

// First time a probed series crosses below/above a level; NaN when it never
// does.
double first_crossing_below(const TraceSet& traces, std::size_t probe,
                            double level, double t_from = 0.0);
double first_crossing_above(const TraceSet& traces, std::size_t probe,
                            double level, double t_from = 0.0);

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string format_summary(const std::vector<CheckLine>& checks);

// Figure presets. Each writes <figure>_curve.csv, <figure>_trace.csv and
// summary.txt under outdir; returns kExitOk, or kExitCheckFailed when a
// summary verdict fails, kExitValidation/kExitUsage on bad input.
int cmd_reproduce(const std::string& figure, const CommonOptions& opt);

// One simulation per grid point, grid order preserved in sweep.csv.
int cmd_sweep(const std::string& config_path, const std::string& variable,
              double from, double to, int steps, bool log_spaced,
              const CommonOptions& opt);

// Fit against builtin anchors (empty path) or a user anchor CSV; writes
// fitted_params.txt and residual_report.csv.
int cmd_calibrate(const std::string& anchors_path, const CommonOptions& opt);

// Run a config file; writes run_trace.csv, run_spikes.csv, ledger.txt and
// summary.txt.
int cmd_run(const std::string& config_path, const CommonOptions& opt);

// Initial guess handed to the fit when calibrating from scratch.
NeuronParams calibration_initial_guess();

// Bundled parameters unless --params points at a file.
CalibratedParams resolve_params(const CommonOptions& opt);

} // namespace memlif::cli
