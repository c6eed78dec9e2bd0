#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "memlif/chip.hpp"
#include "memlif/engine.hpp"

namespace memlif {

struct Diagnostic {
    std::size_t line = 0; // 0 for file-level problems
    std::string message;
};

// [stimulus] section: one drive source plus the read chain it feeds.
struct StimulusSection {
    std::string kind = "dc"; // dc | pulse_train | single_pulse
    double level = 0.0;      // volts, absolute drive on IN while active
    double width = 0.0;
    double rate = 0.0;
    double start = 0.0;
    double r_syn = 10e3;
    std::optional<double> v_ref;
    double ldo_tau = 0.0;
};

// [crossbar] section: optional two-layer topology. `rows` input neurons all
// share the configured stimulus chain; each column feeds one output neuron.
struct CrossbarSection {
    bool enabled = false;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string file;   // conductance CSV; uniform `g` when empty
    double g = 0.0;
    double g_min = 1e-6;
    double g_max = 1e-4;
    bool vdsp = false;
    double eta_pot = 0.1;
    double eta_dep = 0.1;
};

struct ExperimentSection {
    double duration = 0.1;
    double dt = 1e-6;
    std::vector<std::string> record; // defaults to mem:0,out:0
    std::size_t decimation = 1;
    bool power_gating = false;
};

struct ParsedConfig {
    BiasConfig bias;
    CalibratedParams params;
    PowerModel power;
    StimulusSection stimulus;
    CrossbarSection crossbar;
    ExperimentSection experiment;
};

struct ParseResult {
    std::optional<ParsedConfig> config; // set when diagnostics is empty
    std::vector<Diagnostic> diagnostics;
};

// Sectioned key=value text: [bias], [params], [experiment], [stimulus],
// [crossbar], [power]. Unknown sections/keys, type mismatches and invariant
// violations come back as line-numbered diagnostics; omitted keys fall back
// to the defaults. An empty file parses to the all-default config.
ParseResult parse_config(const std::string& text);

ParseResult parse_config_file(const std::string& path);

// Canonical text form; parse(serialize(cfg)) reproduces cfg exactly.
std::string serialize_config(const ParsedConfig& cfg);

// Assign a swept variable: "bias.<field>" or "stimulus.<field>".
// Throws std::invalid_argument for unknown names.
void set_config_value(ParsedConfig& cfg, const std::string& variable,
                      double value);

// Wire the configured topology into a runnable experiment.
// Throws std::runtime_error when a crossbar file cannot be loaded.
Experiment build_experiment(const ParsedConfig& cfg);

} // namespace memlif
