#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "memlif/chip.hpp"
#include "memlif/network.hpp"
#include "memlif/neuron.hpp"
#include "memlif/signal_chain.hpp"

namespace memlif {

// Piecewise-constant voltage source, sampled at step midpoints so pulse
// edges snap to the grid with bias below dt.
struct Stimulus {
    enum class Kind { Dc, PulseTrain, SinglePulse };
    Kind kind = Kind::Dc;
    double level = 0.0; // volts, absolute drive on IN while active
    double width = 0.0; // seconds, pulse duration
    double rate = 0.0;  // hertz, pulse train repetition
    double start = 0.0; // seconds, first pulse onset

    double value(double t) const;

    static Stimulus dc(double level);
    static Stimulus pulse_train(double amplitude, double width, double rate,
                                double start = 0.0);
    static Stimulus single_pulse(double amplitude, double width,
                                 double start = 0.0);
};

// One read path: a stimulus driving a series resistance into an LDO-clamped
// node, attenuated into a neuron.
struct ChainSpec {
    std::size_t stimulus = 0;
    std::size_t target = 0;
    double r_syn = 10e3;
    std::optional<double> v_ref;  // defaults to the run's bias.vref
    double ldo_tau = 0.0;         // first-order settling, 0 = instantaneous
};

struct NeuronSpec {
    std::string name;
    std::optional<BiasConfig> bias_override;
    std::optional<double> v_init; // defaults to vrest
};

// Crossbar wired between a set of presynaptic neurons (one per row) and
// postsynaptic neurons (one per column). Each column owns a read chain.
struct CrossbarSpec {
    Crossbar xbar;
    std::vector<std::size_t> row_sources;
    std::vector<std::size_t> col_targets;
    std::optional<double> v_ref;
    bool vdsp_enabled = false;
    VdspParams vdsp;
};

// Adaptive pair wiring: the primary's output pulses feed the regulator
// through a link resistance, and the regulator membrane (floored) becomes
// the primary's threshold.
struct AdaptiveLinkSpec {
    AdaptivePair pair;
    std::optional<double> v_ref;
    std::optional<double> floor; // defaults to vrest
};

struct Experiment {
    std::vector<Stimulus> stimuli;
    std::vector<NeuronSpec> neurons;
    std::vector<ChainSpec> chains;
    std::vector<CrossbarSpec> crossbars;
    std::vector<AdaptiveLinkSpec> adaptive_links;
    double duration = 0.0;
    double dt = 1e-6;
    std::vector<std::string> record; // probes: mem:<i> out:<i> thr:<i> iatt:<i> stim:<i>
    std::size_t decimation = 1;
    bool power_gating = false;
};

// Uniformly sampled probe series plus per-neuron spike event lists with
// interpolated spike times.
struct TraceSet {
    double t0 = 0.0;
    double dt = 0.0; // sample spacing (step dt times decimation)
    std::vector<std::string> probe_names;
    std::vector<std::vector<double>> series; // one vector per probe
    std::vector<std::vector<double>> spike_times; // one vector per neuron

    std::size_t samples() const {
        return series.empty() ? 0 : series[0].size();
    }
    // Empty result means the trace invariants hold (shared time base,
    // strictly increasing spike times with gaps >= each neuron's t_pw).
    std::vector<std::string> check_invariants(
        const std::vector<double>& t_pw_per_neuron) const;
};

struct EnergyLedger {
    double duration = 0.0;        // seconds actually simulated
    std::size_t read_paths = 0;   // LDO+attenuator instances
    double clamp_active_time = 0.0; // summed over paths, seconds
    double ldo_static = 0.0;      // joules from here on
    double ldo_dynamic = 0.0;
    double atten_static = 0.0;
    double atten_dynamic = 0.0;
    double neuron_static = 0.0;
    double neuron_spike = 0.0;
    std::vector<std::size_t> spike_count;        // per neuron
    std::vector<double> neuron_spike_energy;     // per neuron
    double total = 0.0;

    std::vector<std::string> to_keyvalue() const;
};

struct RunResult {
    TraceSet traces;
    EnergyLedger ledger;
    std::vector<NeuronState> final_states;
    std::vector<Crossbar> final_crossbars; // conductances after plasticity
    std::vector<double> t_pw; // effective pulse width per neuron
};

// Empty result means the experiment is runnable under the given globals.
std::vector<std::string> validate(const Experiment& exp,
                                  const BiasConfig& bias,
                                  const NeuronParams& params);

// Deterministic fixed-step run: stimuli -> read chains -> crossbar columns ->
// neurons (inputs frozen at step start) -> plasticity, with energy counted
// from integer step tallies so the ledger identity is exact. Trace rows
// sample the pre-step state at t = k*dt (row 0 is the initial state, the
// final row the end state); spike times are interpolated within their step.
// Throws std::invalid_argument when validate() reports problems.
RunResult run(const Experiment& exp, const BiasConfig& bias,
              const NeuronParams& params, const PowerModel& power);

// Spike count in [0, window] divided by window.
// Throws std::out_of_range for an unknown neuron.
double spike_rate(const TraceSet& traces, std::size_t neuron, double window);

// Mean-period estimate (n-1)/(t_n - t_1); quantization-free for periodic
// drives. Falls back to count/window when fewer than two spikes.
double steady_rate(const TraceSet& traces, std::size_t neuron, double window);

// CSV/text export. Trace header is `t_s,<probe>...`; spike log is
// `neuron,t_s` ordered by time.
std::vector<std::string> trace_csv_lines(const TraceSet& traces);
std::vector<std::string> spike_csv_lines(const TraceSet& traces);
void write_trace_csv(const TraceSet& traces, const std::string& path);
void write_spike_csv(const TraceSet& traces, const std::string& path);
void write_ledger(const EnergyLedger& ledger, const std::string& path);

} // namespace memlif
