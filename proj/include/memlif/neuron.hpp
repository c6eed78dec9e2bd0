#pragma once

#include "memlif/chip.hpp"

namespace memlif {

enum class NeuronPhase { Integrating, Spiking };

// Live state of one neuron. During the Spiking phase the reset transistor
// pins the membrane to ground and OUT sits at vdd for the whole pulse, so
// pulse width and refractory period are one mechanism.
struct NeuronState {
    double v_mem = 0.0;            // volts, in [0, vdd]
    NeuronPhase phase = NeuronPhase::Integrating;
    double spike_remaining = 0.0;  // seconds left in the output pulse
    double last_spike_time = -1.0; // seconds, < 0 when none yet
    double out = 0.0;              // volts, 0 or vdd

    static NeuronState at_rest(const BiasConfig& bias) {
        NeuronState s;
        s.v_mem = bias.vrest;
        return s;
    }
};

// Effective leak magnitudes for the current tau biases, both >= 0.
struct LeakSetting {
    double i_dn = 0.0; // amperes, applied above vrest
    double i_up = 0.0; // amperes, applied below vrest
};

enum class MembranePhaseCategory { RecentlyFired, NearRest, NearThreshold };

struct PhaseReadout {
    MembranePhaseCategory category = MembranePhaseCategory::NearRest;
    double trace = 0.0; // normalized membrane position in [-1, +1]
};

struct StepOutcome {
    bool spiked = false;
    double spike_offset = 0.0; // seconds into the step, valid when spiked
};

// Output pulse width for a given vpw bias: pw_t0 * exp(-(vpw - pw_v0)/pw_slope),
// monotone decreasing. Throws std::invalid_argument for nonpositive vpw.
double pulse_width(double vpw, const NeuronParams& params);

LeakSetting leak_setting(const BiasConfig& bias, const NeuronParams& params);

// Signed membrane leak: negative above vrest, positive below, zero at rest.
double leak_current(double v_mem, const BiasConfig& bias,
                    const NeuronParams& params);

// Advance one Euler step with the input frozen. Threshold crossings are
// located by linear interpolation inside the step; the residual tail of an
// expiring output pulse is integrated within the same step, so spike timing
// carries no dt-sized bias. Leak movement is magnitude-limited so it never
// overshoots vrest within a step.
// Throws std::invalid_argument for dt <= 0 or negative input current.
StepOutcome step(NeuronState& state, double i_att, double dt,
                 const BiasConfig& bias, const NeuronParams& params);

// Same semantics with the bias-derived constants hoisted out of the loop.
StepOutcome step(NeuronState& state, double i_att, double dt,
                 const BiasConfig& bias, const NeuronParams& params,
                 const LeakSetting& leaks, double t_pw);

// Closed-form firing rate for a constant synaptic drive current, the oracle
// the stepped model is verified against:
//   T = T_pw + c1*vrest/(i + i_up) + c1*(vthr - vrest)/(i - i_dn),  i = i_syn/K
// Returns 0 when the drive cannot defeat the downward leak.
double analytic_rate(double i_syn, const BiasConfig& bias,
                     const NeuronParams& params);

// VDSP membrane readout: normalized position between reset (-1) and
// threshold (+1), with a coarse category for where the neuron is in its
// cycle. near_threshold_fraction is the span fraction above which the
// category reads NearThreshold.
PhaseReadout membrane_phase_readout(double v_mem, const BiasConfig& bias,
                                    double near_threshold_fraction = 0.75);

} // namespace memlif
