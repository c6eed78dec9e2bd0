#include "memlif/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memlif {

double pulse_width(double vpw, const NeuronParams& params) {
    if (!(vpw > 0.0))
        throw std::invalid_argument("pulse_width: vpw must be > 0");
    return params.pw_t0 * std::exp(-(vpw - params.pw_v0) / params.pw_slope);
}

LeakSetting leak_setting(const BiasConfig& bias, const NeuronParams& params) {
    LeakSetting ls;
    ls.i_dn = params.i_dn0 * std::exp((bias.vtaun - 1.2) / params.v_leak_slope);
    ls.i_up = params.i_up0 * std::exp((bias.vtaup - 1.2) / params.v_leak_slope);
    return ls;
}

double leak_current(double v_mem, const BiasConfig& bias,
                    const NeuronParams& params) {
    const LeakSetting ls = leak_setting(bias, params);
    if (v_mem > bias.vrest) return -ls.i_dn;
    if (v_mem < bias.vrest) return ls.i_up;
    return 0.0;
}

namespace {

// Integrate the membrane for a slice h inside the current step, starting
// `offset` seconds after the step boundary. Fires at most once.
StepOutcome integrate_slice(NeuronState& state, double i_att, double h,
                            double offset, const BiasConfig& bias,
                            const NeuronParams& params,
                            const LeakSetting& leaks, double t_pw) {
    StepOutcome outcome;
    if (h <= 0.0) return outcome;

    const double v_old = state.v_mem;
    double spike_frac = -1.0;

    if (v_old >= bias.vthr) {
        // Comparator already high (threshold pulled below the membrane).
        spike_frac = 0.0;
    } else {
        double dv_leak;
        if (v_old > bias.vrest)
            dv_leak = std::max(-h * leaks.i_dn / params.c1,
                               bias.vrest - v_old);
        else if (v_old < bias.vrest)
            dv_leak = std::min(h * leaks.i_up / params.c1,
                               bias.vrest - v_old);
        else
            dv_leak = 0.0;

        double v_new = v_old + h * i_att / params.c1 + dv_leak;
        v_new = std::clamp(v_new, 0.0, bias.vdd);

        if (v_new >= bias.vthr)
            spike_frac = (bias.vthr - v_old) / (v_new - v_old);
        else
            state.v_mem = v_new;
    }

    if (spike_frac >= 0.0) {
        state.phase = NeuronPhase::Spiking;
        state.v_mem = 0.0;
        state.out = bias.vdd;
        // Part of this step is already spent inside the pulse.
        state.spike_remaining = t_pw - (h - spike_frac * h);
        outcome.spiked = true;
        outcome.spike_offset = offset + spike_frac * h;
    }
    return outcome;
}

} // namespace

StepOutcome step(NeuronState& state, double i_att, double dt,
                 const BiasConfig& bias, const NeuronParams& params,
                 const LeakSetting& leaks, double t_pw) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    if (i_att < 0.0)
        throw std::invalid_argument("step: input current must be >= 0");

    if (state.phase == NeuronPhase::Spiking) {
        state.spike_remaining -= dt;
        if (state.spike_remaining <= 0.0) {
            // Pulse ended inside this step; integrate the leftover tail.
            const double leftover = std::min(-state.spike_remaining, dt);
            state.phase = NeuronPhase::Integrating;
            state.out = 0.0;
            state.spike_remaining = 0.0;
            return integrate_slice(state, i_att, leftover, dt - leftover,
                                   bias, params, leaks, t_pw);
        }
        state.v_mem = 0.0;
        state.out = bias.vdd;
        return {};
    }

    return integrate_slice(state, i_att, dt, 0.0, bias, params, leaks, t_pw);
}

StepOutcome step(NeuronState& state, double i_att, double dt,
                 const BiasConfig& bias, const NeuronParams& params) {
    return step(state, i_att, dt, bias, params, leak_setting(bias, params),
                pulse_width(bias.vpw, params));
}

double analytic_rate(double i_syn, const BiasConfig& bias,
                     const NeuronParams& params) {
    const double i = i_syn / params.attenuation_k;
    const LeakSetting ls = leak_setting(bias, params);
    if (i <= ls.i_dn) return 0.0;
    const double t_pw = pulse_width(bias.vpw, params);
    const double t_recover = params.c1 * bias.vrest / (i + ls.i_up);
    const double t_climb =
        params.c1 * (bias.vthr - bias.vrest) / (i - ls.i_dn);
    return 1.0 / (t_pw + t_recover + t_climb);
}

PhaseReadout membrane_phase_readout(double v_mem, const BiasConfig& bias,
                                    double near_threshold_fraction) {
    PhaseReadout r;
    const double span = bias.vthr - bias.vrest;
    r.trace = std::clamp((v_mem - bias.vrest) / span, -1.0, 1.0);
    if (v_mem < bias.vrest)
        r.category = MembranePhaseCategory::RecentlyFired;
    else if (r.trace >= near_threshold_fraction)
        r.category = MembranePhaseCategory::NearThreshold;
    else
        r.category = MembranePhaseCategory::NearRest;
    return r;
}

} // namespace memlif
