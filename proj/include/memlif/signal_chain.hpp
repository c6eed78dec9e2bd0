#pragma once

#include "memlif/chip.hpp"

namespace memlif {

// One synaptic read: drive voltage applied across a series resistance into
// the LDO-clamped column node. All values SI.
struct SynapseRead {
    double r_syn = 10e3; // ohms, R_ext + R_IC
    double v_in = 0.0;   // volts on terminal IN
    double v_ref = 2.4;  // volts, clamp level
};

struct AttenuatorOut {
    double i_att = 0.0;     // amperes, downscaled current
    bool saturated = false; // input exceeded the modeled swing
};

// Input current swing the attenuator is sized for; beyond it the output
// clamps and the saturated flag is raised.
inline constexpr double kAttenuatorInputCeiling = 200e-6;

// Ohmic read current, one-sided: the LDO pass transistor only sources
// current, so v_in <= v_ref reads as zero rather than negative.
// Throws std::invalid_argument for nonpositive r_syn.
double synapse_current(const SynapseRead& read);

// Voltage at the clamped column node: v_ref while the clamp conducts,
// v_in otherwise (no current path, node follows the input).
double ldo_node_voltage(const SynapseRead& read);

// Scale by 1/attenuation_k, hard-clamping inputs above the 200 uA ceiling.
// Throws std::invalid_argument for negative input.
AttenuatorOut attenuate(double i_syn, const NeuronParams& params);

// Full read path: synapse current then attenuation.
AttenuatorOut read_chain(const SynapseRead& read, const NeuronParams& params);

// Optional first-order lag on the read current, for LDO settling
// sensitivity studies. tau = 0 is an exact passthrough (the default).
class LdoLag {
  public:
    explicit LdoLag(double tau_seconds = 0.0) : tau_(tau_seconds) {}
    double filter(double i_syn, double dt);
    void reset() { state_ = 0.0; }
    double tau() const { return tau_; }

  private:
    double tau_ = 0.0;
    double state_ = 0.0;
};

} // namespace memlif
