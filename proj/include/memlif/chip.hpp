#pragma once

#include <string>
#include <vector>

namespace memlif {

// Comparator bias trade-off: a fast comparator burns static power, a slow one
// charges more per spike.
enum class ComparatorMode { Fast, LowPower };

// External bias voltages, all in volts. Field names follow the chip's pin
// names lowercased; these are the knobs every experiment turns.
struct BiasConfig {
    double vdd = 3.3;     // power supply
    double vref = 2.4;    // LDO reference
    double vopa = 2.4;    // OPAMP bias (LDO); stored, no behavioral role
    double vgain = 2.1;   // gain modulation; stored, no behavioral role
    double vtaun = 1.2;   // leak rate, downward
    double vtaup = 1.2;   // leak rate, upward
    double vrest = 0.6;   // resting potential
    double vthr = 1.2;    // spiking threshold
    double vbcomp = 2.4;  // comparator bias; >= 2.0 selects Fast mode
    double vpw = 1.0;     // output pulse width / refractory modulation
};

// Calibratable physical constants of one neuron plus the read chain it hangs
// off. Leak magnitudes scale exponentially with their bias voltages around
// the 1.2 V typical point.
struct NeuronParams {
    // Physical constants default to the fit against the builtin anchors.
    double c1 = 8.084153389578697e-12;       // membrane capacitance, farads
    double attenuation_k = 500.0;            // current attenuator ratio
    double i_dn0 = 4.4910271645827426e-11;   // downward leak at vtaun = 1.2 V
    double i_up0 = 4.66813067758111e-10;     // upward leak at vtaup = 1.2 V
    double v_leak_slope = 0.05763183297381523; // bias sensitivity, volts
    double pw_t0 = 20e-3;         // pulse width at vpw = pw_v0, seconds
    double pw_v0 = 0.45;          // volts
    double pw_slope = 0.07235982870817355; // volts, 0.55/ln(2000)
    double vreset = 0.0;          // reset level, fixed at ground
    ComparatorMode comparator_mode = ComparatorMode::Fast;
};

// Per-block power numbers used by the energy ledger. Static entries are
// watts, espike entries joules per emitted spike.
struct PowerModel {
    double ldo_static = 10e-6;
    double ldo_dynamic = 18e-6;
    double atten_static = 10e-12;
    double atten_dynamic = 20e-6;
    double neuron_static_fast = 5e-6;
    double neuron_espike_fast = 200e-12;
    double neuron_static_lp = 17e-9;
    double neuron_espike_lp = 7e-9;
};

struct Violation {
    std::string field;
    std::string message;
};

// Typical bias column. Self-validates.
BiasConfig default_bias();

PowerModel default_power_model();

// Shipped calibrated constants (output of fitting the builtin anchors).
NeuronParams default_neuron_params();

// Pulse-width bias of the DC transfer-curve context, a calibration output
// that rides along with NeuronParams in parameter files.
struct CalibratedParams {
    NeuronParams neuron;
    double vpw_dc = 1.1;
};

CalibratedParams default_calibrated_params();

// Every violated invariant, by field. Empty result means the config is good.
// Violations are the return value, not a fault.
std::vector<Violation> validate(const BiasConfig& cfg);
std::vector<Violation> validate(const NeuronParams& p);
std::vector<Violation> validate(const PowerModel& pm);

ComparatorMode comparator_mode_from_bias(const BiasConfig& cfg);

// Throws std::invalid_argument listing all violations.
void require_valid(const BiasConfig& cfg);
void require_valid(const NeuronParams& p);

} // namespace memlif
