#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memlif/chip.hpp"
#include "memlif/neuron.hpp"

namespace memlif {

// 1T1R synaptic array: per-cell conductance gated row-wise by the
// presynaptic output pulses. Conductances are either 0 (unformed) or inside
// the device window [g_min, g_max].
struct Crossbar {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> conductance; // row-major, siemens
    std::vector<bool> gate;          // per row; true while the pre spikes
    double g_min = 1e-6;
    double g_max = 1e-4;

    Crossbar() = default;
    Crossbar(std::size_t rows_, std::size_t cols_, double g_min_ = 1e-6,
             double g_max_ = 1e-4);

    double& at(std::size_t row, std::size_t col);
    double at(std::size_t row, std::size_t col) const;

    std::vector<Violation> validate() const;
};

struct AdaptivePair {
    std::size_t primary = 0;
    std::size_t regulator = 0;
    double link_resistance = 10e3; // ohms, primary OUT -> regulator IN
};

struct VdspParams {
    double eta_pot = 0.1; // potentiation rate in (0, 1]
    double eta_dep = 0.1; // depression rate in (0, 1]
    double g_min = 1e-6;  // siemens
    double g_max = 1e-4;  // siemens
};

// Summed read current of one column for a shared row-line voltage: cells on
// gated rows conduct max(0, v_in - v_ref) * G, the rest contribute nothing.
// Throws std::out_of_range for a bad column index.
double column_current(const Crossbar& xbar, std::size_t col, double v_in,
                      double v_ref);

// Drive the access gates from the presynaptic spike lines; gates stay high
// for exactly the duration of the output pulse because the caller refreshes
// them every step. Throws std::invalid_argument on length mismatch.
void spike_to_gates(Crossbar& xbar, const std::vector<bool>& spikes);

// Threshold of the primary neuron in an adaptive pair: the regulator
// membrane, floored (default floor is vrest, where the measured threshold
// trajectories start).
double adaptive_threshold(const AdaptivePair& pair,
                          const NeuronState& regulator_state, double floor);

// One VDSP weight update at a presynaptic spike instant. The postsynaptic
// membrane trace in [-1, +1] selects depression (negative: the post fired
// recently) or potentiation (positive: the post is close to firing), with
// multiplicative steps that keep g inside [g_min, g_max].
// Throws std::invalid_argument when g lies outside the device window.
double vdsp_update(double g, double post_trace, const VdspParams& p);

// Input current a shared regulator receives when some of its pool spike:
// each spiking member drives v_out through an identical link resistance into
// the regulator's read chain; currents superpose before attenuation.
// Throws std::invalid_argument for an empty pool or size mismatch.
double shared_regulator_current(const std::vector<std::size_t>& pool,
                                const std::vector<bool>& spiking,
                                double v_out, double v_ref,
                                double link_resistance);

// Conductance matrices as row-major CSV, siemens.
void save_crossbar_csv(const Crossbar& xbar, const std::string& path);
Crossbar load_crossbar_csv(const std::string& path, double g_min = 1e-6,
                           double g_max = 1e-4);

} // namespace memlif
