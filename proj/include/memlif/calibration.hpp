#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memlif/chip.hpp"

namespace memlif {

// What a calibration anchor measures. Each kind has a closed-form predictor
// so objective evaluations never need a stepped simulation.
enum class AnchorKind {
    DcRate,     // firing rate under constant drive i_syn at threshold vthr
    MaxRate,    // rate ceiling at full drive for a given vpw
    PulseWidth, // output pulse width at a given vpw
    LeakDecay,  // threshold-to-rest decay time at a given vtaun
    PulsedRate, // steady rate under a pulse train (i_syn, width, rate)
    ChargeCount // input pulses integrated before the first spike
};

// Equality target or one-sided bound (penalized only when violated).
enum class AnchorBound { Equal, AtLeast };

struct Anchor {
    AnchorKind kind = AnchorKind::DcRate;
    double target = 0.0; // hertz, seconds, or a pulse count
    double weight = 1.0;
    AnchorBound bound = AnchorBound::Equal;
    std::string source; // measurement-context label

    // Context, used per kind; unused fields stay at their defaults.
    double i_syn = 0.0;         // amperes, pre-attenuation drive
    double vthr = 1.2;          // volts
    double vpw = 1.0;           // volts
    double vtaun = 1.2;         // volts
    double pulse_width_s = 0.0; // seconds
    double pulse_rate_hz = 0.0; // hertz
};

struct AnchorSet {
    std::vector<Anchor> anchors;
};

// The measured transfer-curve, pulse-width, leak and pulsed-drive numbers
// the simulator is calibrated against. 14 anchors, weight 1 each.
AnchorSet default_anchors();

struct FitResult {
    NeuronParams params;
    double vpw_dc = 1.1;            // fitted DC-context pulse-width bias
    std::vector<double> residuals;  // per-anchor relative error, hinge-aware
    bool converged = false;
    std::size_t iterations = 0;     // objective evaluations spent
    double objective = 0.0;
    std::vector<double> best_objective_history; // best-so-far per evaluation
};

// Closed-form prediction of an anchor's observable for given parameters.
double predict_observable(const Anchor& anchor, const NeuronParams& params,
                          double vpw_dc);

// Hinge-aware relative error (0 for a satisfied one-sided bound).
double anchor_relative_error(const Anchor& anchor, double simulated);

// Exact two-point solve of the pulse-width map from PulseWidth anchors
// (log-linear least squares when more than two); params untouched when the
// set has fewer than two usable anchors.
void fit_pulse_width_map(const AnchorSet& anchors, NeuronParams& params);

// Derivative-free local search (Nelder-Mead over log-scaled parameters) with
// `restarts` extra random starts inside the bounds; deterministic for a
// fixed seed. Residuals are log-space because anchors span five decades.
// Bounds: c1 in [0.1 pF, 100 pF], leaks in [1 pA, 100 nA], slope in
// [20 mV, 300 mV], vpw_dc in [0.45 V, 1.1 V].
FitResult fit(const AnchorSet& anchors, const NeuronParams& initial,
              std::uint64_t seed = 12345, int restarts = 5);

struct ResidualRow {
    std::string descriptor;
    double target = 0.0;
    double simulated = 0.0;
    double rel_error = 0.0;
};

// One row per anchor, sorted by |relative error| descending.
std::vector<ResidualRow> residual_report(const FitResult& fit,
                                         const AnchorSet& anchors);

std::vector<std::string> residual_report_csv(
    const std::vector<ResidualRow>& rows);

// Anchor CSV format:
//   kind,target,weight,bound,i_syn,vthr,vpw,vtaun,pulse_width_s,pulse_rate_hz,source
AnchorSet load_anchors_csv(const std::string& path);
void save_anchors_csv(const AnchorSet& anchors, const std::string& path);

// Fitted parameters as a key=value text file.
void save_params_file(const CalibratedParams& params, const std::string& path);
CalibratedParams load_params_file(const std::string& path);

} // namespace memlif
