#include "memlif/signal_chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memlif {

double synapse_current(const SynapseRead& read) {
    if (!(read.r_syn > 0.0))
        throw std::invalid_argument("synapse_current: r_syn must be > 0");
    return std::max(0.0, (read.v_in - read.v_ref) / read.r_syn);
}

double ldo_node_voltage(const SynapseRead& read) {
    return read.v_in > read.v_ref ? read.v_ref : read.v_in;
}

AttenuatorOut attenuate(double i_syn, const NeuronParams& params) {
    if (i_syn < 0.0)
        throw std::invalid_argument("attenuate: input current must be >= 0");
    AttenuatorOut out;
    out.saturated = i_syn > kAttenuatorInputCeiling;
    const double i_in = out.saturated ? kAttenuatorInputCeiling : i_syn;
    out.i_att = i_in / params.attenuation_k;
    return out;
}

AttenuatorOut read_chain(const SynapseRead& read, const NeuronParams& params) {
    return attenuate(synapse_current(read), params);
}

double LdoLag::filter(double i_syn, double dt) {
    if (tau_ <= 0.0) {
        state_ = i_syn;
        return i_syn;
    }
    const double alpha = 1.0 - std::exp(-dt / tau_);
    state_ += alpha * (i_syn - state_);
    return state_;
}

} // namespace memlif
