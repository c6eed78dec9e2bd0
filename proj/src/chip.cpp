#include "memlif/chip.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace memlif {

BiasConfig default_bias() {
    return BiasConfig{};
}

PowerModel default_power_model() {
    return PowerModel{};
}

NeuronParams default_neuron_params() {
    return default_calibrated_params().neuron;
}

CalibratedParams default_calibrated_params() {
    // Frozen output of fit(default_anchors(), seed 12345); see calibration.
    CalibratedParams cp;
    cp.neuron = NeuronParams{};
    cp.vpw_dc = 1.1;
    return cp;
}

std::vector<Violation> validate(const BiasConfig& cfg) {
    std::vector<Violation> out;
    auto range_check = [&](const char* name, double v) {
        if (!(v >= 0.0 && v <= cfg.vdd)) {
            std::ostringstream os;
            os << name << " = " << v << " outside [0, vdd = " << cfg.vdd << "]";
            out.push_back({name, os.str()});
        }
    };
    if (!(cfg.vdd > 0.0))
        out.push_back({"vdd", "vdd must be positive"});
    range_check("vref", cfg.vref);
    range_check("vopa", cfg.vopa);
    range_check("vgain", cfg.vgain);
    range_check("vtaun", cfg.vtaun);
    range_check("vtaup", cfg.vtaup);
    range_check("vrest", cfg.vrest);
    range_check("vthr", cfg.vthr);
    range_check("vbcomp", cfg.vbcomp);
    range_check("vpw", cfg.vpw);
    if (!(cfg.vrest < cfg.vthr)) {
        std::ostringstream os;
        os << "vrest = " << cfg.vrest << " must be < vthr = " << cfg.vthr
           << " (rest above threshold fires unconditionally)";
        out.push_back({"vrest", os.str()});
    }
    if (!(cfg.vrest > 0.0))
        out.push_back({"vrest", "vrest must be above the 0 V reset level"});
    return out;
}

std::vector<Violation> validate(const NeuronParams& p) {
    std::vector<Violation> out;
    if (!(p.c1 > 0.0)) out.push_back({"c1", "c1 must be > 0"});
    if (!(p.attenuation_k > 0.0))
        out.push_back({"attenuation_k", "attenuation_k must be > 0"});
    if (!(p.pw_slope > 0.0)) out.push_back({"pw_slope", "pw_slope must be > 0"});
    if (!(p.v_leak_slope > 0.0))
        out.push_back({"v_leak_slope", "v_leak_slope must be > 0"});
    if (!(p.i_dn0 >= 0.0)) out.push_back({"i_dn0", "i_dn0 must be >= 0"});
    if (!(p.i_up0 >= 0.0)) out.push_back({"i_up0", "i_up0 must be >= 0"});
    if (!(p.pw_t0 > 0.0)) out.push_back({"pw_t0", "pw_t0 must be > 0"});
    if (p.vreset != 0.0)
        out.push_back({"vreset", "vreset is fixed at 0 V (reset to ground)"});
    return out;
}

std::vector<Violation> validate(const PowerModel& pm) {
    std::vector<Violation> out;
    auto nonneg = [&](const char* name, double v) {
        if (!(v >= 0.0)) out.push_back({name, std::string(name) + " must be >= 0"});
    };
    nonneg("ldo_static", pm.ldo_static);
    nonneg("ldo_dynamic", pm.ldo_dynamic);
    nonneg("atten_static", pm.atten_static);
    nonneg("atten_dynamic", pm.atten_dynamic);
    nonneg("neuron_static_fast", pm.neuron_static_fast);
    nonneg("neuron_espike_fast", pm.neuron_espike_fast);
    nonneg("neuron_static_lp", pm.neuron_static_lp);
    nonneg("neuron_espike_lp", pm.neuron_espike_lp);
    return out;
}

ComparatorMode comparator_mode_from_bias(const BiasConfig& cfg) {
    return cfg.vbcomp >= 2.0 ? ComparatorMode::Fast : ComparatorMode::LowPower;
}

namespace {
[[noreturn]] void throw_violations(const char* what,
                                   const std::vector<Violation>& v) {
    std::ostringstream os;
    os << what << ":";
    for (const auto& viol : v) os << " [" << viol.message << "]";
    throw std::invalid_argument(os.str());
}
} // namespace

void require_valid(const BiasConfig& cfg) {
    auto v = validate(cfg);
    if (!v.empty()) throw_violations("invalid bias config", v);
}

void require_valid(const NeuronParams& p) {
    auto v = validate(p);
    if (!v.empty()) throw_violations("invalid neuron params", v);
}

} // namespace memlif
