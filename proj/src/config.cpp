#include "memlif/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "memlif/csv.hpp"
#include "memlif/network.hpp"

namespace memlif {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Parser {
    ParsedConfig cfg;
    std::vector<Diagnostic> diags;

    void err(std::size_t line, std::string msg) {
        diags.push_back({line, std::move(msg)});
    }

    bool number(std::size_t line, const std::string& key,
                const std::string& val, double& out) {
        try {
            out = csv::parse_double(val);
            return true;
        } catch (const std::exception&) {
            err(line, "key '" + key + "': expected a number, got '" + val + "'");
            return false;
        }
    }

    bool boolean(std::size_t line, const std::string& key,
                 const std::string& val, bool& out) {
        if (val == "true") { out = true; return true; }
        if (val == "false") { out = false; return true; }
        err(line, "key '" + key + "': expected true or false, got '" + val + "'");
        return false;
    }

    bool count(std::size_t line, const std::string& key,
               const std::string& val, std::size_t& out) {
        unsigned long long v = 0;
        const char* b = val.data();
        auto res = std::from_chars(b, b + val.size(), v);
        if (res.ec != std::errc{} || res.ptr != b + val.size()) {
            err(line, "key '" + key + "': expected a nonnegative integer");
            return false;
        }
        out = (std::size_t)v;
        return true;
    }

    void key_bias(std::size_t line, const std::string& k, const std::string& v) {
        double x;
        BiasConfig& b = cfg.bias;
        if (k == "vdd") { if (number(line, k, v, x)) b.vdd = x; }
        else if (k == "vref") { if (number(line, k, v, x)) b.vref = x; }
        else if (k == "vopa") { if (number(line, k, v, x)) b.vopa = x; }
        else if (k == "vgain") { if (number(line, k, v, x)) b.vgain = x; }
        else if (k == "vtaun") { if (number(line, k, v, x)) b.vtaun = x; }
        else if (k == "vtaup") { if (number(line, k, v, x)) b.vtaup = x; }
        else if (k == "vrest") { if (number(line, k, v, x)) b.vrest = x; }
        else if (k == "vthr") { if (number(line, k, v, x)) b.vthr = x; }
        else if (k == "vbcomp") { if (number(line, k, v, x)) b.vbcomp = x; }
        else if (k == "vpw") { if (number(line, k, v, x)) b.vpw = x; }
        else err(line, "unknown key '" + k + "' in [bias]");
    }

    void key_params(std::size_t line, const std::string& k,
                    const std::string& v) {
        double x;
        NeuronParams& p = cfg.params.neuron;
        if (k == "c1") { if (number(line, k, v, x)) p.c1 = x; }
        else if (k == "attenuation_k") { if (number(line, k, v, x)) p.attenuation_k = x; }
        else if (k == "i_dn0") { if (number(line, k, v, x)) p.i_dn0 = x; }
        else if (k == "i_up0") { if (number(line, k, v, x)) p.i_up0 = x; }
        else if (k == "v_leak_slope") { if (number(line, k, v, x)) p.v_leak_slope = x; }
        else if (k == "pw_t0") { if (number(line, k, v, x)) p.pw_t0 = x; }
        else if (k == "pw_v0") { if (number(line, k, v, x)) p.pw_v0 = x; }
        else if (k == "pw_slope") { if (number(line, k, v, x)) p.pw_slope = x; }
        else if (k == "vreset") { if (number(line, k, v, x)) p.vreset = x; }
        else if (k == "vpw_dc") { if (number(line, k, v, x)) cfg.params.vpw_dc = x; }
        else if (k == "comparator_mode") {
            if (v == "fast") p.comparator_mode = ComparatorMode::Fast;
            else if (v == "low_power") p.comparator_mode = ComparatorMode::LowPower;
            else err(line, "comparator_mode must be fast or low_power");
        }
        else err(line, "unknown key '" + k + "' in [params]");
    }

    void key_experiment(std::size_t line, const std::string& k,
                        const std::string& v) {
        double x;
        ExperimentSection& e = cfg.experiment;
        if (k == "duration") { if (number(line, k, v, x)) e.duration = x; }
        else if (k == "dt") { if (number(line, k, v, x)) e.dt = x; }
        else if (k == "decimation") { count(line, k, v, e.decimation); }
        else if (k == "power_gating") { boolean(line, k, v, e.power_gating); }
        else if (k == "record") {
            e.record.clear();
            for (const auto& f : csv::split_line(v))
                if (!trim(f).empty()) e.record.push_back(trim(f));
        }
        else err(line, "unknown key '" + k + "' in [experiment]");
    }

    void key_stimulus(std::size_t line, const std::string& k,
                      const std::string& v) {
        double x;
        StimulusSection& s = cfg.stimulus;
        if (k == "kind") {
            if (v == "dc" || v == "pulse_train" || v == "single_pulse") s.kind = v;
            else err(line, "stimulus kind must be dc, pulse_train or single_pulse");
        }
        else if (k == "level" || k == "amplitude") { if (number(line, k, v, x)) s.level = x; }
        else if (k == "width") { if (number(line, k, v, x)) s.width = x; }
        else if (k == "rate") { if (number(line, k, v, x)) s.rate = x; }
        else if (k == "start") { if (number(line, k, v, x)) s.start = x; }
        else if (k == "r_syn") { if (number(line, k, v, x)) s.r_syn = x; }
        else if (k == "v_ref") { if (number(line, k, v, x)) s.v_ref = x; }
        else if (k == "ldo_tau") { if (number(line, k, v, x)) s.ldo_tau = x; }
        else err(line, "unknown key '" + k + "' in [stimulus]");
    }

    void key_crossbar(std::size_t line, const std::string& k,
                      const std::string& v) {
        double x;
        CrossbarSection& c = cfg.crossbar;
        c.enabled = true;
        if (k == "rows") { count(line, k, v, c.rows); }
        else if (k == "cols") { count(line, k, v, c.cols); }
        else if (k == "file") { c.file = v; }
        else if (k == "g") { if (number(line, k, v, x)) c.g = x; }
        else if (k == "g_min") { if (number(line, k, v, x)) c.g_min = x; }
        else if (k == "g_max") { if (number(line, k, v, x)) c.g_max = x; }
        else if (k == "vdsp") { boolean(line, k, v, c.vdsp); }
        else if (k == "eta_pot") { if (number(line, k, v, x)) c.eta_pot = x; }
        else if (k == "eta_dep") { if (number(line, k, v, x)) c.eta_dep = x; }
        else err(line, "unknown key '" + k + "' in [crossbar]");
    }

    void key_power(std::size_t line, const std::string& k,
                   const std::string& v) {
        double x;
        PowerModel& p = cfg.power;
        if (k == "ldo_static") { if (number(line, k, v, x)) p.ldo_static = x; }
        else if (k == "ldo_dynamic") { if (number(line, k, v, x)) p.ldo_dynamic = x; }
        else if (k == "atten_static") { if (number(line, k, v, x)) p.atten_static = x; }
        else if (k == "atten_dynamic") { if (number(line, k, v, x)) p.atten_dynamic = x; }
        else if (k == "neuron_static_fast") { if (number(line, k, v, x)) p.neuron_static_fast = x; }
        else if (k == "neuron_espike_fast") { if (number(line, k, v, x)) p.neuron_espike_fast = x; }
        else if (k == "neuron_static_lp") { if (number(line, k, v, x)) p.neuron_static_lp = x; }
        else if (k == "neuron_espike_lp") { if (number(line, k, v, x)) p.neuron_espike_lp = x; }
        else err(line, "unknown key '" + k + "' in [power]");
    }
};

} // namespace

ParseResult parse_config(const std::string& text) {
    Parser parser;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                parser.err(line_no, "malformed section header '" + line + "'");
                continue;
            }
            section = line.substr(1, line.size() - 2);
            if (section != "bias" && section != "params" &&
                section != "experiment" && section != "stimulus" &&
                section != "crossbar" && section != "power") {
                parser.err(line_no, "unknown section [" + section + "]");
                section.clear();
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            parser.err(line_no, "expected key = value, got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty()) {
            parser.err(line_no, "key '" + key + "' outside any section");
            continue;
        }
        if (section == "bias") parser.key_bias(line_no, key, val);
        else if (section == "params") parser.key_params(line_no, key, val);
        else if (section == "experiment") parser.key_experiment(line_no, key, val);
        else if (section == "stimulus") parser.key_stimulus(line_no, key, val);
        else if (section == "crossbar") parser.key_crossbar(line_no, key, val);
        else if (section == "power") parser.key_power(line_no, key, val);
    }

    // Semantic validation once the text itself is clean.
    if (parser.diags.empty()) {
        for (const auto& v : validate(parser.cfg.bias))
            parser.err(0, "[bias] " + v.message);
        for (const auto& v : validate(parser.cfg.params.neuron))
            parser.err(0, "[params] " + v.message);
        for (const auto& v : validate(parser.cfg.power))
            parser.err(0, "[power] " + v.message);
        const auto& c = parser.cfg.crossbar;
        if (c.enabled) {
            if (c.rows == 0 || c.cols == 0)
                parser.err(0, "[crossbar] rows and cols must be >= 1");
            if (c.file.empty() && c.g != 0.0 &&
                (c.g < c.g_min || c.g > c.g_max))
                parser.err(0, "[crossbar] g outside [g_min, g_max]");
        }
    }

    ParseResult result;
    result.diagnostics = std::move(parser.diags);
    if (result.diagnostics.empty()) result.config = std::move(parser.cfg);
    return result;
}

ParseResult parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        ParseResult r;
        r.diagnostics.push_back({0, "cannot open " + path});
        return r;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ParsedConfig& cfg) {
    std::ostringstream os;
    auto d = [&](double v) { return csv::format_double(v); };

    os << "[bias]\n";
    os << "vdd = " << d(cfg.bias.vdd) << "\n";
    os << "vref = " << d(cfg.bias.vref) << "\n";
    os << "vopa = " << d(cfg.bias.vopa) << "\n";
    os << "vgain = " << d(cfg.bias.vgain) << "\n";
    os << "vtaun = " << d(cfg.bias.vtaun) << "\n";
    os << "vtaup = " << d(cfg.bias.vtaup) << "\n";
    os << "vrest = " << d(cfg.bias.vrest) << "\n";
    os << "vthr = " << d(cfg.bias.vthr) << "\n";
    os << "vbcomp = " << d(cfg.bias.vbcomp) << "\n";
    os << "vpw = " << d(cfg.bias.vpw) << "\n";

    const NeuronParams& p = cfg.params.neuron;
    os << "\n[params]\n";
    os << "c1 = " << d(p.c1) << "\n";
    os << "attenuation_k = " << d(p.attenuation_k) << "\n";
    os << "i_dn0 = " << d(p.i_dn0) << "\n";
    os << "i_up0 = " << d(p.i_up0) << "\n";
    os << "v_leak_slope = " << d(p.v_leak_slope) << "\n";
    os << "pw_t0 = " << d(p.pw_t0) << "\n";
    os << "pw_v0 = " << d(p.pw_v0) << "\n";
    os << "pw_slope = " << d(p.pw_slope) << "\n";
    os << "vreset = " << d(p.vreset) << "\n";
    os << "comparator_mode = "
       << (p.comparator_mode == ComparatorMode::Fast ? "fast" : "low_power")
       << "\n";
    os << "vpw_dc = " << d(cfg.params.vpw_dc) << "\n";

    os << "\n[experiment]\n";
    os << "duration = " << d(cfg.experiment.duration) << "\n";
    os << "dt = " << d(cfg.experiment.dt) << "\n";
    os << "decimation = " << cfg.experiment.decimation << "\n";
    os << "power_gating = " << (cfg.experiment.power_gating ? "true" : "false")
       << "\n";
    if (!cfg.experiment.record.empty())
        os << "record = " << csv::join(cfg.experiment.record) << "\n";

    const StimulusSection& s = cfg.stimulus;
    os << "\n[stimulus]\n";
    os << "kind = " << s.kind << "\n";
    os << "level = " << d(s.level) << "\n";
    os << "width = " << d(s.width) << "\n";
    os << "rate = " << d(s.rate) << "\n";
    os << "start = " << d(s.start) << "\n";
    os << "r_syn = " << d(s.r_syn) << "\n";
    if (s.v_ref) os << "v_ref = " << d(*s.v_ref) << "\n";
    os << "ldo_tau = " << d(s.ldo_tau) << "\n";

    if (cfg.crossbar.enabled) {
        const CrossbarSection& c = cfg.crossbar;
        os << "\n[crossbar]\n";
        os << "rows = " << c.rows << "\n";
        os << "cols = " << c.cols << "\n";
        if (!c.file.empty()) os << "file = " << c.file << "\n";
        os << "g = " << d(c.g) << "\n";
        os << "g_min = " << d(c.g_min) << "\n";
        os << "g_max = " << d(c.g_max) << "\n";
        os << "vdsp = " << (c.vdsp ? "true" : "false") << "\n";
        os << "eta_pot = " << d(c.eta_pot) << "\n";
        os << "eta_dep = " << d(c.eta_dep) << "\n";
    }

    const PowerModel& pm = cfg.power;
    os << "\n[power]\n";
    os << "ldo_static = " << d(pm.ldo_static) << "\n";
    os << "ldo_dynamic = " << d(pm.ldo_dynamic) << "\n";
    os << "atten_static = " << d(pm.atten_static) << "\n";
    os << "atten_dynamic = " << d(pm.atten_dynamic) << "\n";
    os << "neuron_static_fast = " << d(pm.neuron_static_fast) << "\n";
    os << "neuron_espike_fast = " << d(pm.neuron_espike_fast) << "\n";
    os << "neuron_static_lp = " << d(pm.neuron_static_lp) << "\n";
    os << "neuron_espike_lp = " << d(pm.neuron_espike_lp) << "\n";
    return os.str();
}

void set_config_value(ParsedConfig& cfg, const std::string& variable,
                      double value) {
    const auto dot = variable.find('.');
    if (dot == std::string::npos)
        throw std::invalid_argument("unknown variable '" + variable +
                                    "' (use bias.<field> or stimulus.<field>)");
    const std::string head = variable.substr(0, dot);
    const std::string field = variable.substr(dot + 1);
    if (head == "bias") {
        BiasConfig& b = cfg.bias;
        if (field == "vdd") b.vdd = value;
        else if (field == "vref") b.vref = value;
        else if (field == "vopa") b.vopa = value;
        else if (field == "vgain") b.vgain = value;
        else if (field == "vtaun") b.vtaun = value;
        else if (field == "vtaup") b.vtaup = value;
        else if (field == "vrest") b.vrest = value;
        else if (field == "vthr") b.vthr = value;
        else if (field == "vbcomp") b.vbcomp = value;
        else if (field == "vpw") b.vpw = value;
        else throw std::invalid_argument("unknown bias field '" + field + "'");
        return;
    }
    if (head == "stimulus") {
        StimulusSection& s = cfg.stimulus;
        if (field == "level" || field == "amplitude") s.level = value;
        else if (field == "width") s.width = value;
        else if (field == "rate") s.rate = value;
        else if (field == "start") s.start = value;
        else if (field == "r_syn") s.r_syn = value;
        else if (field == "v_ref") s.v_ref = value;
        else if (field == "ldo_tau") s.ldo_tau = value;
        else
            throw std::invalid_argument("unknown stimulus field '" + field +
                                        "'");
        return;
    }
    throw std::invalid_argument("unknown variable '" + variable + "'");
}

Experiment build_experiment(const ParsedConfig& cfg) {
    Experiment exp;
    exp.duration = cfg.experiment.duration;
    exp.dt = cfg.experiment.dt;
    exp.decimation = cfg.experiment.decimation;
    exp.power_gating = cfg.experiment.power_gating;
    exp.record = cfg.experiment.record;
    if (exp.record.empty()) exp.record = {"mem:0", "out:0"};

    const StimulusSection& s = cfg.stimulus;
    Stimulus stim;
    if (s.kind == "dc") stim = Stimulus::dc(s.level);
    else if (s.kind == "pulse_train")
        stim = Stimulus::pulse_train(s.level, s.width, s.rate, s.start);
    else stim = Stimulus::single_pulse(s.level, s.width, s.start);
    exp.stimuli.push_back(stim);

    if (!cfg.crossbar.enabled) {
        exp.neurons.push_back({"n0", std::nullopt, std::nullopt});
        ChainSpec chain;
        chain.stimulus = 0;
        chain.target = 0;
        chain.r_syn = s.r_syn;
        chain.v_ref = s.v_ref;
        chain.ldo_tau = s.ldo_tau;
        exp.chains.push_back(chain);
        return exp;
    }

    // Two-layer topology: `rows` input neurons on the shared stimulus chain,
    // the array, and `cols` output neurons.
    const CrossbarSection& c = cfg.crossbar;
    CrossbarSpec spec;
    if (!c.file.empty()) {
        spec.xbar = load_crossbar_csv(c.file, c.g_min, c.g_max);
        if (spec.xbar.rows != c.rows || spec.xbar.cols != c.cols)
            throw std::runtime_error("crossbar file shape does not match "
                                     "rows/cols in the config");
    } else {
        spec.xbar = Crossbar(c.rows, c.cols, c.g_min, c.g_max);
        for (auto& g : spec.xbar.conductance) g = c.g;
    }
    spec.vdsp_enabled = c.vdsp;
    spec.vdsp.eta_pot = c.eta_pot;
    spec.vdsp.eta_dep = c.eta_dep;
    spec.vdsp.g_min = c.g_min;
    spec.vdsp.g_max = c.g_max;

    for (std::size_t r = 0; r < c.rows; ++r) {
        exp.neurons.push_back({"in" + std::to_string(r), std::nullopt,
                               std::nullopt});
        ChainSpec chain;
        chain.stimulus = 0;
        chain.target = r;
        chain.r_syn = s.r_syn;
        chain.v_ref = s.v_ref;
        chain.ldo_tau = s.ldo_tau;
        exp.chains.push_back(chain);
        spec.row_sources.push_back(r);
    }
    for (std::size_t col = 0; col < c.cols; ++col) {
        exp.neurons.push_back({"out" + std::to_string(col), std::nullopt,
                               std::nullopt});
        spec.col_targets.push_back(c.rows + col);
    }
    exp.crossbars.push_back(std::move(spec));
    return exp;
}

} // namespace memlif
