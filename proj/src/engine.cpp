#include "memlif/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "memlif/csv.hpp"

namespace memlif {

double Stimulus::value(double t) const {
    switch (kind) {
        case Kind::Dc:
            return level;
        case Kind::SinglePulse:
            return (t >= start && t < start + width) ? level : 0.0;
        case Kind::PulseTrain: {
            if (t < start) return 0.0;
            const double period = 1.0 / rate;
            const double phase = std::fmod(t - start, period);
            return phase < width ? level : 0.0;
        }
    }
    return 0.0;
}

Stimulus Stimulus::dc(double level) {
    Stimulus s;
    s.kind = Kind::Dc;
    s.level = level;
    return s;
}

Stimulus Stimulus::pulse_train(double amplitude, double width, double rate,
                               double start) {
    Stimulus s;
    s.kind = Kind::PulseTrain;
    s.level = amplitude;
    s.width = width;
    s.rate = rate;
    s.start = start;
    return s;
}

Stimulus Stimulus::single_pulse(double amplitude, double width, double start) {
    Stimulus s;
    s.kind = Kind::SinglePulse;
    s.level = amplitude;
    s.width = width;
    s.start = start;
    return s;
}

namespace {

struct Probe {
    enum class Kind { Mem, Out, Thr, Iatt, Stim } kind;
    std::size_t index;
};

std::optional<Probe> parse_probe(const std::string& name,
                                 const Experiment& exp) {
    const auto colon = name.find(':');
    if (colon == std::string::npos) return std::nullopt;
    const std::string head = name.substr(0, colon);
    const std::string tail = name.substr(colon + 1);

    Probe p{};
    if (head == "mem") p.kind = Probe::Kind::Mem;
    else if (head == "out") p.kind = Probe::Kind::Out;
    else if (head == "thr") p.kind = Probe::Kind::Thr;
    else if (head == "iatt") p.kind = Probe::Kind::Iatt;
    else if (head == "stim") p.kind = Probe::Kind::Stim;
    else return std::nullopt;

    // Numeric index, or a neuron name for the neuron-signal probes.
    try {
        std::size_t pos = 0;
        const unsigned long idx = std::stoul(tail, &pos);
        if (pos == tail.size()) {
            p.index = idx;
            return p;
        }
    } catch (const std::exception&) {
    }
    if (p.kind != Probe::Kind::Stim) {
        for (std::size_t i = 0; i < exp.neurons.size(); ++i) {
            if (exp.neurons[i].name == tail) {
                p.index = i;
                return p;
            }
        }
    }
    return std::nullopt;
}

} // namespace

std::vector<std::string> validate(const Experiment& exp,
                                  const BiasConfig& bias,
                                  const NeuronParams& params) {
    std::vector<std::string> errs;
    auto fail = [&](const std::string& m) { errs.push_back(m); };

    for (const auto& v : validate(bias)) fail("bias: " + v.message);
    for (const auto& v : validate(params)) fail("params: " + v.message);
    if (!(exp.dt > 0.0)) fail("dt must be > 0");
    if (!(exp.duration >= exp.dt)) fail("duration must be >= dt");
    if (exp.decimation == 0) fail("decimation must be >= 1");
    if (exp.neurons.empty()) fail("experiment has no neurons");

    for (std::size_t i = 0; i < exp.neurons.size(); ++i) {
        if (exp.neurons[i].bias_override) {
            for (const auto& v : validate(*exp.neurons[i].bias_override))
                fail("neuron " + std::to_string(i) + " bias: " + v.message);
        }
    }

    for (std::size_t i = 0; i < exp.stimuli.size(); ++i) {
        const auto& s = exp.stimuli[i];
        if (s.kind == Stimulus::Kind::Dc) continue;
        if (!(s.width >= exp.dt))
            fail("stimulus " + std::to_string(i) + ": width < dt");
        if (s.kind == Stimulus::Kind::PulseTrain) {
            if (!(s.rate > 0.0))
                fail("stimulus " + std::to_string(i) + ": rate must be > 0");
            else if (s.width > 1.0 / s.rate)
                fail("stimulus " + std::to_string(i) + ": width > period");
        }
    }

    for (std::size_t i = 0; i < exp.chains.size(); ++i) {
        const auto& c = exp.chains[i];
        if (c.stimulus >= exp.stimuli.size())
            fail("chain " + std::to_string(i) + ": bad stimulus index");
        if (c.target >= exp.neurons.size())
            fail("chain " + std::to_string(i) + ": bad target neuron");
        if (!(c.r_syn > 0.0))
            fail("chain " + std::to_string(i) + ": r_syn must be > 0");
    }

    for (std::size_t i = 0; i < exp.crossbars.size(); ++i) {
        const auto& x = exp.crossbars[i];
        for (const auto& v : x.xbar.validate())
            fail("crossbar " + std::to_string(i) + ": " + v.message);
        if (x.row_sources.size() != x.xbar.rows)
            fail("crossbar " + std::to_string(i) + ": row_sources size mismatch");
        if (x.col_targets.size() != x.xbar.cols)
            fail("crossbar " + std::to_string(i) + ": col_targets size mismatch");
        for (auto r : x.row_sources)
            if (r >= exp.neurons.size())
                fail("crossbar " + std::to_string(i) + ": bad row source");
        for (auto c : x.col_targets)
            if (c >= exp.neurons.size())
                fail("crossbar " + std::to_string(i) + ": bad column target");
    }

    for (std::size_t i = 0; i < exp.adaptive_links.size(); ++i) {
        const auto& l = exp.adaptive_links[i];
        if (l.pair.primary == l.pair.regulator)
            fail("adaptive link " + std::to_string(i) +
                 ": primary == regulator");
        if (l.pair.primary >= exp.neurons.size() ||
            l.pair.regulator >= exp.neurons.size())
            fail("adaptive link " + std::to_string(i) + ": bad neuron id");
        if (!(l.pair.link_resistance > 0.0))
            fail("adaptive link " + std::to_string(i) +
                 ": link resistance must be > 0");
    }

    // dt has to resolve the shortest configured output pulse.
    double min_tpw = std::numeric_limits<double>::infinity();
    for (const auto& n : exp.neurons) {
        const BiasConfig& b = n.bias_override ? *n.bias_override : bias;
        if (b.vpw > 0.0)
            min_tpw = std::min(min_tpw, pulse_width(b.vpw, params));
    }
    if (std::isfinite(min_tpw) && exp.dt > min_tpw / 10.0 * (1.0 + 1e-12))
        fail("dt too coarse: must be <= min pulse width / 10 (" +
             csv::format_double(min_tpw / 10.0) + " s)");

    for (const auto& name : exp.record)
        if (!parse_probe(name, exp)) fail("unknown probe: " + name);

    return errs;
}

RunResult run(const Experiment& exp, const BiasConfig& bias,
              const NeuronParams& params, const PowerModel& power) {
    {
        const auto errs = validate(exp, bias, params);
        if (!errs.empty()) {
            std::ostringstream os;
            os << "invalid experiment:";
            for (const auto& e : errs) os << " [" << e << "]";
            throw std::invalid_argument(os.str());
        }
    }

    const std::size_t n_neurons = exp.neurons.size();
    const double dt = exp.dt;
    const std::size_t n_steps =
        std::max<std::size_t>(1, (std::size_t)std::llround(exp.duration / dt));

    // Per-neuron effective bias and hoisted constants.
    std::vector<BiasConfig> eff_bias(n_neurons, bias);
    for (std::size_t i = 0; i < n_neurons; ++i)
        if (exp.neurons[i].bias_override) eff_bias[i] = *exp.neurons[i].bias_override;

    std::vector<NeuronState> state(n_neurons);
    std::vector<LeakSetting> leaks(n_neurons);
    std::vector<double> t_pw(n_neurons);
    std::vector<double> espike(n_neurons);
    std::vector<double> pstatic(n_neurons);
    for (std::size_t i = 0; i < n_neurons; ++i) {
        state[i] = NeuronState::at_rest(eff_bias[i]);
        if (exp.neurons[i].v_init) state[i].v_mem = *exp.neurons[i].v_init;
        leaks[i] = leak_setting(eff_bias[i], params);
        t_pw[i] = pulse_width(eff_bias[i].vpw, params);
        const ComparatorMode mode = comparator_mode_from_bias(eff_bias[i]);
        espike[i] = mode == ComparatorMode::Fast ? power.neuron_espike_fast
                                                 : power.neuron_espike_lp;
        pstatic[i] = mode == ComparatorMode::Fast ? power.neuron_static_fast
                                                  : power.neuron_static_lp;
    }

    // Read paths: one LDO+attenuator per chain, per crossbar column, per
    // adaptive link.
    std::size_t n_paths = exp.chains.size() + exp.adaptive_links.size();
    for (const auto& x : exp.crossbars) n_paths += x.xbar.cols;
    std::vector<std::size_t> path_active_steps(n_paths, 0);
    std::vector<LdoLag> chain_lag;
    chain_lag.reserve(exp.chains.size());
    for (const auto& c : exp.chains) chain_lag.emplace_back(c.ldo_tau);

    std::vector<Crossbar> xbars;
    xbars.reserve(exp.crossbars.size());
    for (const auto& x : exp.crossbars) xbars.push_back(x.xbar);

    bool any_vdsp = false;
    for (const auto& x : exp.crossbars) any_vdsp |= x.vdsp_enabled;

    // Probes.
    std::vector<Probe> probes;
    for (const auto& name : exp.record) probes.push_back(*parse_probe(name, exp));

    RunResult result;
    TraceSet& traces = result.traces;
    traces.t0 = 0.0;
    traces.dt = dt * (double)exp.decimation;
    traces.probe_names = exp.record;
    traces.series.assign(probes.size(), {});
    const std::size_t n_rows = n_steps / exp.decimation + 1;
    for (auto& s : traces.series) s.reserve(n_rows);
    traces.spike_times.assign(n_neurons, {});

    std::vector<std::size_t> spike_count(n_neurons, 0);
    std::vector<double> input(n_neurons, 0.0);
    std::vector<double> stim_value(exp.stimuli.size(), 0.0);
    std::vector<char> fired(n_neurons, 0);
    std::vector<double> v_snapshot;
    if (any_vdsp) v_snapshot.resize(n_neurons);

    // Evaluates stimuli and all read paths into `input`, updating adaptive
    // thresholds from the state at the step boundary. When `advance` the
    // pass also moves lag filters and energy tallies forward.
    auto compute_inputs = [&](double t_mid, bool advance) {
        std::fill(input.begin(), input.end(), 0.0);
        for (std::size_t j = 0; j < exp.stimuli.size(); ++j)
            stim_value[j] = exp.stimuli[j].value(t_mid);

        std::size_t path = 0;
        for (std::size_t j = 0; j < exp.chains.size(); ++j, ++path) {
            const auto& c = exp.chains[j];
            const double v_ref = c.v_ref ? *c.v_ref : bias.vref;
            const double v_in = stim_value[c.stimulus];
            double i_syn = std::max(0.0, (v_in - v_ref)) / c.r_syn;
            if (advance)
                i_syn = chain_lag[j].filter(i_syn, dt);
            input[c.target] += attenuate(i_syn, params).i_att;
            if (advance && v_in > v_ref) ++path_active_steps[path];
        }
        for (std::size_t j = 0; j < exp.crossbars.size(); ++j) {
            const auto& spec = exp.crossbars[j];
            Crossbar& x = xbars[j];
            for (std::size_t r = 0; r < x.rows; ++r)
                x.gate[r] = state[spec.row_sources[r]].out > 0.0;
            const double v_ref = spec.v_ref ? *spec.v_ref : bias.vref;
            for (std::size_t col = 0; col < x.cols; ++col, ++path) {
                const double i_col = column_current(x, col, bias.vdd, v_ref);
                input[spec.col_targets[col]] += attenuate(i_col, params).i_att;
                if (advance && i_col > 0.0) ++path_active_steps[path];
            }
        }
        for (std::size_t j = 0; j < exp.adaptive_links.size(); ++j, ++path) {
            const auto& l = exp.adaptive_links[j];
            const double v_ref = l.v_ref ? *l.v_ref : bias.vref;
            const double floor_v = l.floor ? *l.floor : bias.vrest;
            eff_bias[l.pair.primary].vthr =
                adaptive_threshold(l.pair, state[l.pair.regulator], floor_v);
            const double v_out = state[l.pair.primary].out;
            const double i_link =
                std::max(0.0, v_out - v_ref) / l.pair.link_resistance;
            input[l.pair.regulator] += attenuate(i_link, params).i_att;
            if (advance && v_out > v_ref) ++path_active_steps[path];
        }
    };

    auto record_row = [&]() {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const Probe& pr = probes[p];
            double v = 0.0;
            switch (pr.kind) {
                case Probe::Kind::Mem: v = state[pr.index].v_mem; break;
                case Probe::Kind::Out: v = state[pr.index].out; break;
                case Probe::Kind::Thr: v = eff_bias[pr.index].vthr; break;
                case Probe::Kind::Iatt: v = input[pr.index]; break;
                case Probe::Kind::Stim: v = stim_value[pr.index]; break;
            }
            traces.series[p].push_back(v);
        }
    };

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = (double)k * dt;
        compute_inputs(t + 0.5 * dt, true);
        if (k % exp.decimation == 0) record_row();

        if (any_vdsp)
            for (std::size_t i = 0; i < n_neurons; ++i)
                v_snapshot[i] = state[i].v_mem;

        for (std::size_t i = 0; i < n_neurons; ++i) {
            const StepOutcome o =
                step(state[i], input[i], dt, eff_bias[i], params, leaks[i],
                     t_pw[i]);
            fired[i] = o.spiked;
            if (o.spiked) {
                const double t_spike = t + o.spike_offset;
                state[i].last_spike_time = t_spike;
                traces.spike_times[i].push_back(t_spike);
                ++spike_count[i];
            }
        }

        for (std::size_t j = 0; j < exp.crossbars.size(); ++j) {
            const auto& spec = exp.crossbars[j];
            if (!spec.vdsp_enabled) continue;
            Crossbar& x = xbars[j];
            for (std::size_t r = 0; r < x.rows; ++r) {
                if (!fired[spec.row_sources[r]]) continue;
                for (std::size_t col = 0; col < x.cols; ++col) {
                    const double g = x.at(r, col);
                    if (g == 0.0) continue; // unformed cell
                    const std::size_t post = spec.col_targets[col];
                    const double trace =
                        membrane_phase_readout(v_snapshot[post],
                                               eff_bias[post]).trace;
                    x.at(r, col) = vdsp_update(g, trace, spec.vdsp);
                }
            }
        }
    }

    if (n_steps % exp.decimation == 0) {
        compute_inputs((double)n_steps * dt + 0.5 * dt, false);
        record_row();
    }

    // Ledger: everything from integer step tallies, so the identity
    // total = sum of parts holds at machine precision.
    EnergyLedger& ledger = result.ledger;
    ledger.duration = (double)n_steps * dt;
    ledger.read_paths = n_paths;
    ledger.spike_count = spike_count;
    ledger.neuron_spike_energy.assign(n_neurons, 0.0);
    double active_total = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double t_active = (double)path_active_steps[p] * dt;
        const double t_static = exp.power_gating ? t_active : ledger.duration;
        active_total += t_active;
        ledger.ldo_static += power.ldo_static * t_static;
        ledger.atten_static += power.atten_static * t_static;
        ledger.ldo_dynamic += power.ldo_dynamic * t_active;
        ledger.atten_dynamic += power.atten_dynamic * t_active;
    }
    ledger.clamp_active_time = active_total;
    for (std::size_t i = 0; i < n_neurons; ++i) {
        ledger.neuron_static += pstatic[i] * ledger.duration;
        ledger.neuron_spike_energy[i] = espike[i] * (double)spike_count[i];
        ledger.neuron_spike += ledger.neuron_spike_energy[i];
    }
    ledger.total = ledger.ldo_static + ledger.ldo_dynamic +
                   ledger.atten_static + ledger.atten_dynamic +
                   ledger.neuron_static + ledger.neuron_spike;

    result.final_states = state;
    result.final_crossbars = std::move(xbars);
    result.t_pw = t_pw;
    return result;
}

std::vector<std::string> TraceSet::check_invariants(
    const std::vector<double>& t_pw_per_neuron) const {
    std::vector<std::string> errs;
    for (const auto& s : series)
        if (s.size() != samples())
            errs.push_back("probe series lengths differ");
    for (std::size_t i = 0; i < spike_times.size(); ++i) {
        const auto& ts = spike_times[i];
        const double min_gap = i < t_pw_per_neuron.size()
                                   ? t_pw_per_neuron[i] * (1.0 - 1e-9)
                                   : 0.0;
        for (std::size_t k = 1; k < ts.size(); ++k) {
            if (!(ts[k] > ts[k - 1]))
                errs.push_back("neuron " + std::to_string(i) +
                               ": spike times not strictly increasing");
            else if (ts[k] - ts[k - 1] < min_gap)
                errs.push_back("neuron " + std::to_string(i) +
                               ": inter-spike gap below pulse width");
        }
    }
    return errs;
}

double spike_rate(const TraceSet& traces, std::size_t neuron, double window) {
    if (neuron >= traces.spike_times.size())
        throw std::out_of_range("spike_rate: unknown neuron id");
    if (!(window > 0.0))
        throw std::invalid_argument("spike_rate: window must be > 0");
    const auto& ts = traces.spike_times[neuron];
    std::size_t n = 0;
    for (double t : ts)
        if (t <= window) ++n;
    return (double)n / window;
}

double steady_rate(const TraceSet& traces, std::size_t neuron, double window) {
    if (neuron >= traces.spike_times.size())
        throw std::out_of_range("steady_rate: unknown neuron id");
    const auto& ts = traces.spike_times[neuron];
    if (ts.size() < 2) return spike_rate(traces, neuron, window);
    return ((double)ts.size() - 1.0) / (ts.back() - ts.front());
}

std::vector<std::string> trace_csv_lines(const TraceSet& traces) {
    std::vector<std::string> lines;
    std::vector<std::string> fields;
    fields.push_back("t_s");
    for (const auto& n : traces.probe_names) fields.push_back(n);
    lines.push_back(csv::join(fields));
    for (std::size_t k = 0; k < traces.samples(); ++k) {
        fields.clear();
        fields.push_back(csv::format_double(traces.t0 + (double)k * traces.dt));
        for (const auto& s : traces.series)
            fields.push_back(csv::format_double(s[k]));
        lines.push_back(csv::join(fields));
    }
    return lines;
}

std::vector<std::string> spike_csv_lines(const TraceSet& traces) {
    std::vector<std::pair<double, std::size_t>> events;
    for (std::size_t i = 0; i < traces.spike_times.size(); ++i)
        for (double t : traces.spike_times[i]) events.emplace_back(t, i);
    std::sort(events.begin(), events.end());
    std::vector<std::string> lines;
    lines.push_back("neuron,t_s");
    for (const auto& [t, i] : events)
        lines.push_back(std::to_string(i) + "," + csv::format_double(t));
    return lines;
}

void write_trace_csv(const TraceSet& traces, const std::string& path) {
    csv::write_lines(path, trace_csv_lines(traces));
}

void write_spike_csv(const TraceSet& traces, const std::string& path) {
    csv::write_lines(path, spike_csv_lines(traces));
}

std::vector<std::string> EnergyLedger::to_keyvalue() const {
    std::vector<std::string> lines;
    auto put = [&](const std::string& k, double v) {
        lines.push_back(k + "=" + csv::format_double(v));
    };
    put("duration_s", duration);
    lines.push_back("read_paths=" + std::to_string(read_paths));
    put("clamp_active_time_s", clamp_active_time);
    put("ldo_static_J", ldo_static);
    put("ldo_dynamic_J", ldo_dynamic);
    put("atten_static_J", atten_static);
    put("atten_dynamic_J", atten_dynamic);
    put("neuron_static_J", neuron_static);
    put("neuron_spike_J", neuron_spike);
    for (std::size_t i = 0; i < spike_count.size(); ++i) {
        lines.push_back("neuron" + std::to_string(i) +
                        "_spikes=" + std::to_string(spike_count[i]));
        put("neuron" + std::to_string(i) + "_spike_J",
            neuron_spike_energy[i]);
    }
    put("total_J", total);
    return lines;
}

void write_ledger(const EnergyLedger& ledger, const std::string& path) {
    csv::write_lines(path, ledger.to_keyvalue());
}

} // namespace memlif
