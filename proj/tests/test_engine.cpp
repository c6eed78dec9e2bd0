#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "memlif/engine.hpp"

using namespace memlif;

namespace {

Experiment dc_experiment(double i_syn, double duration, double dt) {
    // Drive through the 10 kOhm on-chip resistor with the LDO referenced
    // at 1 V, the way the transfer curves were taken.
    Experiment exp;
    exp.stimuli.push_back(Stimulus::dc(1.0 + i_syn * 10e3));
    exp.neurons.push_back({"n0", std::nullopt, std::nullopt});
    ChainSpec chain;
    chain.stimulus = 0;
    chain.target = 0;
    chain.r_syn = 10e3;
    chain.v_ref = 1.0;
    exp.chains.push_back(chain);
    exp.duration = duration;
    exp.dt = dt;
    return exp;
}

} // namespace

TEST_CASE("stimulus sources sample as piecewise-constant voltages") {
    const Stimulus z = Stimulus::dc(0.0);
    for (double t : {0.0, 1e-3, 1.0}) CHECK(z.value(t) == 0.0);

    const Stimulus p = Stimulus::pulse_train(1.4, 10e-6, 100.0);
    CHECK(p.value(0.5e-6) == 1.4);
    CHECK(p.value(9.9e-6) == 1.4);
    CHECK(p.value(10.1e-6) == 0.0);
    CHECK(p.value(10e-3 + 0.5e-6) == 1.4); // second pulse
    CHECK(p.value(10e-3 - 0.5e-6) == 0.0);

    const Stimulus s = Stimulus::single_pulse(2.0, 5e-6, 1e-3);
    CHECK(s.value(0.5e-3) == 0.0);
    CHECK(s.value(1e-3 + 1e-6) == 2.0);
    CHECK(s.value(1e-3 + 6e-6) == 0.0);
}

TEST_CASE("single pulse covering the run equals dc drive") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    const PowerModel power = default_power_model();

    Experiment a = dc_experiment(40e-6, 5e-3, 1e-6);
    a.record = {"mem:0", "out:0"};
    Experiment b = a;
    b.stimuli[0] = Stimulus::single_pulse(1.0 + 40e-6 * 10e3, 5e-3, 0.0);

    const auto ra = run(a, bias, params, power);
    const auto rb = run(b, bias, params, power);
    CHECK(trace_csv_lines(ra.traces) == trace_csv_lines(rb.traces));
    CHECK(ra.traces.spike_times[0] == rb.traces.spike_times[0]);
}

TEST_CASE("zero stimulus stays quiescent at rest") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    Experiment exp = dc_experiment(0.0, 10e-3, 1e-6);
    exp.stimuli[0] = Stimulus::dc(0.0);
    exp.record = {"mem:0"};
    const auto res = run(exp, bias, params, default_power_model());
    CHECK(res.traces.spike_times[0].empty());
    CHECK(res.final_states[0].v_mem == bias.vrest);
    for (double v : res.traces.series[0]) CHECK(v == bias.vrest);
}

TEST_CASE("constant drive matches the closed-form rate within 2 percent") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    const double i_syn = 40e-6;
    const auto res =
        run(dc_experiment(i_syn, 20e-3, 1e-7), bias, params,
            default_power_model());
    const double expected = analytic_rate(i_syn, bias, params);
    const double measured = steady_rate(res.traces, 0, 20e-3);
    CHECK(measured == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("determinism: identical runs export identical bytes") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    Experiment exp = dc_experiment(40e-6, 10e-3, 1e-6);
    exp.record = {"mem:0", "out:0", "iatt:0"};
    const auto r1 = run(exp, bias, params, default_power_model());
    const auto r2 = run(exp, bias, params, default_power_model());
    CHECK(trace_csv_lines(r1.traces) == trace_csv_lines(r2.traces));
    CHECK(spike_csv_lines(r1.traces) == spike_csv_lines(r2.traces));
    CHECK(r1.ledger.to_keyvalue() == r2.ledger.to_keyvalue());
}

TEST_CASE("halving dt moves the measured rate by less than one percent") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    const auto r1 = run(dc_experiment(40e-6, 20e-3, 1e-6), bias, params,
                        default_power_model());
    const auto r2 = run(dc_experiment(40e-6, 20e-3, 0.5e-6), bias, params,
                        default_power_model());
    const double a = steady_rate(r1.traces, 0, 20e-3);
    const double b = steady_rate(r2.traces, 0, 20e-3);
    CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("energy ledger identity and quiescent figures") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    const PowerModel power = default_power_model();

    SUBCASE("quiescent 1 s run, fast comparator") {
        Experiment exp = dc_experiment(0.0, 1.0, 1e-6);
        const auto res = run(exp, bias, params, power);
        const EnergyLedger& led = res.ledger;
        // One neuron at 5 uW for one second.
        CHECK(led.neuron_static ==
              doctest::Approx(5e-6).epsilon(1e-12));
        CHECK(led.neuron_spike == 0.0);
        CHECK(led.ldo_dynamic == 0.0);
        CHECK(led.atten_dynamic == 0.0);
        CHECK(led.clamp_active_time == 0.0);
        // Static read path accrues for the whole run.
        CHECK(led.ldo_static == doctest::Approx(10e-6).epsilon(1e-12));
        CHECK(led.atten_static == doctest::Approx(10e-12).epsilon(1e-12));
        const double recomputed = led.ldo_static + led.ldo_dynamic +
                                  led.atten_static + led.atten_dynamic +
                                  led.neuron_static + led.neuron_spike;
        CHECK(led.total == recomputed);
    }

    SUBCASE("spiking run splits static, dynamic and per-spike energy") {
        Experiment exp = dc_experiment(40e-6, 10e-3, 1e-6);
        const auto res = run(exp, bias, params, power);
        const EnergyLedger& led = res.ledger;
        const std::size_t n = led.spike_count[0];
        CHECK(n > 0);
        CHECK(led.neuron_spike ==
              power.neuron_espike_fast * (double)n);
        CHECK(led.clamp_active_time ==
              doctest::Approx(led.duration).epsilon(1e-9));
        const double recomputed = led.ldo_static + led.ldo_dynamic +
                                  led.atten_static + led.atten_dynamic +
                                  led.neuron_static + led.neuron_spike;
        CHECK(led.total == recomputed);
    }

    SUBCASE("power gating zeroes idle read-path static energy") {
        Experiment exp = dc_experiment(0.0, 0.1, 1e-6);
        exp.power_gating = true;
        const auto res = run(exp, bias, params, power);
        CHECK(res.ledger.ldo_static == 0.0);
        CHECK(res.ledger.atten_static == 0.0);
        CHECK(res.ledger.neuron_static > 0.0); // the neuron is not gated
    }

    SUBCASE("low-power comparator mode swaps the neuron figures") {
        BiasConfig lp = bias;
        lp.vbcomp = 1.0;
        Experiment exp = dc_experiment(0.0, 1.0, 1e-6);
        const auto res = run(exp, lp, params, power);
        CHECK(res.ledger.neuron_static ==
              doctest::Approx(17e-9).epsilon(1e-12));
    }
}

TEST_CASE("spike rate counts within a window") {
    TraceSet t;
    t.spike_times = {{}, {0.1, 0.2, 0.3, 0.35, 0.5, 0.6, 0.7, 0.9}};
    CHECK(spike_rate(t, 0, 1.0) == 0.0);
    CHECK(spike_rate(t, 1, 1.0) == 8.0);
    CHECK(spike_rate(t, 1, 0.5) == doctest::Approx(10.0));
    CHECK_THROWS_AS((spike_rate(t, 2, 1.0)), std::out_of_range);
}

TEST_CASE("steady rate recovers an exact period within quantization") {
    TraceSet t;
    t.spike_times = {{}};
    const double period = 1.0 / 8.0;
    t.spike_times[0].clear();
    for (int k = 0; k < 8; ++k)
        t.spike_times[0].push_back(0.01 + k * period);
    CHECK(steady_rate(t, 0, 1.0) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("trace invariants hold for a spiking run") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    Experiment exp = dc_experiment(100e-6, 10e-3, 1e-7);
    exp.record = {"mem:0", "out:0"};
    const auto res = run(exp, bias, params, default_power_model());
    REQUIRE(res.traces.spike_times[0].size() > 3);
    CHECK(res.traces.check_invariants(res.t_pw).empty());

    // Output-high intervals last one pulse width, within a step.
    const auto& out = res.traces.series[1];
    const double dt = res.traces.dt;
    double high_start = -1.0;
    int spans_checked = 0;
    for (std::size_t k = 1; k < out.size(); ++k) {
        if (out[k] > 0.0 && out[k - 1] == 0.0) high_start = (double)k * dt;
        if (out[k] == 0.0 && out[k - 1] > 0.0 && high_start >= 0.0) {
            const double span = (double)k * dt - high_start;
            CHECK(std::abs(span - res.t_pw[0]) <= dt * (1.0 + 1e-9));
            ++spans_checked;
        }
    }
    CHECK(spans_checked > 2);
}

TEST_CASE("validation rejects a dt coarser than a tenth of the pulse width") {
    const BiasConfig bias = default_bias(); // t_pw = 10 us at vpw = 1
    const NeuronParams params = default_neuron_params();
    Experiment exp = dc_experiment(40e-6, 1e-3, 2e-6);
    const auto errs = validate(exp, bias, params);
    REQUIRE(!errs.empty());
    CHECK(errs[0].find("dt too coarse") != std::string::npos);
    CHECK_THROWS_AS((run(exp, bias, params, default_power_model())),
                    std::invalid_argument);
}

TEST_CASE("validation rejects sub-dt pulse widths") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    Experiment exp = dc_experiment(40e-6, 1e-3, 1e-6);
    exp.stimuli[0] = Stimulus::pulse_train(1.4, 0.5e-6, 100.0);
    const auto errs = validate(exp, bias, params);
    REQUIRE(!errs.empty());
    bool found = false;
    for (const auto& e : errs)
        if (e.find("width < dt") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("adaptive pair lengthens inter-spike intervals") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();

    Experiment exp;
    exp.stimuli.push_back(Stimulus::dc(1.0 + 1.6e-6 * 10e3));
    exp.neurons.push_back({"primary", std::nullopt, std::nullopt});
    BiasConfig reg_bias = bias;
    reg_bias.vthr = bias.vdd;
    exp.neurons.push_back({"regulator", reg_bias, std::nullopt});
    ChainSpec chain;
    chain.stimulus = 0;
    chain.target = 0;
    chain.r_syn = 10e3;
    chain.v_ref = 1.0;
    exp.chains.push_back(chain);
    AdaptiveLinkSpec link;
    link.pair.primary = 0;
    link.pair.regulator = 1;
    exp.adaptive_links.push_back(link);
    exp.duration = 30e-3;
    exp.dt = 1e-6;
    exp.record = {"mem:1", "thr:0"};

    const auto res = run(exp, bias, params, default_power_model());
    const auto& spikes = res.traces.spike_times[0];
    REQUIRE(spikes.size() >= 4);
    double prev_isi = 0.0;
    for (std::size_t k = 1; k < spikes.size(); ++k) {
        const double isi = spikes[k] - spikes[k - 1];
        CHECK(isi >= prev_isi - 1e-9);
        prev_isi = isi;
    }
    // The regulator membrane ratchets upward while the pool fires.
    const auto& reg = res.traces.series[0];
    CHECK(res.final_states[1].v_mem > bias.vrest);
    CHECK(reg.back() >= reg.front());
}

TEST_CASE("ldo lag slows the delivered read current") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();
    auto build = [&](double tau) {
        Experiment exp;
        exp.stimuli.push_back(Stimulus::single_pulse(1.4, 40e-6, 0.0));
        exp.neurons.push_back({"n0", std::nullopt, std::nullopt});
        ChainSpec chain;
        chain.stimulus = 0;
        chain.target = 0;
        chain.r_syn = 10e3;
        chain.v_ref = 1.0;
        chain.ldo_tau = tau;
        exp.chains.push_back(chain);
        // Short enough that neither run reaches threshold.
        exp.duration = 40e-6;
        exp.dt = 1e-6;
        return exp;
    };
    const auto fast = run(build(0.0), bias, params, default_power_model());
    const auto slow = run(build(50e-6), bias, params, default_power_model());
    CHECK(slow.final_states[0].v_mem < fast.final_states[0].v_mem);
    CHECK(slow.final_states[0].v_mem > bias.vrest);
}

TEST_CASE("a shared regulator integrates the superposed pool output") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();

    // Two primaries on one regulator versus one primary on its own
    // regulator: after the first simultaneous spikes the shared regulator
    // has charged twice as far.
    auto build = [&](std::size_t n_primaries) {
        Experiment exp;
        exp.stimuli.push_back(Stimulus::dc(1.0 + 100e-6 * 10e3));
        for (std::size_t k = 0; k < n_primaries; ++k) {
            exp.neurons.push_back({"p" + std::to_string(k), std::nullopt,
                                   std::nullopt});
            ChainSpec chain;
            chain.stimulus = 0;
            chain.target = k;
            chain.r_syn = 10e3;
            chain.v_ref = 1.0;
            exp.chains.push_back(chain);
        }
        BiasConfig reg_bias = bias;
        reg_bias.vthr = bias.vdd;
        exp.neurons.push_back({"reg", reg_bias, std::nullopt});
        for (std::size_t k = 0; k < n_primaries; ++k) {
            AdaptiveLinkSpec link;
            link.pair.primary = k;
            link.pair.regulator = n_primaries;
            exp.adaptive_links.push_back(link);
        }
        exp.duration = 40e-6; // one pulse width worth of drive
        exp.dt = 1e-6;
        return exp;
    };

    const auto one = run(build(1), bias, params, default_power_model());
    const auto two = run(build(2), bias, params, default_power_model());
    const double rise1 = one.final_states[1].v_mem - bias.vrest;
    const double rise2 = two.final_states[2].v_mem - bias.vrest;
    CHECK(rise1 > 0.0);
    // The regulator leak subtracts once regardless of pool size.
    CHECK(rise2 == doctest::Approx(2.0 * rise1).epsilon(1e-3));
}

TEST_CASE("crossbar wiring carries spikes from rows to columns") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();

    Experiment exp;
    exp.stimuli.push_back(Stimulus::dc(1.0 + 100e-6 * 10e3));
    exp.neurons.push_back({"pre", std::nullopt, std::nullopt});
    exp.neurons.push_back({"post", std::nullopt, std::nullopt});
    ChainSpec chain;
    chain.stimulus = 0;
    chain.target = 0;
    chain.r_syn = 10e3;
    chain.v_ref = 1.0;
    exp.chains.push_back(chain);

    CrossbarSpec spec;
    spec.xbar = Crossbar(1, 1);
    spec.xbar.at(0, 0) = 1e-4; // 10 kOhm cell
    spec.row_sources = {0};
    spec.col_targets = {1};
    exp.crossbars.push_back(spec);
    exp.duration = 50e-3;
    exp.dt = 1e-6;

    const auto res = run(exp, bias, params, default_power_model());
    CHECK(res.traces.spike_times[0].size() > 10);
    // The post neuron integrates the gated pulses and eventually fires.
    CHECK(res.final_states[1].v_mem + res.traces.spike_times[1].size() > 0.6);
}

TEST_CASE("plasticity updates the crossbar at presynaptic spikes") {
    const BiasConfig bias = default_bias();
    const NeuronParams params = default_neuron_params();

    Experiment exp;
    exp.stimuli.push_back(Stimulus::dc(1.0 + 100e-6 * 10e3));
    exp.neurons.push_back({"pre", std::nullopt, std::nullopt});
    exp.neurons.push_back({"post", std::nullopt, std::nullopt});
    ChainSpec chain;
    chain.stimulus = 0;
    chain.target = 0;
    chain.r_syn = 10e3;
    chain.v_ref = 1.0;
    exp.chains.push_back(chain);

    CrossbarSpec spec;
    spec.xbar = Crossbar(1, 1);
    const double g0 = 5e-5;
    spec.xbar.at(0, 0) = g0;
    spec.row_sources = {0};
    spec.col_targets = {1};
    spec.vdsp_enabled = true;
    exp.crossbars.push_back(spec);
    exp.duration = 20e-3;
    exp.dt = 1e-6;

    const auto res = run(exp, bias, params, default_power_model());
    REQUIRE(res.final_crossbars.size() == 1);
    const double g_end = res.final_crossbars[0].at(0, 0);
    CHECK(g_end != g0);
    CHECK(g_end >= spec.vdsp.g_min);
    CHECK(g_end <= spec.vdsp.g_max);
}
