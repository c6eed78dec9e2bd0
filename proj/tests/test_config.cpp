#include <doctest.h>

#include <stdexcept>

#include "memlif/config.hpp"

using namespace memlif;

TEST_CASE("empty config parses to valid defaults") {
    const auto result = parse_config("");
    REQUIRE(result.config.has_value());
    CHECK(result.diagnostics.empty());
    CHECK(result.config->bias.vdd == 3.3);
    CHECK(result.config->stimulus.kind == "dc");
    CHECK(!result.config->crossbar.enabled);
}

TEST_CASE("bias invariant violations surface as diagnostics") {
    const auto result = parse_config("[bias]\nvrest = 1.5\n");
    CHECK(!result.config.has_value());
    REQUIRE(!result.diagnostics.empty());
    bool names_both = false;
    for (const auto& d : result.diagnostics)
        if (d.message.find("vrest") != std::string::npos &&
            d.message.find("vthr") != std::string::npos)
            names_both = true;
    CHECK(names_both);
}

TEST_CASE("unknown sections and keys are reported with line numbers") {
    const auto r1 = parse_config("[nonsense]\nx = 1\n");
    REQUIRE(!r1.diagnostics.empty());
    CHECK(r1.diagnostics[0].line == 1);

    const auto r2 = parse_config("[bias]\nvdd = 3.3\nvfoo = 1\n");
    REQUIRE(!r2.diagnostics.empty());
    CHECK(r2.diagnostics[0].line == 3);
    CHECK(r2.diagnostics[0].message.find("vfoo") != std::string::npos);

    const auto r3 = parse_config("vdd = 3.3\n");
    REQUIRE(!r3.diagnostics.empty());
    CHECK(r3.diagnostics[0].message.find("outside any section") !=
          std::string::npos);
}

TEST_CASE("type mismatches are reported with line numbers") {
    const auto r = parse_config("[experiment]\nduration = fast\n");
    REQUIRE(!r.diagnostics.empty());
    CHECK(r.diagnostics[0].line == 2);
    CHECK(r.diagnostics[0].message.find("number") != std::string::npos);
}

TEST_CASE("comments and blank lines are ignored") {
    const auto r = parse_config(
        "# a comment\n\n[bias]\n; another\nvthr = 1.8\n");
    REQUIRE(r.config.has_value());
    CHECK(r.config->bias.vthr == 1.8);
}

TEST_CASE("config round-trips through serialize and parse") {
    const std::string text =
        "[bias]\nvthr = 1.8\nvtaun = 1.35\n"
        "[params]\nc1 = 6.4e-12\n"
        "[experiment]\nduration = 0.25\ndt = 5e-7\nrecord = mem:0,out:0\n"
        "power_gating = true\n"
        "[stimulus]\nkind = pulse_train\namplitude = 1.4\nwidth = 1e-5\n"
        "rate = 100\nr_syn = 25e3\nv_ref = 1.0\n"
        "[power]\nldo_static = 9e-6\n";
    const auto first = parse_config(text);
    REQUIRE(first.config.has_value());
    const std::string canon = serialize_config(*first.config);
    const auto second = parse_config(canon);
    REQUIRE(second.config.has_value());
    CHECK(serialize_config(*second.config) == canon);
    CHECK(second.config->bias.vthr == 1.8);
    CHECK(second.config->stimulus.r_syn == 25e3);
    CHECK(second.config->experiment.power_gating);
    CHECK(second.config->power.ldo_static == 9e-6);
}

TEST_CASE("set_config_value reaches bias and stimulus fields") {
    auto r = parse_config("");
    ParsedConfig cfg = *r.config;
    set_config_value(cfg, "bias.vthr", 0.9);
    CHECK(cfg.bias.vthr == 0.9);
    set_config_value(cfg, "stimulus.r_syn", 50e3);
    CHECK(cfg.stimulus.r_syn == 50e3);
    set_config_value(cfg, "stimulus.level", 1.25);
    CHECK(cfg.stimulus.level == 1.25);
    CHECK_THROWS_AS((set_config_value(cfg, "bias.nope", 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS((set_config_value(cfg, "params.c1", 1.0)),
                    std::invalid_argument);
}

TEST_CASE("build_experiment wires the single-chain topology") {
    auto r = parse_config(
        "[experiment]\nduration = 0.01\ndt = 1e-6\n"
        "[stimulus]\nkind = dc\nlevel = 1.25\nr_syn = 25e3\nv_ref = 1.0\n");
    REQUIRE(r.config.has_value());
    const Experiment exp = build_experiment(*r.config);
    REQUIRE(exp.neurons.size() == 1);
    REQUIRE(exp.chains.size() == 1);
    CHECK(exp.chains[0].r_syn == 25e3);
    CHECK(exp.record.size() == 2); // mem:0,out:0 defaults
    const auto errs = validate(exp, r.config->bias, r.config->params.neuron);
    CHECK(errs.empty());
}

TEST_CASE("build_experiment wires the two-layer crossbar topology") {
    auto r = parse_config(
        "[experiment]\nduration = 0.01\ndt = 1e-6\n"
        "[stimulus]\nkind = dc\nlevel = 2.0\nr_syn = 10e3\nv_ref = 1.0\n"
        "[crossbar]\nrows = 4\ncols = 2\ng = 5e-5\nvdsp = true\n");
    REQUIRE(r.config.has_value());
    const Experiment exp = build_experiment(*r.config);
    CHECK(exp.neurons.size() == 6);
    CHECK(exp.chains.size() == 4);
    REQUIRE(exp.crossbars.size() == 1);
    CHECK(exp.crossbars[0].xbar.rows == 4);
    CHECK(exp.crossbars[0].xbar.cols == 2);
    CHECK(exp.crossbars[0].vdsp_enabled);
    const auto errs = validate(exp, r.config->bias, r.config->params.neuron);
    CHECK(errs.empty());
}
