#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "memlif/calibration.hpp"
#include "memlif/csv.hpp"
#include "memlif/neuron.hpp"

using namespace memlif;

namespace {

std::string temp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Targets regenerated from known parameters: a consistent, fully
// recoverable anchor set.
AnchorSet synthetic_anchors(const NeuronParams& p, double vpw_dc) {
    AnchorSet set = default_anchors();
    for (auto& a : set.anchors) {
        a.target = predict_observable(a, p, vpw_dc);
        a.bound = AnchorBound::Equal;
    }
    return set;
}

NeuronParams truth_params() {
    // Chosen so every synthetic anchor observable is strictly positive
    // (the 7 us pulsed anchor needs i_dn0 below ~56 pA).
    NeuronParams p;
    p.c1 = 6e-12;
    p.i_dn0 = 40e-12;
    p.i_up0 = 0.8e-9;
    p.v_leak_slope = 0.07;
    return p;
}

} // namespace

TEST_CASE("builtin anchor set carries the measured numbers") {
    const AnchorSet set = default_anchors();
    CHECK(set.anchors.size() >= 14);
    for (const auto& a : set.anchors) {
        CHECK(!a.source.empty());
        CHECK(a.weight == 1.0);
        CHECK(a.target > 0.0);
    }
    // Spot targets.
    CHECK(set.anchors[0].target == 419.0);
    CHECK(set.anchors[1].target == 59e3);
    CHECK(set.anchors[2].target == 800.0);
    CHECK(set.anchors[3].target == 68e3);
}

TEST_CASE("pulse-width anchors pin the map exactly") {
    AnchorSet set = default_anchors();
    NeuronParams p = default_neuron_params();
    p.pw_t0 = 1.0;
    p.pw_v0 = 0.0;
    p.pw_slope = 1.0;
    fit_pulse_width_map(set, p);
    CHECK(pulse_width(0.45, p) == doctest::Approx(20e-3).epsilon(1e-9));
    CHECK(pulse_width(1.0, p) == doctest::Approx(10e-6).epsilon(1e-9));
}

TEST_CASE("synthetic anchors are recovered to under one percent") {
    const NeuronParams truth = truth_params();
    const double vpw_dc_truth = 0.9;
    const AnchorSet anchors = synthetic_anchors(truth, vpw_dc_truth);

    NeuronParams initial;
    initial.c1 = 2e-12;
    initial.i_dn0 = 10e-12;
    initial.i_up0 = 10e-12;
    initial.v_leak_slope = 0.12;
    const FitResult result = fit(anchors, initial, 12345);

    for (std::size_t k = 0; k < anchors.anchors.size(); ++k)
        CHECK(std::abs(result.residuals[k]) < 0.01);
}

TEST_CASE("fit is deterministic for a fixed seed") {
    const AnchorSet anchors = default_anchors();
    const NeuronParams initial = default_neuron_params();
    const FitResult a = fit(anchors, initial, 777);
    const FitResult b = fit(anchors, initial, 777);
    CHECK(a.params.c1 == b.params.c1);
    CHECK(a.params.i_dn0 == b.params.i_dn0);
    CHECK(a.params.i_up0 == b.params.i_up0);
    CHECK(a.params.v_leak_slope == b.params.v_leak_slope);
    CHECK(a.vpw_dc == b.vpw_dc);
    CHECK(a.objective == b.objective);
}

TEST_CASE("fitted parameters respect the bounds") {
    const FitResult r = fit(default_anchors(), default_neuron_params(), 1);
    CHECK(r.params.c1 >= 0.1e-12);
    CHECK(r.params.c1 <= 100e-12);
    CHECK(r.params.i_dn0 >= 1e-12);
    CHECK(r.params.i_dn0 <= 100e-9);
    CHECK(r.params.i_up0 >= 1e-12);
    CHECK(r.params.i_up0 <= 100e-9);
    CHECK(r.params.v_leak_slope >= 0.02);
    CHECK(r.params.v_leak_slope <= 0.3);
    CHECK(r.vpw_dc >= 0.45);
    CHECK(r.vpw_dc <= 1.1);
}

TEST_CASE("best objective is monotone nonincreasing over evaluations") {
    const FitResult r = fit(default_anchors(), default_neuron_params(), 5);
    REQUIRE(!r.best_objective_history.empty());
    for (std::size_t k = 1; k < r.best_objective_history.size(); ++k)
        CHECK(r.best_objective_history[k] <= r.best_objective_history[k - 1]);
}

TEST_CASE("pulse-width anchors report zero residual after any fit") {
    const FitResult r = fit(default_anchors(), default_neuron_params(), 3);
    const AnchorSet anchors = default_anchors();
    for (std::size_t k = 0; k < anchors.anchors.size(); ++k)
        if (anchors.anchors[k].kind == AnchorKind::PulseWidth)
            CHECK(std::abs(r.residuals[k]) < 1e-9);
}

TEST_CASE("residual report is complete and sorted by error magnitude") {
    const AnchorSet anchors = default_anchors();
    const FitResult r = fit(anchors, default_neuron_params(), 9);
    const auto rows = residual_report(r, anchors);
    REQUIRE(rows.size() == anchors.anchors.size());
    for (std::size_t k = 1; k < rows.size(); ++k)
        CHECK(std::abs(rows[k].rel_error) <=
              std::abs(rows[k - 1].rel_error) + 1e-15);

    // Perfect fit reports all zeros.
    const NeuronParams truth = truth_params();
    const AnchorSet synth = synthetic_anchors(truth, 0.9);
    FitResult perfect;
    perfect.params = truth;
    perfect.vpw_dc = 0.9;
    fit_pulse_width_map(synth, perfect.params);
    for (const auto& row : residual_report(perfect, synth))
        CHECK(std::abs(row.rel_error) < 1e-9);
}

TEST_CASE("residual report csv round-trips through the csv reader") {
    const AnchorSet anchors = default_anchors();
    const FitResult r = fit(anchors, default_neuron_params(), 2);
    const auto rows = residual_report(r, anchors);
    const auto lines = residual_report_csv(rows);
    const std::string path = temp_file("memlif_report_test.csv");
    csv::write_lines(path, lines);
    const auto table = csv::read_table(path);
    REQUIRE(table.size() == rows.size() + 1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(csv::parse_double(table[k + 1][1]) == rows[k].target);
        CHECK(csv::parse_double(table[k + 1][2]) == rows[k].simulated);
        CHECK(csv::parse_double(table[k + 1][3]) == rows[k].rel_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("anchor csv round-trips") {
    const AnchorSet anchors = default_anchors();
    const std::string path = temp_file("memlif_anchors_test.csv");
    save_anchors_csv(anchors, path);
    const AnchorSet loaded = load_anchors_csv(path);
    REQUIRE(loaded.anchors.size() == anchors.anchors.size());
    for (std::size_t k = 0; k < anchors.anchors.size(); ++k) {
        CHECK(loaded.anchors[k].kind == anchors.anchors[k].kind);
        CHECK(loaded.anchors[k].target == anchors.anchors[k].target);
        CHECK(loaded.anchors[k].bound == anchors.anchors[k].bound);
        CHECK(loaded.anchors[k].i_syn == anchors.anchors[k].i_syn);
        CHECK(loaded.anchors[k].pulse_width_s ==
              anchors.anchors[k].pulse_width_s);
    }
    std::remove(path.c_str());
}

TEST_CASE("malformed anchor files name the offending line") {
    const std::string path = temp_file("memlif_anchors_bad.csv");

    csv::write_lines(path, {});
    CHECK_THROWS_WITH_AS(load_anchors_csv(path),
                         doctest::Contains("empty"), std::runtime_error);

    csv::write_lines(path, {"kind,target", "dc_rate,1"});
    CHECK_THROWS_WITH_AS(load_anchors_csv(path),
                         doctest::Contains("line 1"), std::runtime_error);

    csv::write_lines(
        path,
        {"kind,target,weight,bound,i_syn,vthr,vpw,vtaun,pulse_width_s,"
         "pulse_rate_hz,source",
         "dc_rate,not_a_number,1,eq,1e-5,1.8,1,1.2,0,0,x"});
    CHECK_THROWS_WITH_AS(load_anchors_csv(path),
                         doctest::Contains("line 2"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("params files round-trip") {
    CalibratedParams cp;
    cp.neuron = truth_params();
    cp.neuron.comparator_mode = ComparatorMode::LowPower;
    cp.vpw_dc = 0.77;
    const std::string path = temp_file("memlif_params_test.txt");
    save_params_file(cp, path);
    const CalibratedParams loaded = load_params_file(path);
    CHECK(loaded.neuron.c1 == cp.neuron.c1);
    CHECK(loaded.neuron.i_dn0 == cp.neuron.i_dn0);
    CHECK(loaded.neuron.i_up0 == cp.neuron.i_up0);
    CHECK(loaded.neuron.v_leak_slope == cp.neuron.v_leak_slope);
    CHECK(loaded.neuron.pw_slope == cp.neuron.pw_slope);
    CHECK(loaded.neuron.comparator_mode == ComparatorMode::LowPower);
    CHECK(loaded.vpw_dc == cp.vpw_dc);
    std::remove(path.c_str());
}

TEST_CASE("hand-edited params files tolerate spaces around the equals") {
    const std::string path = temp_file("memlif_params_spaced.txt");
    csv::write_lines(path, {"c1 = 7e-12", " i_dn0=5e-11 "});
    const CalibratedParams loaded = load_params_file(path);
    CHECK(loaded.neuron.c1 == 7e-12);
    CHECK(loaded.neuron.i_dn0 == 5e-11);
    std::remove(path.c_str());
}

TEST_CASE("params files reject unknown keys with a line number") {
    const std::string path = temp_file("memlif_params_unknown.txt");
    csv::write_lines(path, {"c1=7e-12", "c2=1e-12"});
    CHECK_THROWS_WITH_AS(load_params_file(path), doctest::Contains("line 2"),
                         std::runtime_error);
    std::remove(path.c_str());
}
