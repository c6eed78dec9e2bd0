#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "memlif/signal_chain.hpp"

using namespace memlif;

TEST_CASE("synapse current is ohmic above the clamp") {
    CHECK(synapse_current({25e3, 1.25, 1.0}) == doctest::Approx(10e-6).epsilon(1e-12));
}

TEST_CASE("synapse current clamps one-sided") {
    CHECK(synapse_current({25e3, 1.0, 1.0}) == 0.0);
    CHECK(synapse_current({25e3, 0.5, 1.0}) == 0.0); // never negative
}

TEST_CASE("synapse current rejects nonpositive resistance") {
    CHECK_THROWS_AS((synapse_current({0.0, 1.25, 1.0})), std::invalid_argument);
    CHECK_THROWS_AS((synapse_current({-5.0, 1.25, 1.0})), std::invalid_argument);
}

TEST_CASE("ldo node voltage follows the smaller of input and reference") {
    CHECK(ldo_node_voltage({10e3, 1.4, 1.0}) == 1.0);
    CHECK(ldo_node_voltage({10e3, 1.0, 1.0}) == 1.0);
    CHECK(ldo_node_voltage({10e3, 0.2, 1.0}) == 0.2);
}

TEST_CASE("attenuator divides by K") {
    const NeuronParams p = default_neuron_params();
    const auto out = attenuate(10e-6, p);
    CHECK(out.i_att == doctest::Approx(20e-9).epsilon(1e-12));
    CHECK(!out.saturated);
}

TEST_CASE("attenuator zero maps to zero") {
    const auto out = attenuate(0.0, default_neuron_params());
    CHECK(out.i_att == 0.0);
    CHECK(!out.saturated);
}

TEST_CASE("attenuator clamps above the 200 uA ceiling") {
    const auto out = attenuate(300e-6, default_neuron_params());
    CHECK(out.i_att == doctest::Approx(400e-9).epsilon(1e-12));
    CHECK(out.saturated);
}

TEST_CASE("attenuator rejects negative input") {
    CHECK_THROWS_AS((attenuate(-1e-9, default_neuron_params())),
                    std::invalid_argument);
}

TEST_CASE("attenuation ratio is constant over the full input range") {
    const NeuronParams p = default_neuron_params();
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(std::log(1e-12),
                                               std::log(200e-6));
    for (int k = 0; k < 200; ++k) {
        const double i = std::exp(uni(rng));
        const auto out = attenuate(i, p);
        CHECK(out.i_att / i == doctest::Approx(1.0 / p.attenuation_k).epsilon(1e-12));
        CHECK(!out.saturated);
    }
}

TEST_CASE("current doubles with overdrive and shrinks with resistance") {
    const double base = synapse_current({50e3, 1.25, 1.0});
    CHECK(synapse_current({50e3, 1.5, 1.0}) ==
          doctest::Approx(2.0 * base).epsilon(1e-12));
    double prev = 1e9;
    for (double r = 10e3; r <= 1e6; r *= 2.0) {
        const double i = synapse_current({r, 1.25, 1.0});
        CHECK(i < prev);
        prev = i;
    }
}

TEST_CASE("composed chain spans 50 nA down to 0.5 nA monotonically") {
    const NeuronParams p = default_neuron_params();
    double prev = 1e9;
    for (int k = 0; k <= 20; ++k) {
        const double r = 10e3 * std::pow(100.0, k / 20.0);
        const auto out = read_chain({r, 1.25, 1.0}, p); // 250 mV read
        CHECK(out.i_att < prev);
        prev = out.i_att;
        if (k == 0) CHECK(out.i_att == doctest::Approx(50e-9).epsilon(1e-9));
        if (k == 20) CHECK(out.i_att == doctest::Approx(0.5e-9).epsilon(1e-9));
    }
}

TEST_CASE("ldo lag defaults to exact passthrough") {
    LdoLag lag;
    CHECK(lag.filter(3e-6, 1e-6) == 3e-6);
    LdoLag slow(1e-5);
    double v = 0.0;
    for (int k = 0; k < 100; ++k) v = slow.filter(1e-6, 1e-6);
    CHECK(v == doctest::Approx(1e-6).epsilon(1e-3));
    CHECK(slow.filter(1e-6, 1e-6) < 1e-6); // still settling from below
}
