// Copyright 2026 The qerrac developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qerrac/montecarlo.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qerrac/chain.hpp"
#include "qerrac/group.hpp"
#include "qerrac/rng.hpp"
#include "qerrac/states.hpp"

using namespace qerrac;

namespace {

PureState zeta() { return parse_state("sqrt(7/10)|0>+sqrt(3/10)|1>"); }

SimConfig zeta_config(const GroupTable& table, double r) {
    return SimConfig(table, zeta(), zeta(), GateDistribution::uniform(table.order()),
                     ErrorModel::depolarizing(table, r));
}

/// Fraction of grid points where |empirical - analytic| <= 3 standard errors,
/// with the error floored by the analytic binomial deviation so exact-zero
/// cells do not divide by nothing.
double fraction_within_3se(const std::vector<double>& empirical,
                           const std::vector<double>& empirical_se,
                           const std::vector<double>& analytic,
                           int runs) {
    REQUIRE(empirical.size() == analytic.size());
    int hits = 0;
    for (std::size_t i = 0; i < empirical.size(); ++i) {
        double se = std::max(empirical_se[i],
                             std::sqrt(analytic[i] * (1.0 - analytic[i]) / runs));
        se = std::max(se, 1e-9);
        if (std::abs(empirical[i] - analytic[i]) <= 3.0 * se + 1e-12) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(empirical.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Counter-based generator: known-answer vectors and stream mechanics
// ---------------------------------------------------------------------------

TEST_CASE("random blocks match the reference implementation bit for bit") {
    using Block = std::array<std::uint64_t, 4>;
    struct Vector {
        Block counter;
        std::uint64_t key0, key1;
        Block expected;
    };
    const std::vector<Vector> vectors = {
        {{1, 0, 0, 0}, 0, 0,
         {0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL,
          0x1c8667a55d902e79ULL, 0x907d7a052fd5b4dcULL}},
        {{2, 0, 0, 0}, 0, 0,
         {0x809bf322883987c3ULL, 0x471128b9e807f7ddULL,
          0xf250ba0dbec065b7ULL, 0xfc6ed66767a457bcULL}},
        {{1, 0, 0, 0}, 0xdeadbeefULL, 0x12345678ULL,
         {0x3d1c495a41eeb326ULL, 0xdcedb98424497b4eULL,
          0xacae59a90b703e83ULL, 0x0d4e4aeb7df73661ULL}},
        {{2, 0, 0, 0}, 0xdeadbeefULL, 0x12345678ULL,
         {0x9ec53fa9ae78f367ULL, 0xbf67904f27d8d3efULL,
          0x979fc862f3f8f709ULL, 0xbd85ba4c59b6367aULL}},
        {{2, 2, 3, 4}, 42, 7,
         {0x0c1a6ad67ab1ff2aULL, 0x063a458c4e7dfa5dULL,
          0x00e93d4f3536cb20ULL, 0x589d7f3c534e5e31ULL}},
    };
    for (const Vector& v : vectors) {
        Block got = PhiloxRng::block(v.counter, v.key0, v.key1);
        CHECK(got[0] == v.expected[0]);
        CHECK(got[1] == v.expected[1]);
        CHECK(got[2] == v.expected[2]);
        CHECK(got[3] == v.expected[3]);
    }
}

TEST_CASE("streams draw their own blocks in counter order") {
    PhiloxRng rng(0, 0);
    auto first = PhiloxRng::block({0, 0, 0, 0}, 0, 0);
    auto second = PhiloxRng::block({1, 0, 0, 0}, 0, 0);
    for (int i = 0; i < 4; ++i) {
        CHECK(rng.next_u64() == first[static_cast<std::size_t>(i)]);
    }
    CHECK(rng.next_u64() == second[0]);

    // Distinct streams and seeds must decorrelate immediately.
    PhiloxRng other_stream(0, 1);
    PhiloxRng other_seed(1, 0);
    CHECK(other_stream.next_u64() != first[0]);
    CHECK(other_seed.next_u64() != first[0]);

    // Uniform doubles live in [0, 1).
    PhiloxRng u(123, 5);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }

    CHECK_THROWS_AS(u.uniform_index(0), std::invalid_argument);
    for (int i = 0; i < 200; ++i) {
        CHECK(u.uniform_index(7) < 7);
    }
}

TEST_CASE("one-step gate and fault frequencies match their distributions") {
    GroupTable table = generate_pauli_group(1);
    GateDistribution kappa = GateDistribution::from_probabilities({0.4, 0.3, 0.2, 0.1});
    ErrorModel err = ErrorModel::depolarizing(table, 0.2);

    const int samples = 1000000;
    PhiloxRng rng(991, 0);
    std::array<std::array<long long, 4>, 4> counts{};
    for (int i = 0; i < samples; ++i) {
        int gate = kappa.sample(rng);
        int fault = err.sample(gate, rng);
        ++counts[static_cast<std::size_t>(gate)][static_cast<std::size_t>(fault)];
    }
    for (int gate = 0; gate < 4; ++gate) {
        for (int fault = 0; fault < 4; ++fault) {
            double expected = kappa.prob(gate) * err.prob(fault, gate);
            double freq = static_cast<double>(
                              counts[static_cast<std::size_t>(gate)][static_cast<std::size_t>(fault)]) /
                          samples;
            double se = std::sqrt(expected * (1.0 - expected) / samples);
            CHECK(std::abs(freq - expected) <= 4.0 * se);
        }
    }
}

// ---------------------------------------------------------------------------
// Simulation: exact contracts
// ---------------------------------------------------------------------------

TEST_CASE("a faultless model never leaves the faultless trajectory") {
    GroupTable table = generate_pauli_group(1);
    SimConfig cfg(table, zeta(), zeta(), GateDistribution::uniform(4),
                  ErrorModel::none(table));
    cfg.runs = 50;
    cfg.tau = 30;
    cfg.seed = 7;
    cfg.deltas = {0.0, 0.5};
    SimResult result = simulate(cfg);
    for (int t = 0; t <= 30; ++t) {
        CHECK(result.e_dist[t] == 0.0);
        CHECK(result.p_error[0][t] == 0.0);
        CHECK(result.p_max_error[1][t] == 0.0);
    }
}

TEST_CASE("replay is bit-identical for any seed and thread count") {
    GroupTable table = generate_pauli_group(1);
    SimConfig cfg = zeta_config(table, 0.2);
    cfg.runs = 400;
    cfg.tau = 25;
    cfg.seed = 20260816;
    cfg.deltas = {0.2, 0.5};

    cfg.threads = 1;
    SimResult serial = simulate(cfg);
    cfg.threads = 4;
    SimResult parallel = simulate(cfg);
    CHECK(serial.e_dist == parallel.e_dist);
    CHECK(serial.e_dist_se == parallel.e_dist_se);
    CHECK(serial.p_error == parallel.p_error);
    CHECK(serial.p_max_error == parallel.p_max_error);
    CHECK(serial.p_error_se == parallel.p_error_se);
    CHECK(serial.p_max_error_se == parallel.p_max_error_se);

    SimResult again = simulate(cfg);
    CHECK(again.e_dist == parallel.e_dist);
    CHECK(again.p_max_error == parallel.p_max_error);

    cfg.seed = 99;
    SimResult reseeded = simulate(cfg);
    CHECK(reseeded.e_dist != serial.e_dist);

    // Hitting-time estimation obeys the same replay contract.
    cfg.seed = 20260816;
    cfg.threads = 1;
    HittingEstimate h1 = empirical_hitting_time(cfg, 0.5);
    cfg.threads = 3;
    HittingEstimate h2 = empirical_hitting_time(cfg, 0.5);
    CHECK(h1.mean == h2.mean);
    CHECK(h1.std_error == h2.std_error);
    CHECK(h1.censored_fraction == h2.censored_fraction);
}

TEST_CASE("empirical curves keep their structural invariants") {
    GroupTable table = generate_pauli_group(1);
    SimConfig cfg = zeta_config(table, 0.2);
    cfg.runs = 300;
    cfg.tau = 20;
    cfg.seed = 5;
    cfg.deltas = {0.2, 0.5, 0.95};
    SimResult result = simulate(cfg);

    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        for (int t = 0; t <= 20; ++t) {
            CHECK(result.p_error[k][t] >= 0.0);
            CHECK(result.p_error[k][t] <= 1.0);
            // Running maximum dominates the endpoint and never decreases.
            CHECK(result.p_max_error[k][t] >= result.p_error[k][t]);
            if (t > 0) {
                CHECK(result.p_max_error[k][t] >= result.p_max_error[k][t - 1]);
            }
            // Larger thresholds are exceeded no more often.
            if (k > 0) {
                CHECK(result.p_error[k][t] <= result.p_error[k - 1][t]);
            }
            // The pinned standard-error formula.
            CHECK(result.p_error_se[k][t] ==
                  doctest::Approx(std::sqrt(result.p_error[k][t] *
                                            (1.0 - result.p_error[k][t]) / cfg.runs))
                      .scale(1)
                      .epsilon(1e-15));
        }
    }
}

TEST_CASE("inconsistent configurations are rejected") {
    GroupTable table = generate_pauli_group(1);
    SimConfig good = zeta_config(table, 0.2);
    good.runs = 10;
    good.tau = 5;

    SimConfig bad_runs = good;
    bad_runs.runs = 0;
    CHECK_THROWS_AS(simulate(bad_runs), std::invalid_argument);

    SimConfig bad_deltas = good;
    bad_deltas.deltas = {0.5, 0.2};
    CHECK_THROWS_AS(simulate(bad_deltas), std::invalid_argument);

    SimConfig bad_dim(table, PureState::basis(2, 0), PureState::basis(2, 0),
                      GateDistribution::uniform(4), ErrorModel::depolarizing(table, 0.1));
    CHECK_THROWS_AS(simulate(bad_dim), std::invalid_argument);

    SimConfig bad_kappa(table, zeta(), zeta(), GateDistribution::uniform(5),
                        ErrorModel::depolarizing(table, 0.1));
    CHECK_THROWS_AS(simulate(bad_kappa), std::invalid_argument);

    SimConfig bad_circuit = good;
    bad_circuit.mode = SimMode::kFixedCircuit;
    bad_circuit.circuit.gates = {0, 9};
    CHECK_THROWS_AS(simulate(bad_circuit), std::invalid_argument);

    SimConfig bad_tau = good;
    bad_tau.tau = -1;
    CHECK_THROWS_AS(simulate(bad_tau), std::invalid_argument);

    // Benchmarking needs the all-qubit flip; {I, Z} lacks it.
    CMatrix identity2 = gates::identity(2);
    GroupTable no_flip = GroupTable::from_elements(
        "phase_only", 1, {identity2, gates::pauli_z()}, {{"Z", gates::pauli_z()}});
    SimConfig rb(no_flip, PureState::basis(1, 1), PureState::basis(1, 1),
                 GateDistribution::uniform(2), ErrorModel::uniform_over_group(no_flip, 0.1));
    rb.mode = SimMode::kRandomizedBenchmarking;
    rb.tau = 3;
    rb.runs = 5;
    CHECK_THROWS_AS(simulate(rb), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Simulation: statistical agreement with the analytic engine
// ---------------------------------------------------------------------------

TEST_CASE("random-circuit sampling reproduces the analytic curves") {
    GroupTable table = generate_pauli_group(1);
    const double r = 0.2;
    SimConfig cfg = zeta_config(table, r);
    cfg.runs = 3000;
    cfg.tau = 40;
    cfg.seed = 314159;
    cfg.deltas = {0.2, 0.5};
    SimResult result = simulate(cfg);

    CoupledChain chain =
        build_coupled_chain(table, zeta(), zeta(), GateDistribution::uniform(4),
                            ErrorModel::depolarizing(table, r));
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        BadSet bad = bad_set(chain, cfg.deltas[k]);
        std::vector<double> analytic_end(41), analytic_max(41);
        for (int t = 0; t <= 40; ++t) {
            analytic_end[static_cast<std::size_t>(t)] = error_distribution(chain, bad, t);
            analytic_max[static_cast<std::size_t>(t)] =
                max_error_distribution(chain, bad, t);
        }
        CHECK(fraction_within_3se(result.p_error[k], result.p_error_se[k], analytic_end,
                                  cfg.runs) >= 0.95);
        CHECK(fraction_within_3se(result.p_max_error[k], result.p_max_error_se[k],
                                  analytic_max, cfg.runs) >= 0.95);
    }

    // Mean distance against the analytic expectation with its own errors.
    int hits = 0;
    for (int t = 0; t <= 40; ++t) {
        double se = std::max(result.e_dist_se[static_cast<std::size_t>(t)], 1e-9);
        if (std::abs(result.e_dist[static_cast<std::size_t>(t)] -
                     expected_error(chain, t)) <= 3.0 * se + 1e-12) {
            ++hits;
        }
    }
    CHECK(static_cast<double>(hits) / 41.0 >= 0.95);
}

TEST_CASE("benchmarking mode follows the homogeneous law for invariant faults") {
    GroupTable clifford1 = generate_clifford_group(1);
    SimConfig cfg(clifford1, PureState::basis(1, 1), PureState::basis(1, 1),
                  GateDistribution::uniform(24), ErrorModel::depolarizing(clifford1, 0.01));
    cfg.mode = SimMode::kRandomizedBenchmarking;
    cfg.runs = 600;
    cfg.tau = 50;
    cfg.seed = 424242;
    cfg.deltas = {0.1, 0.2};
    SimResult result = simulate(cfg);

    CoupledChain chain = build_coupled_chain(
        clifford1, PureState::basis(1, 1), PureState::basis(1, 1),
        GateDistribution::uniform(24), ErrorModel::depolarizing(clifford1, 0.01));
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
        BadSet bad = bad_set(chain, cfg.deltas[k]);
        std::vector<double> analytic_end(51), analytic_max(51);
        for (int t = 0; t <= 50; ++t) {
            analytic_end[static_cast<std::size_t>(t)] = error_distribution(chain, bad, t);
            analytic_max[static_cast<std::size_t>(t)] =
                max_error_distribution(chain, bad, t);
        }
        CHECK(fraction_within_3se(result.p_error[k], result.p_error_se[k], analytic_end,
                                  cfg.runs) >= 0.95);
        CHECK(fraction_within_3se(result.p_max_error[k], result.p_max_error_se[k],
                                  analytic_max, cfg.runs) >= 0.95);
    }
}

TEST_CASE("fixed-circuit sampling reproduces the factor-chain curves") {
    GroupTable table = generate_pauli_group(1);
    ErrorModel err = ErrorModel::depolarizing(table, 0.25);
    SimConfig cfg(table, zeta(), zeta(), GateDistribution::uniform(4), err);
    cfg.mode = SimMode::kFixedCircuit;
    cfg.circuit.gates = {1, 3, 2, 1, 0, 2};
    cfg.runs = 4000;
    cfg.seed = 2718;
    cfg.deltas = {0.3};
    SimResult result = simulate(cfg);
    CHECK(result.tau == 6);

    InhomogeneousChain chain =
        build_inhomogeneous_chain(table, cfg.circuit, zeta(), zeta(), err, 1.0, 0.3);
    std::vector<double> analytic_end(7), analytic_max(7);
    for (int t = 0; t <= 6; ++t) {
        analytic_end[static_cast<std::size_t>(t)] = nonrandom_error_distribution(chain, t);
        analytic_max[static_cast<std::size_t>(t)] = nonrandom_max_error(chain, t);
    }
    CHECK(fraction_within_3se(result.p_error[0], result.p_error_se[0], analytic_end,
                              cfg.runs) >= 0.95);
    CHECK(fraction_within_3se(result.p_max_error[0], result.p_max_error_se[0],
                              analytic_max, cfg.runs) >= 0.95);
}

// ---------------------------------------------------------------------------
// Hitting-time estimation
// ---------------------------------------------------------------------------

TEST_CASE("empirical hitting times recover the geometric mean") {
    GroupTable table = generate_pauli_group(1);
    SimConfig cfg = zeta_config(table, 0.2);
    cfg.runs = 2000;
    cfg.tau = 500;
    cfg.seed = 8080;

    HittingEstimate estimate = empirical_hitting_time(cfg, 0.5);
    CHECK(estimate.censored_fraction == 0.0);
    CHECK(estimate.uncensored_runs == 2000);
    CHECK(std::abs(estimate.mean - 7.5) <= 3.0 * estimate.std_error);
    CHECK(estimate.std_error > 0.0);
    CHECK(estimate.std_error < 0.5);

    // Same configuration against the linear-solve expectation.
    CoupledChain chain =
        build_coupled_chain(table, zeta(), zeta(), GateDistribution::uniform(4),
                            ErrorModel::depolarizing(table, 0.2));
    double analytic = expected_hitting_time(chain, bad_set(chain, 0.5))(chain.start);
    CHECK(std::abs(estimate.mean - analytic) <= 3.0 * estimate.std_error);
}

TEST_CASE("unattainable thresholds censor every run") {
    GroupTable table = generate_pauli_group(1);
    SimConfig cfg = zeta_config(table, 0.2);
    cfg.runs = 100;
    cfg.tau = 50;
    cfg.seed = 11;

    HittingEstimate estimate = empirical_hitting_time(cfg, 1.0);
    CHECK(estimate.censored_fraction == 1.0);
    CHECK(estimate.uncensored_runs == 0);
    CHECK(std::isnan(estimate.mean));
    CHECK(std::isnan(estimate.std_error));

    // A fault class that never reaches the far side also censors everything.
    SimConfig phase_only(table, zeta(), zeta(), GateDistribution::uniform(4),
                         ErrorModel::independent({0.9, 0.0, 0.0, 0.1}));
    phase_only.runs = 200;
    phase_only.tau = 100;
    phase_only.seed = 12;
    HittingEstimate censored = empirical_hitting_time(phase_only, 0.95);
    CHECK(censored.censored_fraction == 1.0);

    // A start state beyond the threshold is hit at t = 0 in every run.
    SimConfig start_bad(table, zeta(), PureState::basis(1, 0),
                        GateDistribution::uniform(4), ErrorModel::depolarizing(table, 0.2));
    start_bad.runs = 50;
    start_bad.tau = 10;
    HittingEstimate zero = empirical_hitting_time(start_bad, 0.25);
    CHECK(zero.mean == 0.0);
    CHECK(zero.censored_fraction == 0.0);
    CHECK(zero.std_error == 0.0);
}
