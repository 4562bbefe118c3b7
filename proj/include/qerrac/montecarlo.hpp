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

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qerrac/chain.hpp"
#include "qerrac/group.hpp"
#include "qerrac/states.hpp"

namespace qerrac {

/// How gates are chosen along a sampled trajectory.
enum class SimMode : std::uint8_t {
    /// Every step draws a gate from the gate distribution.
    kRandomCircuit,
    /// Gates follow the configured circuit; the horizon is the circuit length.
    kFixedCircuit,
    /// Steps 1..tau-1 draw from the gate distribution; step tau applies the
    /// fixed closing gate (flip on every qubit) * (accumulated gate)^-1, so
    /// the faultless run ends at the flipped initial state. Starting from the
    /// all-ones basis state this ends the faultless run at the all-zeros
    /// state. Faults still apply after the closing gate.
    kRandomizedBenchmarking,
};

/// Everything one simulation needs. Construct with the group, the two initial
/// states, the gate distribution, and the error model; adjust the remaining
/// fields directly.
struct SimConfig {
    SimConfig(const GroupTable& table_in,
              PureState psi0_in,
              PureState psi0_faulty_in,
              GateDistribution kappa_in,
              ErrorModel err_in)
        : table(&table_in),
          psi0(std::move(psi0_in)),
          psi0_faulty(std::move(psi0_faulty_in)),
          kappa(std::move(kappa_in)),
          err(std::move(err_in)) {}

    const GroupTable* table;
    PureState psi0;         // faultless initial state
    PureState psi0_faulty;  // faulty initial state
    GateDistribution kappa; // gate distribution (random and benchmarking modes)
    ErrorModel err;         // fault distribution after each gate

    SimMode mode = SimMode::kRandomCircuit;
    Circuit circuit;             // gates for kFixedCircuit
    int runs = 1000;             // independent trajectories
    std::uint64_t seed = 0;      // base seed; run i uses substream (seed, i)
    int tau = 100;               // horizon (ignored in kFixedCircuit)
    std::vector<double> deltas;  // thresholds, sorted ascending
    double p_norm = 1.0;         // Schatten exponent for distances
    int threads = 0;             // worker threads; 0 = hardware concurrency

    /// The horizon actually simulated: the circuit length in fixed-circuit
    /// mode, the configured tau otherwise.
    int effective_tau() const {
        return mode == SimMode::kFixedCircuit ? circuit.tau() : tau;
    }
};

/// Empirical curves from one simulation. Outer index of the probability
/// grids is the threshold (matching `deltas`), inner index is t in 0..tau.
/// Probability standard errors use sqrt(p*(1-p)/runs); the mean-distance
/// standard error is the sample standard deviation over sqrt(runs)
/// (0 when runs == 1).
struct SimResult {
    int runs = 0;
    std::uint64_t seed = 0;
    int tau = 0;
    std::vector<double> deltas;

    std::vector<double> e_dist;     // empirical mean of D_t
    std::vector<double> e_dist_se;

    std::vector<std::vector<double>> p_error;        // P[D_t > delta]
    std::vector<std::vector<double>> p_error_se;
    std::vector<std::vector<double>> p_max_error;    // P[max_{s<=t} D_s > delta]
    std::vector<std::vector<double>> p_max_error_se;
};

/// Sample `cfg.runs` independent trajectories and tally the empirical
/// distance curves. Each trajectory draws its randomness from the substream
/// keyed by (seed, run index), so results are bit-identical for any thread
/// count, including serial execution. Throws std::invalid_argument on
/// inconsistent configs (dimension or size mismatches, unsorted thresholds,
/// a benchmarking group without the all-qubit flip, bad gate indices).
SimResult simulate(const SimConfig& cfg);

/// First time the sampled distance strictly exceeds `delta`, averaged over
/// runs. Runs that never exceed it within the horizon are censored: they are
/// excluded from the mean and standard error and reported via
/// `censored_fraction`. With every run censored the mean and standard error
/// are NaN.
struct HittingEstimate {
    double mean = 0.0;
    double std_error = 0.0;        // sample std dev / sqrt(uncensored runs)
    double censored_fraction = 0.0;
    int uncensored_runs = 0;
    int runs = 0;
    std::uint64_t seed = 0;
};

HittingEstimate empirical_hitting_time(const SimConfig& cfg, double delta);

}  // namespace qerrac
