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

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qerrac/linalg.hpp"
#include "qerrac/parallel.hpp"
#include "qerrac/rng.hpp"

namespace qerrac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Immutable per-simulation tables shared by all worker threads.
struct Context {
    const GroupTable* table = nullptr;
    const SimConfig* cfg = nullptr;
    StateSet faultless;
    StateSet faulty;
    RMatrix cross;  // cross(y_state, x_state) = distance between members
    int tau = 0;
    int flip = -1;  // all-qubit flip element (benchmarking closing gate)
};

/// The all-qubit bit flip, X on every qubit.
CMatrix all_qubit_flip(int qubits) {
    CMatrix flip = gates::pauli_x();
    for (int q = 1; q < qubits; ++q) {
        flip = kron(flip, gates::pauli_x());
    }
    return flip;
}

void validate(const SimConfig& cfg) {
    const GroupTable& table = *cfg.table;
    if (cfg.runs < 1) {
        throw std::invalid_argument("simulate: runs must be >= 1");
    }
    if (cfg.threads < 0) {
        throw std::invalid_argument("simulate: negative thread count");
    }
    if (cfg.tau < 0) {
        throw std::invalid_argument("simulate: negative horizon");
    }
    if (cfg.mode == SimMode::kRandomizedBenchmarking && cfg.tau < 1) {
        throw std::invalid_argument(
            "simulate: benchmarking needs at least the closing step");
    }
    if (!(cfg.p_norm >= 1.0)) {
        throw std::invalid_argument("simulate: p_norm must be >= 1");
    }
    if (cfg.psi0.dim() != table.dim() || cfg.psi0_faulty.dim() != table.dim()) {
        throw std::invalid_argument(
            "simulate: initial state dimension does not match the group");
    }
    if (cfg.kappa.size() != table.order()) {
        throw std::invalid_argument(
            "simulate: gate distribution size does not match the group order");
    }
    if (cfg.err.size() != table.order()) {
        throw std::invalid_argument(
            "simulate: error model size does not match the group order");
    }
    for (std::size_t k = 1; k < cfg.deltas.size(); ++k) {
        if (cfg.deltas[k] < cfg.deltas[k - 1]) {
            throw std::invalid_argument("simulate: thresholds must be sorted ascending");
        }
    }
    if (cfg.mode == SimMode::kFixedCircuit) {
        for (int gate : cfg.circuit.gates) {
            if (gate < 0 || gate >= table.order()) {
                throw std::invalid_argument("simulate: circuit gate index out of range");
            }
        }
    }
}

Context build_context(const SimConfig& cfg) {
    validate(cfg);
    Context ctx;
    ctx.table = cfg.table;
    ctx.cfg = &cfg;
    ctx.faultless = reachable_states(*cfg.table, cfg.psi0);
    ctx.faulty = reachable_states(*cfg.table, cfg.psi0_faulty);
    ctx.cross = RMatrix(ctx.faulty.size(), ctx.faultless.size());
    for (int y = 0; y < ctx.faulty.size(); ++y) {
        for (int x = 0; x < ctx.faultless.size(); ++x) {
            ctx.cross(y, x) =
                schatten_distance(ctx.faultless.state(x), ctx.faulty.state(y), cfg.p_norm);
        }
    }
    ctx.tau = cfg.effective_tau();
    if (cfg.mode == SimMode::kRandomizedBenchmarking) {
        try {
            ctx.flip = cfg.table->element_of(all_qubit_flip(cfg.psi0.qubits()));
        } catch (const std::out_of_range&) {
            throw std::invalid_argument(
                "simulate: benchmarking needs the all-qubit flip in the group");
        }
    }
    return ctx;
}

/// One trajectory's accumulated elements, advanced step by step with exact
/// table arithmetic.
struct Walker {
    int x = 0;  // faultless accumulated element
    int y = 0;  // faulty accumulated element

    double distance(const Context& ctx) const {
        return ctx.cross(ctx.faulty.state_of_element(y),
                         ctx.faultless.state_of_element(x));
    }

    /// Advance across step t (1-based): choose the gate for this mode, draw
    /// its fault, and update both accumulated elements.
    void step(const Context& ctx, int t, PhiloxRng& rng) {
        const GroupTable& table = *ctx.table;
        int gate;
        switch (ctx.cfg->mode) {
            case SimMode::kFixedCircuit:
                gate = ctx.cfg->circuit.gates[static_cast<std::size_t>(t - 1)];
                break;
            case SimMode::kRandomizedBenchmarking:
                gate = (t == ctx.tau) ? table.compose(ctx.flip, table.inverse(x))
                                      : ctx.cfg->kappa.sample(rng);
                break;
            default:
                gate = ctx.cfg->kappa.sample(rng);
                break;
        }
        const int fault = ctx.cfg->err.sample(gate, rng);
        x = table.compose(gate, x);
        y = table.compose(fault, table.compose(gate, y));
    }
};

double probability_se(double p, int runs) {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
}

}  // namespace

SimResult simulate(const SimConfig& cfg) {
    const Context ctx = build_context(cfg);
    const int runs = cfg.runs;
    const int nt = ctx.tau + 1;
    const std::size_t stride = static_cast<std::size_t>(nt);

    // Per-run distance rows, filled by the workers and aggregated in run
    // order afterwards so the totals are independent of scheduling.
    std::vector<double> dist(static_cast<std::size_t>(runs) * stride);
    for_each_run(cfg.threads, runs, [&](int run) {
        PhiloxRng rng(cfg.seed, static_cast<std::uint64_t>(run));
        Walker walker;
        double* row = dist.data() + static_cast<std::size_t>(run) * stride;
        row[0] = walker.distance(ctx);
        for (int t = 1; t <= ctx.tau; ++t) {
            walker.step(ctx, t, rng);
            row[t] = walker.distance(ctx);
        }
    });

    SimResult result;
    result.runs = runs;
    result.seed = cfg.seed;
    result.tau = ctx.tau;
    result.deltas = cfg.deltas;

    // Exceedance counts are integers, so they are exact no matter how runs
    // were scheduled. Thresholds ascend, so the first non-exceeded threshold
    // ends the inner scan.
    const std::size_t nd = cfg.deltas.size();
    std::vector<std::vector<long long>> count_end(nd, std::vector<long long>(nt, 0));
    std::vector<std::vector<long long>> count_max(nd, std::vector<long long>(nt, 0));
    for (int run = 0; run < runs; ++run) {
        const double* row = dist.data() + static_cast<std::size_t>(run) * stride;
        double running = 0.0;
        for (int t = 0; t < nt; ++t) {
            const double d = row[t];
            running = (t == 0) ? d : std::max(running, d);
            for (std::size_t k = 0; k < nd; ++k) {
                if (!(d > cfg.deltas[k])) {
                    break;
                }
                ++count_end[k][t];
            }
            for (std::size_t k = 0; k < nd; ++k) {
                if (!(running > cfg.deltas[k])) {
                    break;
                }
                ++count_max[k][t];
            }
        }
    }
    result.p_error.assign(nd, std::vector<double>(nt, 0.0));
    result.p_error_se = result.p_error;
    result.p_max_error = result.p_error;
    result.p_max_error_se = result.p_error;
    for (std::size_t k = 0; k < nd; ++k) {
        for (int t = 0; t < nt; ++t) {
            const double pe = static_cast<double>(count_end[k][t]) / runs;
            const double pm = static_cast<double>(count_max[k][t]) / runs;
            result.p_error[k][t] = pe;
            result.p_error_se[k][t] = probability_se(pe, runs);
            result.p_max_error[k][t] = pm;
            result.p_max_error_se[k][t] = probability_se(pm, runs);
        }
    }

    // Mean distances: two fixed-order passes for bit-stable means and
    // standard errors.
    result.e_dist.assign(nt, 0.0);
    result.e_dist_se.assign(nt, 0.0);
    for (int t = 0; t < nt; ++t) {
        double sum = 0.0;
        for (int run = 0; run < runs; ++run) {
            sum += dist[static_cast<std::size_t>(run) * stride + t];
        }
        const double mean = sum / runs;
        result.e_dist[t] = mean;
        if (runs >= 2) {
            double ss = 0.0;
            for (int run = 0; run < runs; ++run) {
                const double diff = dist[static_cast<std::size_t>(run) * stride + t] - mean;
                ss += diff * diff;
            }
            result.e_dist_se[t] =
                std::sqrt(ss / (static_cast<double>(runs) * (runs - 1.0)));
        }
    }
    return result;
}

HittingEstimate empirical_hitting_time(const SimConfig& cfg, double delta) {
    const Context ctx = build_context(cfg);
    const int runs = cfg.runs;

    // first[i] = first t with distance > delta, or -1 when censored at tau.
    std::vector<int> first(static_cast<std::size_t>(runs), -1);
    for_each_run(cfg.threads, runs, [&](int run) {
        PhiloxRng rng(cfg.seed, static_cast<std::uint64_t>(run));
        Walker walker;
        if (walker.distance(ctx) > delta) {
            first[static_cast<std::size_t>(run)] = 0;
            return;
        }
        for (int t = 1; t <= ctx.tau; ++t) {
            walker.step(ctx, t, rng);
            if (walker.distance(ctx) > delta) {
                first[static_cast<std::size_t>(run)] = t;
                return;
            }
        }
    });

    HittingEstimate estimate;
    estimate.runs = runs;
    estimate.seed = cfg.seed;
    long long uncensored = 0;
    double sum = 0.0;
    for (int time : first) {
        if (time >= 0) {
            ++uncensored;
            sum += time;
        }
    }
    estimate.uncensored_runs = static_cast<int>(uncensored);
    estimate.censored_fraction =
        static_cast<double>(runs - uncensored) / static_cast<double>(runs);
    if (uncensored == 0) {
        estimate.mean = kNaN;
        estimate.std_error = kNaN;
        return estimate;
    }
    estimate.mean = sum / static_cast<double>(uncensored);
    if (uncensored >= 2) {
        double ss = 0.0;
        for (int time : first) {
            if (time >= 0) {
                const double diff = time - estimate.mean;
                ss += diff * diff;
            }
        }
        estimate.std_error = std::sqrt(
            ss / (static_cast<double>(uncensored) * (static_cast<double>(uncensored) - 1.0)));
    }
    return estimate;
}

}  // namespace qerrac
