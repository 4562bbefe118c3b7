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

#include "qerrac/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

namespace qerrac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Returns a candidate circuit, or nothing when no move is possible.
using Proposer = std::function<std::optional<Circuit>(const Circuit&, PhiloxRng&)>;

void validate_run(const Circuit& circuit, const AnnealConfig& cfg) {
    if (cfg.iterations < 1) {
        throw std::invalid_argument("anneal: iterations must be >= 1");
    }
    if (circuit.tau() < 2) {
        throw std::invalid_argument("anneal: the circuit needs at least 2 gates");
    }
}

/// The shared Metropolis chain: propose, evaluate (memoized), accept with
/// the cooling-schedule probability, track the best-seen circuit, and
/// re-verify the product constraint in exact table arithmetic every
/// iteration.
AnnealResult run_metropolis(const Circuit& circuit,
                            const Objective& objective,
                            const AnnealConfig& cfg,
                            const Proposer& propose) {
    AnnealResult result;
    result.best = circuit;

    std::optional<ObjectiveEvaluator> evaluator;
    try {
        evaluator.emplace(objective);
        result.u_initial = evaluator->evaluate(circuit);
    } catch (const std::exception& failure) {
        result.aborted = true;
        result.warning = failure.what();
        result.u_initial = kNaN;
        result.u_best = kNaN;
        return result;
    }
    result.u_best = result.u_initial;

    const int target_product = circuit_product(*objective.table, circuit);
    Circuit current = circuit;
    double u_current = result.u_initial;
    PhiloxRng rng(cfg.seed, 0);
    result.steps.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int eta = 1; eta <= cfg.iterations; ++eta) {
        const double temperature = cfg.schedule.temperature(eta, circuit.tau());
        std::optional<Circuit> candidate = propose(current, rng);
        if (!candidate.has_value()) {
            result.warning = "anneal: no replaceable index remains";
            break;
        }
        if (circuit_product(*objective.table, *candidate) != target_product) {
            throw std::logic_error("anneal: a move broke the product constraint");
        }
        double u_candidate = 0.0;
        try {
            u_candidate = evaluator->evaluate(*candidate);
        } catch (const std::exception& failure) {
            result.aborted = true;
            result.warning = failure.what();
            break;
        }
        const double accept = acceptance_probability(u_current, u_candidate, temperature);
        const bool accepted = rng.uniform() < accept;
        if (accepted) {
            current = std::move(*candidate);
            u_current = u_candidate;
        }
        if (u_current < result.u_best) {
            result.u_best = u_current;
            result.best = current;
        }
        result.steps.push_back({eta, u_current, result.u_best, temperature, accepted});
    }
    return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Objective evaluation
// ---------------------------------------------------------------------------

Objective::Objective(const GroupTable& table_in,
                     Kind kind_in,
                     double delta_in,
                     PureState psi0_in,
                     PureState psi0_faulty_in,
                     ErrorModel err_in,
                     double p_norm_in)
    : table(&table_in),
      kind(kind_in),
      delta(delta_in),
      psi0(std::move(psi0_in)),
      psi0_faulty(std::move(psi0_faulty_in)),
      err(std::move(err_in)),
      p_norm(p_norm_in) {}

ObjectiveEvaluator::ObjectiveEvaluator(const Objective& objective)
    : objective_(objective),
      builder_(*objective.table, objective.psi0, objective.psi0_faulty, objective.err,
               objective.p_norm) {}

double ObjectiveEvaluator::evaluate(const Circuit& circuit) {
    ++calls_;
    auto hit = memo_.find(circuit.gates);
    if (hit != memo_.end()) {
        return hit->second;
    }
    const InhomogeneousChain chain = builder_.build(circuit, objective_.delta);
    const double value = objective_.kind == Objective::Kind::kErrorAtEnd
                             ? nonrandom_error_distribution(chain, chain.tau)
                             : nonrandom_max_error(chain, chain.tau);
    memo_.emplace(circuit.gates, value);
    return value;
}

// ---------------------------------------------------------------------------
// Cooling and acceptance
// ---------------------------------------------------------------------------

CoolingSchedule CoolingSchedule::c_log(double c) {
    if (!(c > 0.0)) {
        throw std::invalid_argument("CoolingSchedule: c must be positive");
    }
    return CoolingSchedule(Kind::kCLog, c);
}

CoolingSchedule CoolingSchedule::guaranteed(double m) {
    if (!(m > 0.0)) {
        throw std::invalid_argument("CoolingSchedule: m must be positive");
    }
    return CoolingSchedule(Kind::kGuaranteed, m);
}

double CoolingSchedule::temperature(int eta, int tau) const {
    if (eta < 1) {
        throw std::invalid_argument("CoolingSchedule: eta starts at 1");
    }
    if (kind_ == Kind::kCLog) {
        return constant_ / std::log(static_cast<double>(eta) + 1.0);
    }
    if (eta == 1) {
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(tau) * constant_ / std::log(static_cast<double>(eta));
}

double acceptance_probability(double u_i, double u_j, double temperature) {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("acceptance_probability: temperature must be positive");
    }
    return std::exp(-std::max(0.0, u_j - u_i) / temperature);
}

// ---------------------------------------------------------------------------
// Moves
// ---------------------------------------------------------------------------

Circuit propose_candidate(const Circuit& circuit, const GroupTable& table, PhiloxRng& rng) {
    const int tau = circuit.tau();
    if (tau < 2) {
        throw std::invalid_argument("propose_candidate: the circuit needs at least 2 gates");
    }
    const int index = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(tau - 1)));
    const int gate = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(table.order())));
    Circuit candidate = circuit;
    const int pair_product = table.compose(circuit.gates[index + 1], circuit.gates[index]);
    candidate.gates[index] = gate;
    candidate.gates[index + 1] = table.compose(pair_product, table.inverse(gate));
    return candidate;
}

AnnealResult anneal(const Circuit& circuit, const Objective& objective,
                    const AnnealConfig& cfg) {
    validate_run(circuit, cfg);
    const GroupTable& table = *objective.table;
    return run_metropolis(circuit, objective, cfg,
                          [&table](const Circuit& current, PhiloxRng& rng) {
                              return std::optional<Circuit>(
                                  propose_candidate(current, table, rng));
                          });
}

AnnealResult anneal_gate_limited(const Circuit& circuit, const Objective& objective,
                                 const AnnealConfig& cfg) {
    validate_run(circuit, cfg);
    const GroupTable& table = *objective.table;
    if (cfg.gate_subset.empty()) {
        throw std::invalid_argument("anneal_gate_limited: empty gate subset");
    }
    std::vector<int> allowed = cfg.gate_subset;
    std::sort(allowed.begin(), allowed.end());
    allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
    if (allowed.front() < 0 || allowed.back() >= table.order()) {
        throw std::invalid_argument("anneal_gate_limited: gate subset index out of range");
    }
    std::vector<std::uint8_t> in_subset(static_cast<std::size_t>(table.order()), 0);
    for (int gate : allowed) {
        in_subset[static_cast<std::size_t>(gate)] = 1;
    }

    // First gates of the subset pairs that preserve the local pair product at
    // index i (the second gate is determined by the first).
    auto options_at = [&](const Circuit& current, int i) {
        const int pair_product = table.compose(current.gates[i + 1], current.gates[i]);
        std::vector<int> options;
        for (int first : allowed) {
            const int second = table.compose(pair_product, table.inverse(first));
            if (in_subset[static_cast<std::size_t>(second)]) {
                options.push_back(first);
            }
        }
        return options;
    };

    const auto has_replaceable_index = [&](const Circuit& current) {
        for (int i = 0; i + 1 < current.tau(); ++i) {
            if (!options_at(current, i).empty()) {
                return true;
            }
        }
        return false;
    };
    if (!has_replaceable_index(circuit)) {
        AnnealResult result;
        result.best = circuit;
        result.warning = "anneal_gate_limited: no index is replaceable within the subset";
        try {
            ObjectiveEvaluator evaluator(objective);
            result.u_initial = evaluator.evaluate(circuit);
            result.u_best = result.u_initial;
        } catch (const std::exception& failure) {
            result.aborted = true;
            result.warning = failure.what();
            result.u_initial = kNaN;
            result.u_best = kNaN;
        }
        return result;
    }

    Proposer propose = [&table, options_at](const Circuit& current,
                                            PhiloxRng& rng) -> std::optional<Circuit> {
        std::vector<int> indices;
        std::vector<std::vector<int>> options;
        for (int i = 0; i + 1 < current.tau(); ++i) {
            std::vector<int> at = options_at(current, i);
            if (!at.empty()) {
                indices.push_back(i);
                options.push_back(std::move(at));
            }
        }
        if (indices.empty()) {
            return std::nullopt;
        }
        const std::size_t pick = rng.uniform_index(indices.size());
        const std::vector<int>& firsts = options[pick];
        const int first = firsts[rng.uniform_index(firsts.size())];
        const int index = indices[pick];
        Circuit candidate = current;
        const int pair_product = table.compose(current.gates[index + 1], current.gates[index]);
        candidate.gates[index] = first;
        candidate.gates[index + 1] = table.compose(pair_product, table.inverse(first));
        return candidate;
    };
    return run_metropolis(circuit, objective, cfg, propose);
}

}  // namespace qerrac
