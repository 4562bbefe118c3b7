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
#include <map>
#include <string>
#include <vector>

#include "qerrac/chain.hpp"
#include "qerrac/group.hpp"
#include "qerrac/rng.hpp"
#include "qerrac/states.hpp"

namespace qerrac {

/// Simulated-annealing search over equal-length circuits with a fixed total
/// product: local moves rewrite one adjacent gate pair while leaving the
/// applied product G_tau ... G_1 unchanged, and a Metropolis rule with a
/// cooling temperature decides acceptance.

/// What the optimizer minimizes: an exceedance probability of the fixed
/// circuit, evaluated on its time-inhomogeneous chain.
struct Objective {
    enum class Kind {
        kErrorAtEnd,  // P[D_tau > delta]
        kMaxError,    // P[max_{t<=tau} D_t > delta]
    };

    Objective(const GroupTable& table_in,
              Kind kind_in,
              double delta_in,
              PureState psi0_in,
              PureState psi0_faulty_in,
              ErrorModel err_in,
              double p_norm_in = 1.0);

    const GroupTable* table;
    Kind kind;
    double delta;
    PureState psi0;
    PureState psi0_faulty;
    ErrorModel err;
    double p_norm;
};

/// Memoizing objective evaluator: one orbit/factor setup per objective, one
/// chain build per distinct gate sequence (chain evaluation dominates the
/// annealing runtime, and low-temperature chains revisit circuits often).
/// Construction and evaluation throw std::invalid_argument on mismatched
/// models, states, or gate indices, like the underlying chain builder.
class ObjectiveEvaluator {
   public:
    explicit ObjectiveEvaluator(const Objective& objective);

    /// u(circuit), a probability in [0,1].
    double evaluate(const Circuit& circuit);

    /// Number of evaluate() calls so far.
    std::size_t calls() const { return calls_; }
    /// Number of distinct circuits actually run through the chain.
    std::size_t distinct() const { return memo_.size(); }

   private:
    Objective objective_;
    InhomogeneousChainBuilder builder_;
    std::map<std::vector<int>, double> memo_;
    std::size_t calls_ = 0;
};

/// Cooling temperature as a function of the iteration counter eta >= 1.
/// Two laws: the empirical constant-over-log schedule T = c / ln(eta + 1),
/// and the guaranteed schedule T = tau * m / ln(eta), infinite at eta = 1.
/// With m no smaller than the largest objective increase between
/// neighboring circuits, the guaranteed schedule makes the chain converge in
/// probability to a global minimizer as the iteration count grows; a finite
/// run asserts nothing of the sort, and m is the caller's burden since the
/// exact neighborhood supremum is intractable.
class CoolingSchedule {
   public:
    enum class Kind { kCLog, kGuaranteed };

    /// T = c / ln(eta + 1). Throws std::invalid_argument unless c > 0.
    static CoolingSchedule c_log(double c);
    /// T = tau * m / ln(eta). Throws std::invalid_argument unless m > 0.
    static CoolingSchedule guaranteed(double m);

    Kind kind() const { return kind_; }
    double constant() const { return constant_; }

    /// Temperature at iteration eta of a length-tau circuit. Throws
    /// std::invalid_argument unless eta >= 1.
    double temperature(int eta, int tau) const;

   private:
    CoolingSchedule(Kind kind, double constant) : kind_(kind), constant_(constant) {}

    Kind kind_;
    double constant_;
};

struct AnnealConfig {
    int iterations = 1000;  // w >= 1
    CoolingSchedule schedule = CoolingSchedule::c_log(0.004);
    std::uint64_t seed = 0;
    /// Allowed replacement gates for the gate-limited variant; ignored by
    /// anneal(). Order does not matter and duplicates are merged.
    std::vector<int> gate_subset;
};

/// One Metropolis iteration as recorded in the run trace. u_current is the
/// objective of the chain's state after the accept/reject decision.
struct AnnealStep {
    int eta = 0;
    double u_current = 0.0;
    double u_best = 0.0;
    double temperature = 0.0;
    bool accepted = false;
};

/// Outcome of an annealing run. u_best is nonincreasing across steps and
/// best always satisfies the product constraint. `aborted` is set when an
/// objective evaluation threw; `steps` then holds the completed iterations
/// and `warning` the reason (u values are NaN if the initial evaluation
/// already failed). A gate-limited run with no replaceable index returns
/// immediately with `warning` set and `aborted` false.
struct AnnealResult {
    Circuit best;
    double u_best = 0.0;
    double u_initial = 0.0;
    std::vector<AnnealStep> steps;
    bool aborted = false;
    std::string warning;
};

/// One local move: an index I uniform over {1..tau-1} (1-based), a gate G
/// uniform over the group; position I becomes G and position I+1 becomes
/// G_{I+1} G_I G^{-1}, so the applied pair product — and hence the total
/// product — is preserved exactly in table arithmetic. At most two
/// consecutive positions change, and the move is its own inverse kind:
/// redrawing the original gate at the same index restores the original
/// circuit, so candidate generation has symmetric support. Throws
/// std::invalid_argument unless the circuit has at least 2 gates.
Circuit propose_candidate(const Circuit& circuit, const GroupTable& table, PhiloxRng& rng);

/// Metropolis acceptance probability exp(-max{0, u_j - u_i} / temperature):
/// 1 whenever the candidate is no worse (ties accept), strictly decreasing
/// in the increase otherwise. Throws std::invalid_argument unless
/// temperature > 0 (infinite temperature is allowed and accepts everything).
double acceptance_probability(double u_i, double u_j, double temperature);

/// Anneal the circuit for cfg.iterations Metropolis steps under the cooling
/// schedule, proposing with propose_candidate. The total product's group
/// index is re-verified against the input on every iteration. Throws
/// std::invalid_argument for iterations < 1 or a circuit shorter than 2
/// gates; objective failures abort with the trace so far instead of
/// throwing.
AnnealResult anneal(const Circuit& circuit, const Objective& objective,
                    const AnnealConfig& cfg);

/// The gate-limited variant: moves rewrite a uniformly chosen replaceable
/// index with a pair drawn uniformly from the allowed-subset pairs that
/// preserve that index's local product (an index is replaceable when at
/// least one such pair exists). With the subset equal to the whole group,
/// the proposal distribution coincides with anneal()'s draw for draw. No
/// global-optimum property is claimed. Throws std::invalid_argument for an
/// empty or out-of-range cfg.gate_subset, plus anneal()'s conditions.
AnnealResult anneal_gate_limited(const Circuit& circuit, const Objective& objective,
                                 const AnnealConfig& cfg);

}  // namespace qerrac
