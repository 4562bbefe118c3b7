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
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "qerrac/group.hpp"
#include "qerrac/linalg.hpp"
#include "qerrac/rng.hpp"
#include "qerrac/states.hpp"

namespace qerrac {

/// Collects places where a computed probability left [0,1] by more than
/// harmless roundoff. Values are always clamped back into range; excursions
/// beyond `kExcursionTolerance` are additionally recorded here so callers can
/// surface them (the CLI escalates them to a nonzero exit under --strict).
struct NumericsHealth {
    static constexpr double kExcursionTolerance = 1e-8;
    static constexpr std::size_t kMaxNotes = 32;

    int warning_count = 0;
    double worst_excursion = 0.0;
    std::vector<std::string> notes;  // first kMaxNotes offending contexts

    void report(double excursion, const std::string& context);
};

/// Clamp a probability into [0,1]. Excursions beyond
/// NumericsHealth::kExcursionTolerance are reported to `health` when one is
/// supplied; smaller ones are silently absorbed as roundoff.
double clamp_probability(double value, NumericsHealth* health, const char* context);

/// A probability distribution over the elements of a group, stored densely
/// by element index, with a cumulative table for O(log n) sampling.
class GateDistribution {
   public:
    /// Uniform over all n elements.
    static GateDistribution uniform(int n);

    /// Explicit probabilities by element index. Throws std::invalid_argument
    /// unless entries are nonnegative and sum to 1 within 1e-12.
    static GateDistribution from_probabilities(std::vector<double> probs);

    /// All mass on a single element.
    static GateDistribution point_mass(int n, int element);

    int size() const { return static_cast<int>(probs_.size()); }
    double prob(int element) const { return probs_.at(element); }
    const std::vector<double>& probabilities() const { return probs_; }
    /// Element indices with strictly positive probability, ascending.
    const std::vector<int>& support() const { return support_; }
    /// Draw an element index.
    int sample(PhiloxRng& rng) const {
        return static_cast<int>(rng.sample_cumulative(cumulative_));
    }

   private:
    std::vector<double> probs_;
    std::vector<double> cumulative_;
    std::vector<int> support_;
};

/// Distribution of the fault element applied after each gate: either one
/// distribution shared by all gates or a per-gate table with a default row.
/// All rows are distributions over the full group (faults are group members);
/// rows must be nonnegative and sum to 1 within 1e-12.
class ErrorModel {
   public:
    enum class Kind : std::uint8_t { kIndependent, kGateConditional };

    /// One distribution over faults, the same after every gate.
    static ErrorModel independent(std::vector<double> probs);

    /// Per-gate rows; gates missing from `per_gate` use `base`.
    static ErrorModel gate_conditional(std::vector<double> base,
                                       std::unordered_map<int, std::vector<double>> per_gate);

    /// Identity fault with probability 1-r; the remaining mass spread evenly
    /// over the non-identity tensor products of one-qubit bit/phase flips
    /// (3 on one qubit, 15 on two, ...). The table must contain them all.
    static ErrorModel depolarizing(const GroupTable& table, double r);

    /// Identity fault with probability 1-r; r spread evenly over all other
    /// table members.
    static ErrorModel uniform_over_group(const GroupTable& table, double r);

    /// No fault: point mass on the identity (index 0).
    static ErrorModel none(const GroupTable& table);

    Kind kind() const { return kind_; }
    int size() const { return base_.size(); }
    bool is_gate_conditional() const { return kind_ == Kind::kGateConditional; }

    /// Probability of fault `lambda` after gate `gate`.
    double prob(int lambda, int gate) const { return row_for(gate).prob(lambda); }

    /// The fault distribution that applies after `gate`.
    const GateDistribution& row(int gate) const { return row_for(gate); }

    /// Draw a fault index for the given gate.
    int sample(int gate, PhiloxRng& rng) const { return row_for(gate).sample(rng); }

   private:
    const GateDistribution& row_for(int gate) const;

    Kind kind_ = Kind::kIndependent;
    GateDistribution base_{GateDistribution::point_mass(1, 0)};
    std::unordered_map<int, GateDistribution> per_gate_;
};

/// A fixed gate sequence, stored as group element indices. gates[k] is the
/// gate applied at step k+1, so the accumulated operation after all steps is
/// element(gates[n-1]) * ... * element(gates[0]).
struct Circuit {
    std::vector<int> gates;

    int tau() const { return static_cast<int>(gates.size()); }
};

/// Group element index of the accumulated product of a circuit (identity for
/// an empty circuit), computed with exact table arithmetic.
int circuit_product(const GroupTable& table, const Circuit& circuit);

/// The coupled pair chain tracking (faultless state, faulty state) when every
/// step draws a gate from `kappa` and then a fault from the error model. The
/// pair space is the product of the two orbits, which is exact for this
/// dynamic: states reached by the same group action from equal physical
/// states stay equal, so lumping group elements onto orbit states preserves
/// the law of the distance process.
struct CoupledChain {
    const GroupTable* table = nullptr;
    StateSet faultless_states;  // orbit of the faultless initial state
    StateSet faulty_states;     // orbit of the faulty initial state
    RMatrix transition;         // row-stochastic, indexed by pair_index
    RVector distance;           // distance(z) between the two member states
    int start = 0;              // pair_index of the initial pair
    double p_norm = 1.0;        // Schatten exponent used for `distance`

    int faultless_count() const { return faultless_states.size(); }
    int faulty_count() const { return faulty_states.size(); }
    int state_count() const { return faultless_count() * faulty_count(); }
    int pair_index(int x, int y) const { return x * faulty_count() + y; }
    int faultless_part(int z) const { return z / faulty_count(); }
    int faulty_part(int z) const { return z % faulty_count(); }
};

/// Build the coupled chain for gate distribution `kappa` and fault model
/// `err` with distances in the Schatten p-norm. Throws std::invalid_argument
/// on dimension mismatches, distribution-size mismatches, or a pair space
/// larger than 4096 states (the transition matrix is dense).
CoupledChain build_coupled_chain(const GroupTable& table,
                                 const PureState& psi0,
                                 const PureState& psi0_faulty,
                                 const GateDistribution& kappa,
                                 const ErrorModel& err,
                                 double p_norm = 1.0);

/// The states whose distance strictly exceeds delta. Ties (distance == delta)
/// are good states; the threshold itself is within tolerance.
struct BadSet {
    double delta = 0.0;
    std::vector<int> indices;         // ascending
    std::vector<std::uint8_t> mask;   // size = state count

    static BadSet from_indices(int state_count, std::vector<int> indices, double delta = 0.0);
};

BadSet bad_set(const CoupledChain& chain, double delta);

/// P[D_t > delta]: mass of the bad set under t steps of the chain, evaluated
/// by iterated vector--matrix products (never by powering the matrix).
/// t = 0 returns the indicator of the start state being bad.
double error_distribution(const CoupledChain& chain,
                          const BadSet& bad,
                          int t,
                          NumericsHealth* health = nullptr);

/// E[D_t]: expected distance after t steps.
double expected_error(const CoupledChain& chain, int t);

/// P[max_{s<=t} D_s > delta]: probability the distance has exceeded delta at
/// any step up to and including t. Evaluated by the first-passage
/// decomposition: with the taboo matrix T = transition with bad columns
/// zeroed, the sum over s of (start row of T^{s-1}) . (mass moved into the
/// bad set in one step). Returns 1 for all t when the start state is bad.
double max_error_distribution(const CoupledChain& chain,
                              const BadSet& bad,
                              int t,
                              NumericsHealth* health = nullptr);

/// Expected hitting time of the target set from every state: 0 on the target
/// set, +infinity where the conditional expectation diverges (the target is
/// unreachable, or an absorbing region that misses the target is reachable),
/// and otherwise the unique solution of (I - P_SS) h = 1 on the remaining
/// states. Throws std::runtime_error if the linear solve cannot reach
/// residual 1e-9.
RVector expected_hitting_time(const CoupledChain& chain, const BadSet& target);

/// Core hitting-time solver on an explicit row-stochastic matrix; target_mask
/// flags the target states. Same contract as the chain overload.
RVector expected_hitting_time(const RMatrix& transition,
                              const std::vector<std::uint8_t>& target_mask);

/// Markov-style lower bound max{0, 1 - E[T]/(t+1)} on P[max_{s<=t} D_s > delta]
/// from the expected hitting time of the bad set. An infinite expectation
/// yields 0.
double max_error_lower_bound(double expected_hitting, int t);

/// Result of max_tolerable_gates: the largest step count whose running
/// failure probability stays within gamma, plus the closed-form cap implied
/// by the hitting-time bound.
struct MaxTolerable {
    /// max{t in [0, horizon] : P[max_{s<=t} D_s > delta] <= gamma}, or -1 if
    /// even t = 0 fails (the start state is already bad and gamma < 1).
    long long t_star = 0;
    /// E[T]/(1-gamma) - 1, the upper bound on t_star implied by the lower
    /// bound on the failure probability; +infinity when E[T] is infinite or
    /// gamma = 1.
    double hitting_bound = 0.0;
};

/// Scan t = 0..horizon for the largest tolerable step count at failure
/// budget gamma. Throws std::invalid_argument unless gamma is in [0,1] and
/// horizon >= 0.
MaxTolerable max_tolerable_gates(const CoupledChain& chain,
                                 const BadSet& bad,
                                 double gamma,
                                 int horizon,
                                 NumericsHealth* health = nullptr);

/// Everything the analyze-random output needs, computed in one forward pass
/// per quantity: for each t in 0..tau the exceedance probability, the running
/// maximum exceedance, the expected distance, and the hitting-time lower
/// bound on the running maximum.
struct ChainSweep {
    std::vector<double> p_error;       // P[D_t > delta]
    std::vector<double> p_max_error;   // P[max_{s<=t} D_s > delta]
    std::vector<double> e_dist;        // E[D_t]
    std::vector<double> lemma2_bound;  // max{0, 1 - E[T]/(t+1)}
    double expected_hitting = 0.0;     // E[T_bad] from the start state
};

ChainSweep sweep_chain(const CoupledChain& chain,
                       const BadSet& bad,
                       int tau,
                       NumericsHealth* health = nullptr);

/// The time-inhomogeneous chain of the faulty state along a fixed circuit.
/// Factor k (1-based) moves the state across step k; the faultless trajectory
/// is deterministic, so "bad at time t" means further than delta from the
/// faultless state at time t. Self-contained: holds shared ownership of its
/// factors and copies of the per-step masks and distances.
struct InhomogeneousChain {
    const GroupTable* table = nullptr;
    int tau = 0;
    int start = 0;        // state index of the faulty initial state
    double delta = 0.0;
    double p_norm = 1.0;
    int state_count = 0;  // size of the faulty orbit
    /// factors[k-1] is the row-stochastic factor for step k, shared with the
    /// builder's per-gate cache.
    std::vector<std::shared_ptr<const RMatrix>> factors;
    /// faultless_trajectory[t] is the faultless orbit-state index at time t.
    std::vector<int> faultless_trajectory;
    /// bad_masks[t][y] == 1 iff faulty state y is bad at time t.
    std::vector<std::vector<std::uint8_t>> bad_masks;
    /// distances[t][y] = distance from faulty state y to the faultless state
    /// at time t.
    std::vector<RVector> distances;
};

/// Shared setup for building inhomogeneous chains over one group, error
/// model, and pair of initial states: the two orbits, the cross-distance
/// table, and a per-gate factor cache reused across circuits (annealing
/// evaluates thousands of circuits over the same few gates). Not safe for
/// concurrent build() calls; built chains are immutable and safe to share.
class InhomogeneousChainBuilder {
   public:
    /// Throws std::invalid_argument on dimension or model-size mismatches.
    InhomogeneousChainBuilder(const GroupTable& table,
                              const PureState& psi0,
                              const PureState& psi0_faulty,
                              ErrorModel err,
                              double p_norm = 1.0);

    /// Build the chain for one circuit at one threshold. Throws
    /// std::invalid_argument if a gate index is out of range.
    InhomogeneousChain build(const Circuit& circuit, double delta) const;

    const GroupTable& table() const { return *table_; }
    const StateSet& faultless_states() const { return faultless_states_; }
    const StateSet& faulty_states() const { return faulty_states_; }
    const ErrorModel& error_model() const { return err_; }

   private:
    std::shared_ptr<const RMatrix> factor_for_gate(int gate) const;

    const GroupTable* table_;
    StateSet faultless_states_;
    StateSet faulty_states_;
    ErrorModel err_;
    double p_norm_;
    RMatrix cross_distance_;  // faulty orbit x faultless orbit
    mutable std::unordered_map<int, std::shared_ptr<const RMatrix>> factor_cache_;
};

/// One-shot convenience wrapper around InhomogeneousChainBuilder.
InhomogeneousChain build_inhomogeneous_chain(const GroupTable& table,
                                             const Circuit& circuit,
                                             const PureState& psi0,
                                             const PureState& psi0_faulty,
                                             const ErrorModel& err,
                                             double p_norm,
                                             double delta);

/// P[D_t > delta] for the fixed circuit: start row through the first t
/// factors, then the mass on the time-t bad set. Throws std::out_of_range
/// for t outside [0, tau].
double nonrandom_error_distribution(const InhomogeneousChain& chain,
                                    int t,
                                    NumericsHealth* health = nullptr);

/// E[D_t] for the fixed circuit. Throws std::out_of_range for t outside
/// [0, tau].
double nonrandom_expected_error(const InhomogeneousChain& chain, int t);

/// P[max_{s<=t} D_s > delta] for the fixed circuit, by the first-passage
/// decomposition with the per-step bad sets. Throws std::out_of_range for t
/// outside [0, tau].
double nonrandom_max_error(const InhomogeneousChain& chain,
                           int t,
                           NumericsHealth* health = nullptr);

/// Per-t curves for the whole circuit, each computed in one forward pass.
struct InhomogeneousSweep {
    std::vector<double> p_error;
    std::vector<double> p_max_error;
    std::vector<double> e_dist;
};

InhomogeneousSweep sweep_inhomogeneous(const InhomogeneousChain& chain,
                                       NumericsHealth* health = nullptr);

}  // namespace qerrac
