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

#include "qerrac/chain.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>
#include <utility>

namespace qerrac {

namespace {

constexpr double kDistributionSumTolerance = 1e-12;
constexpr double kRowSumTolerance = 1e-9;
constexpr double kHittingResidualTolerance = 1e-9;
constexpr int kMaxPairStates = 4096;
constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_distribution(const std::vector<double>& probs, const char* what) {
    if (probs.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty distribution");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) {  // also rejects NaN
            throw std::invalid_argument(std::string(what) + ": negative probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kDistributionSumTolerance) {
        throw std::invalid_argument(std::string(what) + ": probabilities sum to " +
                                    std::to_string(sum) + ", not 1");
    }
}

std::vector<double> cumulative_of(const std::vector<double>& probs) {
    std::vector<double> cumulative(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        cumulative[i] = acc;
    }
    cumulative.back() = 1.0;  // guard the sampler against roundoff at the top
    return cumulative;
}

std::vector<int> support_of(const std::vector<double>& probs) {
    std::vector<int> support;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            support.push_back(static_cast<int>(i));
        }
    }
    return support;
}

// One multiplication w <- P^T w without reallocating; `scratch` must have the
// same size as `w`.
void step_forward(const RMatrix& transition, RVector& w, RVector& scratch) {
    scratch.noalias() = transition.transpose() * w;
    w.swap(scratch);
}

double mass_on(const RVector& w, const std::vector<int>& indices) {
    double sum = 0.0;
    for (int z : indices) {
        sum += w(z);
    }
    return sum;
}

void check_bad_set(const CoupledChain& chain, const BadSet& bad, const char* what) {
    if (static_cast<int>(bad.mask.size()) != chain.state_count()) {
        throw std::invalid_argument(std::string(what) + ": bad-set mask size mismatch");
    }
}

void zero_on(RVector& w, const std::vector<int>& indices) {
    for (int z : indices) {
        w(z) = 0.0;
    }
}

}  // namespace

void NumericsHealth::report(double excursion, const std::string& context) {
    ++warning_count;
    worst_excursion = std::max(worst_excursion, excursion);
    if (notes.size() < kMaxNotes) {
        char magnitude[32];
        std::snprintf(magnitude, sizeof(magnitude), "%.3g", excursion);
        notes.push_back(context + ": probability off by " + magnitude);
    }
}

double clamp_probability(double value, NumericsHealth* health, const char* context) {
    double excursion = 0.0;
    if (value < 0.0) {
        excursion = -value;
        value = 0.0;
    } else if (value > 1.0) {
        excursion = value - 1.0;
        value = 1.0;
    }
    if (health != nullptr && excursion > NumericsHealth::kExcursionTolerance) {
        health->report(excursion, context);
    }
    return value;
}

GateDistribution GateDistribution::uniform(int n) {
    if (n <= 0) {
        throw std::invalid_argument("GateDistribution::uniform: n must be positive");
    }
    return from_probabilities(std::vector<double>(n, 1.0 / n));
}

GateDistribution GateDistribution::from_probabilities(std::vector<double> probs) {
    validate_distribution(probs, "GateDistribution");
    GateDistribution dist;
    dist.cumulative_ = cumulative_of(probs);
    dist.support_ = support_of(probs);
    dist.probs_ = std::move(probs);
    return dist;
}

GateDistribution GateDistribution::point_mass(int n, int element) {
    if (element < 0 || element >= n) {
        throw std::invalid_argument("GateDistribution::point_mass: element out of range");
    }
    std::vector<double> probs(n, 0.0);
    probs[element] = 1.0;
    return from_probabilities(std::move(probs));
}

ErrorModel ErrorModel::independent(std::vector<double> probs) {
    ErrorModel model;
    model.kind_ = Kind::kIndependent;
    model.base_ = GateDistribution::from_probabilities(std::move(probs));
    return model;
}

ErrorModel ErrorModel::gate_conditional(
    std::vector<double> base, std::unordered_map<int, std::vector<double>> per_gate) {
    ErrorModel model;
    model.kind_ = Kind::kGateConditional;
    model.base_ = GateDistribution::from_probabilities(std::move(base));
    for (auto& [gate, row] : per_gate) {
        if (gate < 0) {
            throw std::invalid_argument("ErrorModel: negative gate index");
        }
        if (static_cast<int>(row.size()) != model.base_.size()) {
            throw std::invalid_argument("ErrorModel: per-gate row size mismatch");
        }
        model.per_gate_.emplace(gate, GateDistribution::from_probabilities(std::move(row)));
    }
    return model;
}

ErrorModel ErrorModel::depolarizing(const GroupTable& table, double r) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("ErrorModel::depolarizing: r must be in [0,1]");
    }
    int qubits = table.qubits();
    int strings = 1;
    for (int i = 0; i < qubits; ++i) {
        strings *= 4;
    }
    std::vector<double> probs(table.order(), 0.0);
    probs[0] = 1.0 - r;
    const std::array<CMatrix, 4> one{gates::identity(2), gates::pauli_x(), gates::pauli_y(),
                                     gates::pauli_z()};
    for (int code = 1; code < strings; ++code) {
        CMatrix m = CMatrix::Identity(1, 1);
        for (int q = 0, rest = code; q < qubits; ++q) {
            int digit = (rest / (strings / 4)) % 4;
            rest = rest * 4;  // shift the next digit into place
            m = kron(m, one[static_cast<std::size_t>(digit)]);
        }
        int index;
        try {
            index = table.element_of(m);
        } catch (const std::out_of_range&) {
            throw std::invalid_argument("ErrorModel::depolarizing: group '" + table.name() +
                                        "' lacks a required bit/phase-flip product");
        }
        probs[index] += r / (strings - 1);
    }
    return independent(std::move(probs));
}

ErrorModel ErrorModel::uniform_over_group(const GroupTable& table, double r) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("ErrorModel::uniform_over_group: r must be in [0,1]");
    }
    if (table.order() < 2) {
        throw std::invalid_argument("ErrorModel::uniform_over_group: trivial group");
    }
    std::vector<double> probs(table.order(), r / (table.order() - 1));
    probs[0] = 1.0 - r;
    return independent(std::move(probs));
}

ErrorModel ErrorModel::none(const GroupTable& table) {
    std::vector<double> probs(table.order(), 0.0);
    probs[0] = 1.0;
    return independent(std::move(probs));
}

const GateDistribution& ErrorModel::row_for(int gate) const {
    if (kind_ == Kind::kGateConditional) {
        auto it = per_gate_.find(gate);
        if (it != per_gate_.end()) {
            return it->second;
        }
    }
    return base_;
}

int circuit_product(const GroupTable& table, const Circuit& circuit) {
    int acc = 0;  // identity
    for (int gate : circuit.gates) {
        acc = table.compose(gate, acc);
        if (acc < 0) {
            throw std::invalid_argument("circuit_product: incomplete group table");
        }
    }
    return acc;
}

CoupledChain build_coupled_chain(const GroupTable& table,
                                 const PureState& psi0,
                                 const PureState& psi0_faulty,
                                 const GateDistribution& kappa,
                                 const ErrorModel& err,
                                 double p_norm) {
    if (psi0.dim() != table.dim() || psi0_faulty.dim() != table.dim()) {
        throw std::invalid_argument("build_coupled_chain: state dimension mismatch");
    }
    if (kappa.size() != table.order()) {
        throw std::invalid_argument("build_coupled_chain: gate distribution size mismatch");
    }
    if (err.size() != table.order()) {
        throw std::invalid_argument("build_coupled_chain: error model size mismatch");
    }

    CoupledChain chain;
    chain.table = &table;
    chain.p_norm = p_norm;
    chain.faultless_states = reachable_states(table, psi0);
    chain.faulty_states = reachable_states(table, psi0_faulty);
    const int nx = chain.faultless_count();
    const int ny = chain.faulty_count();
    const int nz = nx * ny;
    if (nz > kMaxPairStates) {
        throw std::invalid_argument("build_coupled_chain: pair space has " +
                                    std::to_string(nz) + " states, over the dense limit " +
                                    std::to_string(kMaxPairStates));
    }

    const std::vector<int>& rep_x = chain.faultless_states.representative_elements();
    const std::vector<int>& rep_y = chain.faulty_states.representative_elements();

    chain.transition = RMatrix::Zero(nz, nz);
    std::vector<int> fx(nx), ge(ny), fy(ny);
    for (int g : kappa.support()) {
        const double kg = kappa.prob(g);
        for (int x = 0; x < nx; ++x) {
            fx[x] = chain.faultless_states.state_of_element(table.compose(g, rep_x[x]));
        }
        for (int y = 0; y < ny; ++y) {
            ge[y] = table.compose(g, rep_y[y]);
        }
        const GateDistribution& faults = err.row(g);
        for (int lambda : faults.support()) {
            const double weight = kg * faults.prob(lambda);
            for (int y = 0; y < ny; ++y) {
                fy[y] = chain.faulty_states.state_of_element(table.compose(lambda, ge[y]));
            }
            for (int x = 0; x < nx; ++x) {
                const int row_base = x * ny;
                const int col_base = fx[x] * ny;
                for (int y = 0; y < ny; ++y) {
                    chain.transition(row_base + y, col_base + fy[y]) += weight;
                }
            }
        }
    }

    for (int z = 0; z < nz; ++z) {
        if (std::abs(chain.transition.row(z).sum() - 1.0) > kRowSumTolerance) {
            throw std::runtime_error("build_coupled_chain: transition row " +
                                     std::to_string(z) + " is not stochastic");
        }
    }

    chain.distance = RVector(nz);
    for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) {
            chain.distance(chain.pair_index(x, y)) = schatten_distance(
                chain.faultless_states.state(x), chain.faulty_states.state(y), p_norm);
        }
    }

    chain.start = chain.pair_index(chain.faultless_states.state_of_element(0),
                                   chain.faulty_states.state_of_element(0));
    return chain;
}

BadSet BadSet::from_indices(int state_count, std::vector<int> indices, double delta) {
    BadSet bad;
    bad.delta = delta;
    bad.mask.assign(static_cast<std::size_t>(state_count), 0);
    std::sort(indices.begin(), indices.end());
    for (int z : indices) {
        if (z < 0 || z >= state_count) {
            throw std::invalid_argument("BadSet::from_indices: index out of range");
        }
        bad.mask[static_cast<std::size_t>(z)] = 1;
    }
    bad.indices = std::move(indices);
    return bad;
}

BadSet bad_set(const CoupledChain& chain, double delta) {
    BadSet bad;
    bad.delta = delta;
    const int nz = chain.state_count();
    bad.mask.assign(static_cast<std::size_t>(nz), 0);
    for (int z = 0; z < nz; ++z) {
        if (chain.distance(z) > delta) {
            bad.mask[static_cast<std::size_t>(z)] = 1;
            bad.indices.push_back(z);
        }
    }
    return bad;
}

double error_distribution(const CoupledChain& chain,
                          const BadSet& bad,
                          int t,
                          NumericsHealth* health) {
    if (t < 0) {
        throw std::invalid_argument("error_distribution: negative time");
    }
    check_bad_set(chain, bad, "error_distribution");
    RVector w = RVector::Zero(chain.state_count());
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count());
    for (int s = 0; s < t; ++s) {
        step_forward(chain.transition, w, scratch);
    }
    return clamp_probability(mass_on(w, bad.indices), health, "error_distribution");
}

double expected_error(const CoupledChain& chain, int t) {
    if (t < 0) {
        throw std::invalid_argument("expected_error: negative time");
    }
    RVector w = RVector::Zero(chain.state_count());
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count());
    for (int s = 0; s < t; ++s) {
        step_forward(chain.transition, w, scratch);
    }
    return w.dot(chain.distance);
}

double max_error_distribution(const CoupledChain& chain,
                              const BadSet& bad,
                              int t,
                              NumericsHealth* health) {
    if (t < 0) {
        throw std::invalid_argument("max_error_distribution: negative time");
    }
    check_bad_set(chain, bad, "max_error_distribution");
    if (bad.mask[static_cast<std::size_t>(chain.start)]) {
        return 1.0;
    }
    // Mass moved into the bad set in one step, per source state.
    RVector into_bad = RVector::Zero(chain.state_count());
    for (int z = 0; z < chain.state_count(); ++z) {
        for (int b : bad.indices) {
            into_bad(z) += chain.transition(z, b);
        }
    }
    RVector w = RVector::Zero(chain.state_count());
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count());
    double acc = 0.0;
    for (int s = 1; s <= t; ++s) {
        acc += w.dot(into_bad);
        step_forward(chain.transition, w, scratch);
        zero_on(w, bad.indices);
    }
    return clamp_probability(acc, health, "max_error_distribution");
}

RVector expected_hitting_time(const CoupledChain& chain, const BadSet& target) {
    check_bad_set(chain, target, "expected_hitting_time");
    return expected_hitting_time(chain.transition, target.mask);
}

RVector expected_hitting_time(const RMatrix& transition,
                              const std::vector<std::uint8_t>& target_mask) {
    const int nz = static_cast<int>(transition.rows());
    if (transition.cols() != nz || static_cast<int>(target_mask.size()) != nz) {
        throw std::invalid_argument("expected_hitting_time: shape mismatch");
    }

    // Predecessor lists of the support graph.
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(nz));
    for (int z = 0; z < nz; ++z) {
        for (int w = 0; w < nz; ++w) {
            if (transition(z, w) > 0.0) {
                preds[static_cast<std::size_t>(w)].push_back(z);
            }
        }
    }

    // Stage 1: states from which the target is reachable at all.
    std::vector<std::uint8_t> reaches(static_cast<std::size_t>(nz), 0);
    std::deque<int> queue;
    for (int z = 0; z < nz; ++z) {
        if (target_mask[static_cast<std::size_t>(z)]) {
            reaches[static_cast<std::size_t>(z)] = 1;
            queue.push_back(z);
        }
    }
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int z : preds[static_cast<std::size_t>(u)]) {
            if (!reaches[static_cast<std::size_t>(z)]) {
                reaches[static_cast<std::size_t>(z)] = 1;
                queue.push_back(z);
            }
        }
    }

    // Stage 2: states that can wander into the no-return region without first
    // crossing the target; their conditional expectation diverges. The
    // no-return region is closed, so it suffices to walk predecessors while
    // skipping target states.
    std::vector<std::uint8_t> divergent(static_cast<std::size_t>(nz), 0);
    for (int z = 0; z < nz; ++z) {
        if (!reaches[static_cast<std::size_t>(z)]) {
            divergent[static_cast<std::size_t>(z)] = 1;
            queue.push_back(z);
        }
    }
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int z : preds[static_cast<std::size_t>(u)]) {
            if (!divergent[static_cast<std::size_t>(z)] &&
                !target_mask[static_cast<std::size_t>(z)]) {
                divergent[static_cast<std::size_t>(z)] = 1;
                queue.push_back(z);
            }
        }
    }

    std::vector<int> interior;
    std::vector<int> slot(static_cast<std::size_t>(nz), -1);
    for (int z = 0; z < nz; ++z) {
        if (!target_mask[static_cast<std::size_t>(z)] && !divergent[static_cast<std::size_t>(z)]) {
            slot[static_cast<std::size_t>(z)] = static_cast<int>(interior.size());
            interior.push_back(z);
        }
    }

    RVector hitting = RVector::Zero(nz);
    for (int z = 0; z < nz; ++z) {
        if (divergent[static_cast<std::size_t>(z)]) {
            hitting(z) = kInf;
        }
    }
    if (interior.empty()) {
        return hitting;
    }

    const int m = static_cast<int>(interior.size());
    RMatrix system = RMatrix::Identity(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            system(i, j) -= transition(interior[static_cast<std::size_t>(i)],
                                       interior[static_cast<std::size_t>(j)]);
        }
    }
    RVector rhs = RVector::Ones(m);
    RVector solution = system.partialPivLu().solve(rhs);
    double residual = (system * solution - rhs).cwiseAbs().maxCoeff();
    if (residual > kHittingResidualTolerance) {
        solution = system.fullPivLu().solve(rhs);
        residual = (system * solution - rhs).cwiseAbs().maxCoeff();
        if (residual > kHittingResidualTolerance) {
            throw std::runtime_error("expected_hitting_time: linear solve residual " +
                                     std::to_string(residual));
        }
    }
    for (int i = 0; i < m; ++i) {
        hitting(interior[static_cast<std::size_t>(i)]) = std::max(0.0, solution(i));
    }
    return hitting;
}

double max_error_lower_bound(double expected_hitting, int t) {
    if (t < 0) {
        throw std::invalid_argument("max_error_lower_bound: negative time");
    }
    if (std::isinf(expected_hitting)) {
        return 0.0;
    }
    return std::max(0.0, 1.0 - expected_hitting / (t + 1.0));
}

MaxTolerable max_tolerable_gates(const CoupledChain& chain,
                                 const BadSet& bad,
                                 double gamma,
                                 int horizon,
                                 NumericsHealth* health) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("max_tolerable_gates: gamma must be in [0,1]");
    }
    if (horizon < 0) {
        throw std::invalid_argument("max_tolerable_gates: negative horizon");
    }
    check_bad_set(chain, bad, "max_tolerable_gates");

    MaxTolerable result;
    const double expected = expected_hitting_time(chain, bad)(chain.start);
    if (gamma >= 1.0 || std::isinf(expected)) {
        result.hitting_bound = kInf;
    } else {
        result.hitting_bound = expected / (1.0 - gamma) - 1.0;
    }

    if (gamma >= 1.0) {
        result.t_star = horizon;
        return result;
    }
    if (bad.mask[static_cast<std::size_t>(chain.start)]) {
        result.t_star = -1;  // already failed at t = 0
        return result;
    }

    // Incremental first-passage sweep; stop at the first t whose running
    // exceedance probability crosses gamma.
    RVector into_bad = RVector::Zero(chain.state_count());
    for (int z = 0; z < chain.state_count(); ++z) {
        for (int b : bad.indices) {
            into_bad(z) += chain.transition(z, b);
        }
    }
    RVector w = RVector::Zero(chain.state_count());
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count());
    double acc = 0.0;
    result.t_star = horizon;
    for (int t = 1; t <= horizon; ++t) {
        acc += w.dot(into_bad);
        step_forward(chain.transition, w, scratch);
        zero_on(w, bad.indices);
        if (clamp_probability(acc, health, "max_tolerable_gates") > gamma) {
            result.t_star = t - 1;
            break;
        }
    }
    return result;
}

ChainSweep sweep_chain(const CoupledChain& chain,
                       const BadSet& bad,
                       int tau,
                       NumericsHealth* health) {
    if (tau < 0) {
        throw std::invalid_argument("sweep_chain: negative horizon");
    }
    check_bad_set(chain, bad, "sweep_chain");
    const int nz = chain.state_count();
    ChainSweep sweep;
    sweep.p_error.resize(static_cast<std::size_t>(tau) + 1);
    sweep.p_max_error.resize(static_cast<std::size_t>(tau) + 1);
    sweep.e_dist.resize(static_cast<std::size_t>(tau) + 1);
    sweep.lemma2_bound.resize(static_cast<std::size_t>(tau) + 1);
    sweep.expected_hitting = expected_hitting_time(chain, bad)(chain.start);

    RVector into_bad = RVector::Zero(nz);
    for (int z = 0; z < nz; ++z) {
        for (int b : bad.indices) {
            into_bad(z) += chain.transition(z, b);
        }
    }

    RVector w_plain = RVector::Zero(nz);
    w_plain(chain.start) = 1.0;
    RVector w_taboo = w_plain;
    const bool start_bad = bad.mask[static_cast<std::size_t>(chain.start)] != 0;
    double acc = 0.0;
    RVector scratch(nz);

    for (int t = 0; t <= tau; ++t) {
        if (t > 0) {
            step_forward(chain.transition, w_plain, scratch);
            if (!start_bad) {
                acc += w_taboo.dot(into_bad);
                step_forward(chain.transition, w_taboo, scratch);
                zero_on(w_taboo, bad.indices);
            }
        }
        sweep.p_error[static_cast<std::size_t>(t)] =
            clamp_probability(mass_on(w_plain, bad.indices), health, "sweep_chain/p_error");
        sweep.p_max_error[static_cast<std::size_t>(t)] =
            start_bad ? 1.0 : clamp_probability(acc, health, "sweep_chain/p_max_error");
        sweep.e_dist[static_cast<std::size_t>(t)] = w_plain.dot(chain.distance);
        sweep.lemma2_bound[static_cast<std::size_t>(t)] =
            max_error_lower_bound(sweep.expected_hitting, t);
    }
    return sweep;
}

InhomogeneousChainBuilder::InhomogeneousChainBuilder(const GroupTable& table,
                                                     const PureState& psi0,
                                                     const PureState& psi0_faulty,
                                                     ErrorModel err,
                                                     double p_norm)
    : table_(&table), err_(std::move(err)), p_norm_(p_norm) {
    if (psi0.dim() != table.dim() || psi0_faulty.dim() != table.dim()) {
        throw std::invalid_argument("InhomogeneousChainBuilder: state dimension mismatch");
    }
    if (err_.size() != table.order()) {
        throw std::invalid_argument("InhomogeneousChainBuilder: error model size mismatch");
    }
    faultless_states_ = reachable_states(table, psi0);
    faulty_states_ = reachable_states(table, psi0_faulty);
    cross_distance_ = RMatrix(faulty_states_.size(), faultless_states_.size());
    for (int y = 0; y < faulty_states_.size(); ++y) {
        for (int x = 0; x < faultless_states_.size(); ++x) {
            cross_distance_(y, x) =
                schatten_distance(faulty_states_.state(y), faultless_states_.state(x), p_norm_);
        }
    }
}

std::shared_ptr<const RMatrix> InhomogeneousChainBuilder::factor_for_gate(int gate) const {
    auto it = factor_cache_.find(gate);
    if (it != factor_cache_.end()) {
        return it->second;
    }
    const int ny = faulty_states_.size();
    const std::vector<int>& rep_y = faulty_states_.representative_elements();
    auto factor = std::make_shared<RMatrix>(RMatrix::Zero(ny, ny));
    std::vector<int> ge(static_cast<std::size_t>(ny));
    for (int y = 0; y < ny; ++y) {
        ge[static_cast<std::size_t>(y)] = table_->compose(gate, rep_y[static_cast<std::size_t>(y)]);
    }
    const GateDistribution& faults = err_.row(gate);
    for (int lambda : faults.support()) {
        const double weight = faults.prob(lambda);
        for (int y = 0; y < ny; ++y) {
            int target = faulty_states_.state_of_element(
                table_->compose(lambda, ge[static_cast<std::size_t>(y)]));
            (*factor)(y, target) += weight;
        }
    }
    for (int y = 0; y < ny; ++y) {
        if (std::abs(factor->row(y).sum() - 1.0) > kRowSumTolerance) {
            throw std::runtime_error("InhomogeneousChainBuilder: factor row not stochastic");
        }
    }
    auto shared = std::shared_ptr<const RMatrix>(std::move(factor));
    factor_cache_.emplace(gate, shared);
    return shared;
}

InhomogeneousChain InhomogeneousChainBuilder::build(const Circuit& circuit, double delta) const {
    InhomogeneousChain chain;
    chain.table = table_;
    chain.tau = circuit.tau();
    chain.delta = delta;
    chain.p_norm = p_norm_;
    chain.state_count = faulty_states_.size();
    chain.start = faulty_states_.state_of_element(0);

    chain.factors.reserve(static_cast<std::size_t>(chain.tau));
    chain.faultless_trajectory.resize(static_cast<std::size_t>(chain.tau) + 1);
    const std::vector<int>& rep_x = faultless_states_.representative_elements();
    int x = faultless_states_.state_of_element(0);
    chain.faultless_trajectory[0] = x;
    for (int k = 0; k < chain.tau; ++k) {
        int gate = circuit.gates[static_cast<std::size_t>(k)];
        if (gate < 0 || gate >= table_->order()) {
            throw std::invalid_argument("InhomogeneousChainBuilder: gate index out of range");
        }
        chain.factors.push_back(factor_for_gate(gate));
        x = faultless_states_.state_of_element(
            table_->compose(gate, rep_x[static_cast<std::size_t>(x)]));
        chain.faultless_trajectory[static_cast<std::size_t>(k) + 1] = x;
    }

    chain.bad_masks.resize(static_cast<std::size_t>(chain.tau) + 1);
    chain.distances.resize(static_cast<std::size_t>(chain.tau) + 1);
    for (int t = 0; t <= chain.tau; ++t) {
        const int xt = chain.faultless_trajectory[static_cast<std::size_t>(t)];
        chain.distances[static_cast<std::size_t>(t)] = cross_distance_.col(xt);
        std::vector<std::uint8_t>& mask = chain.bad_masks[static_cast<std::size_t>(t)];
        mask.assign(static_cast<std::size_t>(chain.state_count), 0);
        for (int y = 0; y < chain.state_count; ++y) {
            if (cross_distance_(y, xt) > delta) {
                mask[static_cast<std::size_t>(y)] = 1;
            }
        }
    }
    return chain;
}

InhomogeneousChain build_inhomogeneous_chain(const GroupTable& table,
                                             const Circuit& circuit,
                                             const PureState& psi0,
                                             const PureState& psi0_faulty,
                                             const ErrorModel& err,
                                             double p_norm,
                                             double delta) {
    InhomogeneousChainBuilder builder(table, psi0, psi0_faulty, err, p_norm);
    return builder.build(circuit, delta);
}

namespace {

void check_time(const InhomogeneousChain& chain, int t, const char* what) {
    if (t < 0 || t > chain.tau) {
        throw std::out_of_range(std::string(what) + ": t = " + std::to_string(t) +
                                " outside [0, " + std::to_string(chain.tau) + "]");
    }
}

double mass_on_mask(const RVector& w, const std::vector<std::uint8_t>& mask) {
    double sum = 0.0;
    for (int y = 0; y < w.size(); ++y) {
        if (mask[static_cast<std::size_t>(y)]) {
            sum += w(y);
        }
    }
    return sum;
}

}  // namespace

double nonrandom_error_distribution(const InhomogeneousChain& chain,
                                    int t,
                                    NumericsHealth* health) {
    check_time(chain, t, "nonrandom_error_distribution");
    RVector w = RVector::Zero(chain.state_count);
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count);
    for (int k = 1; k <= t; ++k) {
        step_forward(*chain.factors[static_cast<std::size_t>(k) - 1], w, scratch);
    }
    return clamp_probability(mass_on_mask(w, chain.bad_masks[static_cast<std::size_t>(t)]),
                             health, "nonrandom_error_distribution");
}

double nonrandom_expected_error(const InhomogeneousChain& chain, int t) {
    check_time(chain, t, "nonrandom_expected_error");
    RVector w = RVector::Zero(chain.state_count);
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count);
    for (int k = 1; k <= t; ++k) {
        step_forward(*chain.factors[static_cast<std::size_t>(k) - 1], w, scratch);
    }
    return w.dot(chain.distances[static_cast<std::size_t>(t)]);
}

double nonrandom_max_error(const InhomogeneousChain& chain, int t, NumericsHealth* health) {
    check_time(chain, t, "nonrandom_max_error");
    if (chain.bad_masks[0][static_cast<std::size_t>(chain.start)]) {
        return 1.0;
    }
    RVector w = RVector::Zero(chain.state_count);
    w(chain.start) = 1.0;
    RVector scratch(chain.state_count);
    RVector into_bad(chain.state_count);
    double acc = 0.0;
    for (int s = 1; s <= t; ++s) {
        const RMatrix& factor = *chain.factors[static_cast<std::size_t>(s) - 1];
        const std::vector<std::uint8_t>& mask = chain.bad_masks[static_cast<std::size_t>(s)];
        into_bad.setZero();
        for (int y = 0; y < chain.state_count; ++y) {
            if (mask[static_cast<std::size_t>(y)]) {
                into_bad += factor.col(y);
            }
        }
        acc += w.dot(into_bad);
        step_forward(factor, w, scratch);
        for (int y = 0; y < chain.state_count; ++y) {
            if (mask[static_cast<std::size_t>(y)]) {
                w(y) = 0.0;
            }
        }
    }
    return clamp_probability(acc, health, "nonrandom_max_error");
}

InhomogeneousSweep sweep_inhomogeneous(const InhomogeneousChain& chain, NumericsHealth* health) {
    InhomogeneousSweep sweep;
    const std::size_t count = static_cast<std::size_t>(chain.tau) + 1;
    sweep.p_error.resize(count);
    sweep.p_max_error.resize(count);
    sweep.e_dist.resize(count);

    RVector w_plain = RVector::Zero(chain.state_count);
    w_plain(chain.start) = 1.0;
    RVector w_taboo = w_plain;
    RVector scratch(chain.state_count);
    RVector into_bad(chain.state_count);
    const bool start_bad = chain.bad_masks[0][static_cast<std::size_t>(chain.start)] != 0;
    double acc = 0.0;

    for (int t = 0; t <= chain.tau; ++t) {
        const std::vector<std::uint8_t>& mask = chain.bad_masks[static_cast<std::size_t>(t)];
        if (t > 0) {
            const RMatrix& factor = *chain.factors[static_cast<std::size_t>(t) - 1];
            step_forward(factor, w_plain, scratch);
            if (!start_bad) {
                into_bad.setZero();
                for (int y = 0; y < chain.state_count; ++y) {
                    if (mask[static_cast<std::size_t>(y)]) {
                        into_bad += factor.col(y);
                    }
                }
                acc += w_taboo.dot(into_bad);
                step_forward(factor, w_taboo, scratch);
                for (int y = 0; y < chain.state_count; ++y) {
                    if (mask[static_cast<std::size_t>(y)]) {
                        w_taboo(y) = 0.0;
                    }
                }
            }
        }
        sweep.p_error[static_cast<std::size_t>(t)] = clamp_probability(
            mass_on_mask(w_plain, mask), health, "sweep_inhomogeneous/p_error");
        sweep.p_max_error[static_cast<std::size_t>(t)] =
            start_bad ? 1.0
                      : clamp_probability(acc, health, "sweep_inhomogeneous/p_max_error");
        sweep.e_dist[static_cast<std::size_t>(t)] =
            w_plain.dot(chain.distances[static_cast<std::size_t>(t)]);
    }
    return sweep;
}

}  // namespace qerrac
