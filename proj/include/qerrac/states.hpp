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

#include <string>
#include <unordered_map>
#include <vector>

#include "qerrac/group.hpp"
#include "qerrac/linalg.hpp"

namespace qerrac {

/// A normalized pure state on 1..3 qubits.
class PureState {
   public:
    /// Throws std::invalid_argument unless the vector has length 2^n for
    /// n in 1..3 and unit norm within 1e-9.
    explicit PureState(CVector amplitudes);

    /// Computational basis state |index⟩ on the given number of qubits.
    static PureState basis(int qubits, int index);

    int qubits() const { return qubits_; }
    int dim() const { return static_cast<int>(amplitudes_.size()); }
    const CVector& amplitudes() const { return amplitudes_; }

    /// Rank-one density matrix |ψ⟩⟨ψ|.
    CMatrix density() const { return amplitudes_ * amplitudes_.adjoint(); }

   private:
    CVector amplitudes_;
    int qubits_;
};

/// Parse a state description: a named ket ("|0>", "|10>", "|+>", "|->") or a
/// sum of coefficient·ket terms such as "sqrt(7/10)|0>+sqrt(3/10)|1>".
/// Coefficients may be decimals, fractions ("3/5"), or sqrt() of either.
/// The result must be normalized within 1e-9. Throws std::invalid_argument
/// on syntax errors, mixed ket widths, or non-normalized sums.
PureState parse_state(const std::string& text);

/// Distance ½·(Σ s_k^p)^(1/p) over singular values s_k of σ−ρ, i.e. half the
/// Schatten p-norm of the difference; p=1 is the trace distance. p may be
/// any real ≥ 1 or infinity (then ½·max s_k). Throws std::invalid_argument
/// on dimension mismatch or p < 1.
double schatten_distance(const CMatrix& rho, const CMatrix& sigma, double p = 1.0);

/// Uhlmann fidelity Tr√(√ρ σ √ρ); evaluated as √(⟨ψ|σ|ψ⟩) when ρ is pure.
double fidelity(const CMatrix& rho, const CMatrix& sigma);

/// True iff m fixes |ψ⟩ up to phase: |⟨ψ|m|ψ⟩| = 1 within 1e-9. The identity
/// (up to phase) stabilizes everything and is rejected with
/// std::invalid_argument.
bool is_stabilized_by(const CMatrix& m, const PureState& psi);

/// The orbit of an initial state under a group: one density matrix per
/// distinct state plus the map from group element index to state index.
/// States are identified by density-matrix entries rounded to 6 decimals;
/// a key hit is accepted only if the trace distance to the stored
/// representative is ≤ 1e-6.
class StateSet {
   public:
    int size() const { return static_cast<int>(states_.size()); }
    const CMatrix& state(int index) const { return states_.at(index); }
    const std::vector<int>& element_to_state() const { return element_to_state_; }
    /// State index for a group element index.
    int state_of_element(int element) const { return element_to_state_.at(element); }
    /// Index of a density matrix in the set, or -1 if absent.
    int find(const CMatrix& density) const;
    /// First group element (lowest index) that maps the origin onto each state.
    const std::vector<int>& representative_elements() const { return representatives_; }
    const std::string& origin() const { return origin_; }

   private:
    friend StateSet reachable_states(const GroupTable& table, const PureState& psi0);
    std::vector<CMatrix> states_;
    std::vector<int> element_to_state_;
    std::vector<int> representatives_;
    std::unordered_map<std::string, int> index_by_key_;
    std::string origin_;
};

/// Enumerate {g|ψ0⟩⟨ψ0|g† : g ∈ G} in group enumeration order.
/// Throws std::invalid_argument if the state dimension does not match the
/// group's.
StateSet reachable_states(const GroupTable& table, const PureState& psi0);

}  // namespace qerrac
