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
#include <utility>
#include <vector>

#include "qerrac/linalg.hpp"

namespace qerrac {

/// Common gate matrices. Qubit 0 is the most significant bit of a basis ket,
/// i.e. |q0 q1⟩ has amplitude index q0*2 + q1.
namespace gates {
CMatrix identity(int dim);
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix hadamard();
CMatrix phase_s();
CMatrix cz();
/// CNOT with the given control/target qubits on an n-qubit register.
CMatrix cnot(int control, int target, int qubits);
/// Embed a one-qubit gate on the given qubit of an n-qubit register.
CMatrix on_qubit(const CMatrix& gate, int qubit, int qubits);
}  // namespace gates

/// Rescale a unitary so its first nonzero entry (row-major scan, tolerance
/// 1e-9) is real and strictly positive. Identifies matrices that differ by a
/// global phase; idempotent. Throws std::invalid_argument for non-unitary
/// input.
CMatrix canonical_phase(const CMatrix& m, double tol = 1e-9);

/// A finite group of unitaries modulo global phase, enumerated in a fixed
/// deterministic order with the identity at index 0.
///
/// Lookup keys round every matrix entry to 9 decimals, which separates all
/// supported groups (their entries are spaced far coarser than the roundoff
/// accumulated by the construction). Tables are immutable once built; all
/// queries are const and safe to call concurrently.
class GroupTable {
   public:
    /// Build a table from explicit elements (canonicalized and deduplicated
    /// in the given order). `generators` are (name, matrix) pairs recorded
    /// for verify_group; they need not be members for a deliberately broken
    /// table. Products that fall outside the element list get compose entry
    /// -1; verify_group reports such tables as invalid.
    static GroupTable from_elements(std::string name,
                                    int qubits,
                                    const std::vector<CMatrix>& elements,
                                    std::vector<std::pair<std::string, CMatrix>> generators);

    const std::string& name() const { return name_; }
    int qubits() const { return qubits_; }
    int dim() const { return dim_; }
    int order() const { return static_cast<int>(elements_.size()); }

    const CMatrix& element(int index) const { return elements_.at(index); }
    const std::vector<std::pair<std::string, CMatrix>>& generators() const {
        return generators_;
    }

    /// Index of element(i) * element(j) (i.e. "apply j, then i").
    /// Served from a dense table for small groups and by canonical-key
    /// lookup for large ones; -1 only for tables built from an incomplete
    /// element list.
    int compose(int i, int j) const;

    /// Index of the group inverse (adjoint) of element(index).
    int inverse(int index) const;

    /// Index of the group member equal to m up to global phase.
    /// Throws std::out_of_range if m is not a member and
    /// std::invalid_argument if m is not unitary of matching dimension.
    int element_of(const CMatrix& m) const;

    /// True iff m matches a member up to global phase.
    bool contains(const CMatrix& m) const;

    /// Identity at index 0, every declared generator a member, every pairwise
    /// product a member that matches the stored compose entry, and every
    /// element's inverse present. Runs the full |G|^2 product check, so keep
    /// it to small groups in hot paths.
    bool verify() const;

   private:
    GroupTable() = default;
    void finalize();

    std::string name_;
    int qubits_ = 0;
    int dim_ = 0;
    std::vector<CMatrix> elements_;
    std::vector<int> inverse_;
    std::vector<int> compose_dense_;  // row-major order*order, built for small groups
    bool has_dense_compose_ = false;
    std::unordered_map<std::string, int> index_by_key_;
    std::vector<std::pair<std::string, CMatrix>> generators_;

    friend GroupTable generate_pauli_group(int qubits);
    friend GroupTable generate_clifford_group(int qubits);
};

/// The n-qubit Pauli group modulo phase: all tensor products of {I,X,Y,Z},
/// enumerated lexicographically (I<X<Y<Z, first qubit most significant), so
/// the identity gets index 0 and e.g. "XY" on two qubits gets index 4*1+2.
/// Supported sizes: 1 ≤ n ≤ 3. Order 4^n.
GroupTable generate_pauli_group(int qubits);

/// The n-qubit Clifford group modulo phase, enumerated by breadth-first
/// closure over right-multiplication by {H, S} per qubit plus CZ on each
/// qubit pair, seeded with the identity at index 0. Supported sizes:
/// n ∈ {1, 2} (orders 24 and 11520); larger n is rejected as unsupported.
GroupTable generate_clifford_group(int qubits);

/// Convenience wrapper for verify() on a table.
bool verify_group(const GroupTable& table);

}  // namespace qerrac
