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

#include "qerrac/group.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <stdexcept>

namespace qerrac {

namespace gates {

CMatrix identity(int dim) {
    return CMatrix::Identity(dim, dim);
}

CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

CMatrix hadamard() {
    CMatrix m(2, 2);
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    m << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2;
    return m;
}

CMatrix phase_s() {
    CMatrix m(2, 2);
    m << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(0, 1);
    return m;
}

CMatrix cz() {
    CMatrix m = CMatrix::Identity(4, 4);
    m(3, 3) = -1;
    return m;
}

CMatrix cnot(int control, int target, int qubits) {
    if (control == target || control < 0 || target < 0 || control >= qubits ||
        target >= qubits) {
        throw std::invalid_argument("cnot: invalid control/target qubits");
    }
    int dim = 1 << qubits;
    CMatrix m = CMatrix::Zero(dim, dim);
    for (int basis = 0; basis < dim; ++basis) {
        int control_bit = (basis >> (qubits - 1 - control)) & 1;
        int image = basis;
        if (control_bit) {
            image = basis ^ (1 << (qubits - 1 - target));
        }
        m(image, basis) = 1;
    }
    return m;
}

CMatrix on_qubit(const CMatrix& gate, int qubit, int qubits) {
    if (gate.rows() != 2 || gate.cols() != 2) {
        throw std::invalid_argument("on_qubit: expected a one-qubit gate");
    }
    if (qubit < 0 || qubit >= qubits) {
        throw std::invalid_argument("on_qubit: qubit index out of range");
    }
    CMatrix out = identity(1);
    for (int q = 0; q < qubits; ++q) {
        out = kron(out, q == qubit ? gate : identity(2));
    }
    return out;
}

}  // namespace gates

CMatrix canonical_phase(const CMatrix& m, double tol) {
    if (!is_unitary(m, 1e-9)) {
        throw std::invalid_argument("canonical_phase: matrix is not unitary");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            Complex entry = m(i, j);
            if (std::abs(entry) > tol) {
                return m * (std::conj(entry) / std::abs(entry));
            }
        }
    }
    throw std::invalid_argument("canonical_phase: matrix is numerically zero");
}

namespace {

// Lookup key: every entry rounded to 9 decimals, packed as little-endian
// int64 pairs. Signed zero collapses to +0 so -1e-12 and 1e-12 share a key.
std::string matrix_key(const CMatrix& m) {
    std::string key;
    key.reserve(static_cast<std::size_t>(m.size()) * 16);
    auto append_rounded = [&key](double v) {
        std::int64_t r = std::llround(v * 1e9);
        if (r == 0) {
            r = 0;  // normalize -0
        }
        char bytes[8];
        std::memcpy(bytes, &r, 8);
        key.append(bytes, 8);
    };
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            append_rounded(m(i, j).real());
            append_rounded(m(i, j).imag());
        }
    }
    return key;
}

constexpr int kDenseComposeLimit = 4096;

}  // namespace

GroupTable GroupTable::from_elements(std::string name,
                                     int qubits,
                                     const std::vector<CMatrix>& elements,
                                     std::vector<std::pair<std::string, CMatrix>> generators) {
    if (elements.empty()) {
        throw std::invalid_argument("from_elements: empty element list");
    }
    GroupTable table;
    table.name_ = std::move(name);
    table.qubits_ = qubits;
    table.dim_ = 1 << qubits;
    table.generators_ = std::move(generators);
    for (const CMatrix& m : elements) {
        if (m.rows() != table.dim_ || m.cols() != table.dim_) {
            throw std::invalid_argument("from_elements: element dimension mismatch");
        }
        CMatrix canonical = canonical_phase(m);
        std::string key = matrix_key(canonical);
        if (table.index_by_key_.count(key)) {
            continue;
        }
        table.index_by_key_.emplace(std::move(key), static_cast<int>(table.elements_.size()));
        table.elements_.push_back(std::move(canonical));
    }
    table.finalize();
    return table;
}

void GroupTable::finalize() {
    int n = order();
    inverse_.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        auto it = index_by_key_.find(matrix_key(canonical_phase(elements_[i].adjoint())));
        if (it != index_by_key_.end()) {
            inverse_[i] = it->second;
        }
    }
    has_dense_compose_ = n <= kDenseComposeLimit;
    if (has_dense_compose_) {
        compose_dense_.assign(static_cast<std::size_t>(n) * n, -1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                CMatrix product = canonical_phase(elements_[i] * elements_[j]);
                auto it = index_by_key_.find(matrix_key(product));
                if (it != index_by_key_.end()) {
                    compose_dense_[static_cast<std::size_t>(i) * n + j] = it->second;
                }
            }
        }
    }
}

int GroupTable::compose(int i, int j) const {
    if (has_dense_compose_) {
        return compose_dense_[static_cast<std::size_t>(i) * order() + j];
    }
    CMatrix product = canonical_phase(elements_.at(i) * elements_.at(j));
    auto it = index_by_key_.find(matrix_key(product));
    return it == index_by_key_.end() ? -1 : it->second;
}

int GroupTable::inverse(int index) const {
    return inverse_.at(index);
}

int GroupTable::element_of(const CMatrix& m) const {
    if (m.rows() != dim_ || m.cols() != dim_) {
        throw std::invalid_argument("element_of: dimension mismatch");
    }
    CMatrix canonical = canonical_phase(m);  // also rejects non-unitary input
    auto it = index_by_key_.find(matrix_key(canonical));
    if (it == index_by_key_.end()) {
        throw std::out_of_range("element_of: matrix is not a member of group " + name_);
    }
    return it->second;
}

bool GroupTable::contains(const CMatrix& m) const {
    if (m.rows() != dim_ || m.cols() != dim_ || !is_unitary(m)) {
        return false;
    }
    return index_by_key_.count(matrix_key(canonical_phase(m))) > 0;
}

bool GroupTable::verify() const {
    int n = order();
    if (n == 0) {
        return false;
    }
    if ((elements_[0] - CMatrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff() > 1e-9) {
        return false;
    }
    for (const auto& [gen_name, gen_matrix] : generators_) {
        (void)gen_name;
        if (!contains(gen_matrix)) {
            return false;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (inverse_[i] < 0) {
            return false;
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            int via_table = compose(i, j);
            if (via_table < 0) {
                return false;
            }
            CMatrix product = canonical_phase(elements_[i] * elements_[j]);
            if ((product - elements_[via_table]).cwiseAbs().maxCoeff() > 1e-9) {
                return false;
            }
        }
    }
    return true;
}

GroupTable generate_pauli_group(int qubits) {
    if (qubits < 1 || qubits > 3) {
        throw std::invalid_argument("generate_pauli_group: supported sizes are 1..3 qubits");
    }
    const CMatrix singles[4] = {gates::identity(2), gates::pauli_x(), gates::pauli_y(),
                                gates::pauli_z()};
    int order = 1;
    for (int q = 0; q < qubits; ++q) {
        order *= 4;
    }
    std::vector<CMatrix> elements;
    elements.reserve(order);
    for (int code = 0; code < order; ++code) {
        CMatrix m = gates::identity(1);
        for (int q = 0; q < qubits; ++q) {
            int digit = (code >> (2 * (qubits - 1 - q))) & 3;
            m = kron(m, singles[digit]);
        }
        elements.push_back(std::move(m));
    }
    std::vector<std::pair<std::string, CMatrix>> generators;
    for (int q = 0; q < qubits; ++q) {
        generators.emplace_back("X" + std::to_string(q),
                                gates::on_qubit(gates::pauli_x(), q, qubits));
        generators.emplace_back("Z" + std::to_string(q),
                                gates::on_qubit(gates::pauli_z(), q, qubits));
    }
    return GroupTable::from_elements("pauli:" + std::to_string(qubits), qubits, elements,
                                     std::move(generators));
}

GroupTable generate_clifford_group(int qubits) {
    if (qubits < 1 || qubits > 2) {
        throw std::invalid_argument(
            "generate_clifford_group: supported sizes are 1..2 qubits");
    }
    int dim = 1 << qubits;
    std::vector<std::pair<std::string, CMatrix>> generators;
    for (int q = 0; q < qubits; ++q) {
        generators.emplace_back("H" + std::to_string(q),
                                gates::on_qubit(gates::hadamard(), q, qubits));
    }
    for (int q = 0; q < qubits; ++q) {
        generators.emplace_back("S" + std::to_string(q),
                                gates::on_qubit(gates::phase_s(), q, qubits));
    }
    if (qubits == 2) {
        generators.emplace_back("CZ01", gates::cz());
    }

    GroupTable table;
    table.name_ = "clifford:" + std::to_string(qubits);
    table.qubits_ = qubits;
    table.dim_ = dim;
    table.generators_ = generators;

    CMatrix identity = canonical_phase(gates::identity(dim));
    table.index_by_key_.emplace(matrix_key(identity), 0);
    table.elements_.push_back(identity);
    // Breadth-first closure in FIFO order; right-multiplying by each generator
    // in declaration order keeps the enumeration deterministic.
    for (std::size_t head = 0; head < table.elements_.size(); ++head) {
        for (const auto& [gen_name, gen_matrix] : table.generators_) {
            (void)gen_name;
            CMatrix next = canonical_phase(table.elements_[head] * gen_matrix);
            std::string key = matrix_key(next);
            if (!table.index_by_key_.count(key)) {
                table.index_by_key_.emplace(std::move(key),
                                            static_cast<int>(table.elements_.size()));
                table.elements_.push_back(std::move(next));
            }
        }
    }
    table.finalize();
    return table;
}

bool verify_group(const GroupTable& table) {
    return table.verify();
}

}  // namespace qerrac
