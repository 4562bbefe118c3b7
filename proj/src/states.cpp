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

#include "qerrac/states.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace qerrac {

PureState::PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    Eigen::Index dim = amplitudes_.size();
    int qubits = 0;
    while ((Eigen::Index{1} << (qubits + 1)) <= dim) {
        ++qubits;
    }
    if (qubits < 1 || qubits > 3 || (Eigen::Index{1} << qubits) != dim) {
        throw std::invalid_argument("PureState: dimension must be 2^n for n in 1..3");
    }
    qubits_ = qubits;
    if (std::abs(amplitudes_.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("PureState: vector is not normalized");
    }
}

PureState PureState::basis(int qubits, int index) {
    if (qubits < 1 || qubits > 3 || index < 0 || index >= (1 << qubits)) {
        throw std::invalid_argument("PureState::basis: invalid qubit count or index");
    }
    CVector v = CVector::Zero(1 << qubits);
    v(index) = 1.0;
    return PureState(std::move(v));
}

namespace {

std::string strip_spaces(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(c);
        }
    }
    return out;
}

double parse_number_or_fraction(const std::string& text) {
    auto slash = text.find('/');
    auto parse_one = [](const std::string& part) {
        std::size_t used = 0;
        double value = std::stod(part, &used);
        if (used != part.size()) {
            throw std::invalid_argument("parse_state: bad numeric literal '" + part + "'");
        }
        return value;
    };
    if (slash == std::string::npos) {
        return parse_one(text);
    }
    double denominator = parse_one(text.substr(slash + 1));
    if (denominator == 0.0) {
        throw std::invalid_argument("parse_state: division by zero in coefficient");
    }
    return parse_one(text.substr(0, slash)) / denominator;
}

double parse_coefficient(const std::string& text) {
    if (text.empty()) {
        return 1.0;
    }
    std::string body = text;
    if (!body.empty() && body.back() == '*') {
        body.pop_back();
    }
    if (body.rfind("sqrt(", 0) == 0 && body.back() == ')') {
        double inner = parse_number_or_fraction(body.substr(5, body.size() - 6));
        if (inner < 0) {
            throw std::invalid_argument("parse_state: sqrt of negative value");
        }
        return std::sqrt(inner);
    }
    return parse_number_or_fraction(body);
}

}  // namespace

PureState parse_state(const std::string& raw) {
    std::string text = strip_spaces(raw);
    if (text == "|+>") {
        text = "sqrt(1/2)|0>+sqrt(1/2)|1>";
    } else if (text == "|->") {
        text = "sqrt(1/2)|0>-sqrt(1/2)|1>";
    }
    if (text.empty()) {
        throw std::invalid_argument("parse_state: empty state expression");
    }

    struct Term {
        double sign;
        std::string body;
    };
    std::vector<Term> terms;
    std::size_t pos = 0;
    while (pos < text.size()) {
        double sign = 1.0;
        if (text[pos] == '+' || text[pos] == '-') {
            sign = text[pos] == '-' ? -1.0 : 1.0;
            ++pos;
        }
        int depth = 0;
        std::size_t start = pos;
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '(') {
                ++depth;
            } else if (c == ')') {
                --depth;
            } else if ((c == '+' || c == '-') && depth == 0) {
                break;
            }
            ++pos;
        }
        if (pos == start) {
            throw std::invalid_argument("parse_state: empty term in '" + raw + "'");
        }
        terms.push_back({sign, text.substr(start, pos - start)});
    }

    int width = -1;
    std::vector<std::pair<int, double>> amplitudes;
    for (const Term& term : terms) {
        auto bar = term.body.find('|');
        if (bar == std::string::npos || term.body.back() != '>') {
            throw std::invalid_argument("parse_state: term '" + term.body +
                                        "' has no |...> ket");
        }
        double coeff = term.sign * parse_coefficient(term.body.substr(0, bar));
        std::string bits = term.body.substr(bar + 1, term.body.size() - bar - 2);
        if (bits.empty() || bits.size() > 3) {
            throw std::invalid_argument("parse_state: ket must have 1..3 qubits");
        }
        if (width == -1) {
            width = static_cast<int>(bits.size());
        } else if (width != static_cast<int>(bits.size())) {
            throw std::invalid_argument("parse_state: mixed ket widths");
        }
        int index = 0;
        for (char b : bits) {
            if (b != '0' && b != '1') {
                throw std::invalid_argument("parse_state: ket digits must be 0 or 1");
            }
            index = index * 2 + (b - '0');
        }
        amplitudes.emplace_back(index, coeff);
    }

    CVector v = CVector::Zero(1 << width);
    for (const auto& [index, coeff] : amplitudes) {
        v(index) += coeff;
    }
    if (std::abs(v.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("parse_state: expression is not normalized");
    }
    return PureState(std::move(v));
}

namespace {

void check_density_pair(const CMatrix& rho, const CMatrix& sigma) {
    if (rho.rows() != rho.cols() || sigma.rows() != sigma.cols() ||
        rho.rows() != sigma.rows() || rho.rows() == 0) {
        throw std::invalid_argument("density matrices must be square with equal dimension");
    }
}

}  // namespace

double schatten_distance(const CMatrix& rho, const CMatrix& sigma, double p) {
    check_density_pair(rho, sigma);
    if (!(p >= 1.0)) {  // also rejects NaN
        throw std::invalid_argument("schatten_distance: p must be >= 1");
    }
    CMatrix diff = sigma - rho;
    diff = 0.5 * (diff + diff.adjoint().eval());  // difference of Hermitians
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(diff, Eigen::EigenvaluesOnly);
    RVector singular = solver.eigenvalues().cwiseAbs();
    if (std::isinf(p)) {
        return 0.5 * singular.maxCoeff();
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < singular.size(); ++i) {
        sum += std::pow(singular(i), p);
    }
    return 0.5 * std::pow(sum, 1.0 / p);
}

double fidelity(const CMatrix& rho, const CMatrix& sigma) {
    check_density_pair(rho, sigma);
    double purity = (rho * rho).trace().real();
    if (purity >= 1.0 - 1e-9) {
        // ρ = |ψ⟩⟨ψ| makes Tr√(√ρ σ √ρ) collapse to √(⟨ψ|σ|ψ⟩) = √Tr(ρσ).
        double overlap = (rho * sigma).trace().real();
        return std::sqrt(std::max(0.0, overlap));
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> rho_solver(rho);
    RVector eigs = rho_solver.eigenvalues().cwiseMax(0.0);
    CMatrix sqrt_rho = rho_solver.eigenvectors() * eigs.cwiseSqrt().asDiagonal() *
                       rho_solver.eigenvectors().adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> inner(sqrt_rho * sigma * sqrt_rho,
                                                 Eigen::EigenvaluesOnly);
    double total = 0.0;
    for (Eigen::Index i = 0; i < inner.eigenvalues().size(); ++i) {
        total += std::sqrt(std::max(0.0, inner.eigenvalues()(i)));
    }
    return total;
}

bool is_stabilized_by(const CMatrix& m, const PureState& psi) {
    if (m.rows() != psi.dim() || m.cols() != psi.dim()) {
        throw std::invalid_argument("is_stabilized_by: dimension mismatch");
    }
    if (!is_unitary(m)) {
        throw std::invalid_argument("is_stabilized_by: matrix is not unitary");
    }
    // Identity up to global phase stabilizes every state; callers must ask
    // about a nontrivial element.
    if (std::abs(m.trace()) >= psi.dim() - 1e-9) {
        throw std::invalid_argument("is_stabilized_by: matrix is the identity up to phase");
    }
    Complex overlap = (psi.amplitudes().adjoint() * m * psi.amplitudes())(0, 0);
    return std::abs(overlap) >= 1.0 - 1e-9;
}

namespace {

std::string density_key(const CMatrix& m) {
    std::string key;
    key.reserve(static_cast<std::size_t>(m.size()) * 16);
    auto append_rounded = [&key](double v) {
        std::int64_t r = std::llround(v * 1e6);
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

}  // namespace

int StateSet::find(const CMatrix& density) const {
    auto it = index_by_key_.find(density_key(density));
    if (it == index_by_key_.end()) {
        return -1;
    }
    if (schatten_distance(states_[it->second], density, 1.0) > 1e-6) {
        return -1;
    }
    return it->second;
}

StateSet reachable_states(const GroupTable& table, const PureState& psi0) {
    if (psi0.dim() != table.dim()) {
        throw std::invalid_argument("reachable_states: state/group dimension mismatch");
    }
    StateSet set;
    set.origin_ = table.name();
    set.element_to_state_.resize(table.order());
    for (int g = 0; g < table.order(); ++g) {
        CVector moved = table.element(g) * psi0.amplitudes();
        CMatrix density = moved * moved.adjoint();
        std::string key = density_key(density);
        auto it = set.index_by_key_.find(key);
        if (it != set.index_by_key_.end()) {
            if (schatten_distance(set.states_[it->second], density, 1.0) > 1e-6) {
                throw std::runtime_error(
                    "reachable_states: distinct states collided on a rounding key");
            }
            set.element_to_state_[g] = it->second;
            continue;
        }
        int index = static_cast<int>(set.states_.size());
        set.index_by_key_.emplace(std::move(key), index);
        set.states_.push_back(std::move(density));
        set.representatives_.push_back(g);
        set.element_to_state_[g] = index;
    }
    return set;
}

}  // namespace qerrac
