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

#include <Eigen/Dense>
#include <complex>

namespace qerrac {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline bool is_unitary(const CMatrix& m, double tol = 1e-9) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        return false;
    }
    CMatrix gram = m.adjoint() * m;
    gram -= CMatrix::Identity(m.rows(), m.cols());
    return gram.cwiseAbs().maxCoeff() <= tol;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

}  // namespace qerrac
