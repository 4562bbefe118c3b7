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

#include <iosfwd>
#include <string>
#include <vector>

#include "qerrac/chain.hpp"
#include "qerrac/group.hpp"

namespace qerrac {

/// Text formats shared by the command-line tool and its tests: group specs,
/// gate tokens, circuit files, error-model files, CSV tables, and the
/// analytic-versus-empirical agreement report. All parsers throw
/// std::invalid_argument with the offending token or line in the message.

/// Build a group from a "<family>:<qubits>" spec: "pauli:1", "pauli:2",
/// "clifford:1", "clifford:2".
GroupTable make_group(const std::string& spec);

/// Number of qubits the group acts on (log2 of the matrix dimension).
int qubit_count(const GroupTable& table);

/// Resolve one gate token to a group element index. Accepted forms:
///   - "elem <k>"      the element at enumeration index k;
///   - "I","X","Y","Z","H","S"  one-qubit gate names (one-qubit groups);
///   - "<name> <q>"    the same names placed on qubit q of a larger group;
///   - "XZ", "IY", ... a full Pauli string, one letter per qubit;
///   - "CNOT <c> <t>", "CZ <a> <b>"  two-qubit gates on a two-qubit group.
/// The resolved matrix must be a member of the group.
int resolve_gate(const GroupTable& table, const std::string& token);

/// Parse a circuit: one gate token per line, applied top to bottom; blank
/// lines and '#' comments are skipped.
Circuit parse_circuit(std::istream& in, const GroupTable& table);
Circuit load_circuit(const std::string& path, const GroupTable& table);

/// Write a circuit as "elem <k>" lines, one gate per line, in application
/// order. The output parses back to the same circuit.
void write_circuit(std::ostream& out, const Circuit& circuit);

/// Parse an error model from a JSON document:
///   {"kind": "independent",
///    "faults": [{"lambda": "I", "prob": 0.99}, {"lambda": "Z", "prob": 0.01}]}
///   {"kind": "gate-conditional",
///    "base": [ ...faults... ],              // optional; default: no fault
///    "per-gate": [{"gate": "elem 0", "faults": [...]}, ...]}
/// Fault lambdas and gate names use the resolve_gate token forms. Listed
/// probabilities must sum to 1 per row; unlisted elements get 0.
ErrorModel parse_error_model(std::istream& in, const GroupTable& table);

/// Error model from a spec string:
///   - "none"                    point mass on the identity;
///   - "pauli-channel:<r>"       identity with 1-r, the rest spread evenly
///                               over the non-identity Pauli products;
///   - "uniform:<r>" (alias "clifford-channel:<r>")
///                               identity with 1-r, the rest spread evenly
///                               over every other group member;
///   - anything else             a path to a JSON model file.
ErrorModel load_error_model(const std::string& spec, const GroupTable& table);

/// Shortest decimal string that parses back to exactly `value` ("nan",
/// "inf", "-inf" for non-finite values). Every number the tool prints goes
/// through this, which keeps output byte-identical across runs.
std::string format_number(double value);

/// A named-column table of doubles, the unit of CSV/JSON output.
struct DataTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // each row has columns.size() cells

    /// Index of a column, or -1 when absent.
    int column(const std::string& name) const;
};

/// CSV with a mandatory header row; cells are shortest-round-trip doubles,
/// so writing and reading is lossless. write_json emits the same table as
/// {"columns": [...], "rows": [[...], ...]}.
void write_csv(std::ostream& out, const DataTable& table);
void write_json(std::ostream& out, const DataTable& table);
DataTable read_csv(std::istream& in);
DataTable load_csv(const std::string& path);

/// Per-column tally of |a-b| <= z * SE agreement.
struct ColumnAgreement {
    std::string column;
    int points = 0;   // cells compared (NaN cells are skipped)
    int within = 0;   // cells with z-score <= threshold
    double worst_z = 0.0;
};

/// Agreement between two tables on their shared value columns.
struct AgreementReport {
    double z_threshold = 3.0;
    int points = 0;
    int within = 0;
    double worst_z = 0.0;
    std::string worst_location;  // "column[row k]" of the worst z-score
    std::vector<ColumnAgreement> columns;

    double fraction_within() const {
        return points == 0 ? 0.0 : static_cast<double>(within) / points;
    }
};

/// Compare shared value columns point by point: the z-score divides the cell
/// difference by the root-sum-square of the cells' standard errors (columns
/// named "<col>_se" in either table), floored at se_floor. Grid columns "t"
/// and "delta" must agree exactly wherever both tables have them; _se
/// columns are never compared as values; NaN cells are skipped. Throws
/// std::invalid_argument on mismatched grids, differing row counts, or no
/// shared value column.
AgreementReport compare_tables(const DataTable& a,
                               const DataTable& b,
                               double z_threshold = 3.0,
                               double se_floor = 1e-6);

}  // namespace qerrac
