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

#include "qerrac/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "json.hpp"

namespace qerrac {

namespace {

std::string trimmed(std::string_view text) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin])) {
        ++begin;
    }
    while (end > begin && is_space(text[end - 1])) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i > start) {
            words.push_back(text.substr(start, i - start));
        }
    }
    return words;
}

int parse_int(const std::string& text, const std::string& context) {
    int value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument(context + ": expected an integer, got '" + text + "'");
    }
    return value;
}

double parse_double(const std::string& text, const std::string& context) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument(context + ": expected a number, got '" + text + "'");
    }
    return value;
}

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    (void)ec;  // 64 bytes always suffice for a double
    return std::string(buffer, ptr);
}

const CMatrix* one_qubit_gate(const std::string& name) {
    static const std::unordered_map<std::string, CMatrix> kGates = {
        {"I", gates::identity(2)}, {"X", gates::pauli_x()}, {"Y", gates::pauli_y()},
        {"Z", gates::pauli_z()},   {"H", gates::hadamard()}, {"S", gates::phase_s()},
    };
    const auto it = kGates.find(name);
    return it == kGates.end() ? nullptr : &it->second;
}

int lookup_element(const GroupTable& table, const CMatrix& m, const std::string& token) {
    try {
        return table.element_of(m);
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("gate '" + token + "' is not a member of group " +
                                    table.name());
    }
}

/// One row of fault probabilities over the group, from a JSON array of
/// {"lambda": <gate token>, "prob": <number>} objects.
std::vector<double> parse_fault_row(const nlohmann::json& faults, const GroupTable& table) {
    if (!faults.is_array() || faults.empty()) {
        throw std::invalid_argument("error model: 'faults' must be a nonempty array");
    }
    std::vector<double> probs(static_cast<std::size_t>(table.order()), 0.0);
    std::vector<std::uint8_t> seen(probs.size(), 0);
    for (const nlohmann::json& entry : faults) {
        if (!entry.is_object() || !entry.contains("lambda") || !entry.contains("prob")) {
            throw std::invalid_argument(
                "error model: each fault needs a 'lambda' and a 'prob'");
        }
        if (!entry["lambda"].is_string() || !entry["prob"].is_number()) {
            throw std::invalid_argument(
                "error model: 'lambda' must be a string and 'prob' a number");
        }
        const std::string token = entry["lambda"].get<std::string>();
        const int element = resolve_gate(table, token);
        if (seen[static_cast<std::size_t>(element)]) {
            throw std::invalid_argument("error model: duplicate fault '" + token + "'");
        }
        seen[static_cast<std::size_t>(element)] = 1;
        probs[static_cast<std::size_t>(element)] = entry["prob"].get<double>();
    }
    return probs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Groups and gates
// ---------------------------------------------------------------------------

GroupTable make_group(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("group spec '" + spec +
                                    "' is not of the form <family>:<qubits>");
    }
    const std::string family = spec.substr(0, colon);
    const int qubits = parse_int(spec.substr(colon + 1), "group spec '" + spec + "'");
    if (qubits < 1) {
        throw std::invalid_argument("group spec '" + spec + "': qubits must be >= 1");
    }
    if (family == "pauli") {
        if (qubits > 4) {
            throw std::invalid_argument("group spec '" + spec +
                                        "': pauli groups are supported up to 4 qubits");
        }
        return generate_pauli_group(qubits);
    }
    if (family == "clifford") {
        if (qubits > 2) {
            throw std::invalid_argument(
                "group spec '" + spec +
                "': clifford groups are supported up to 2 qubits (the 2-qubit table "
                "already has 11520 elements)");
        }
        return generate_clifford_group(qubits);
    }
    throw std::invalid_argument("group spec '" + spec + "': unknown family '" + family +
                                "' (use pauli or clifford)");
}

int qubit_count(const GroupTable& table) {
    const auto dim = table.element(0).rows();
    int qubits = 0;
    while ((Eigen::Index{1} << (qubits + 1)) <= dim) {
        ++qubits;
    }
    if ((Eigen::Index{1} << qubits) != dim) {
        throw std::invalid_argument("group dimension is not a power of two");
    }
    return qubits;
}

int resolve_gate(const GroupTable& table, const std::string& token) {
    const std::vector<std::string> words = split_words(token);
    if (words.empty()) {
        throw std::invalid_argument("empty gate token");
    }
    const int qubits = qubit_count(table);
    const std::string& name = words[0];

    if (name == "elem") {
        if (words.size() != 2) {
            throw std::invalid_argument("gate '" + token + "': use 'elem <index>'");
        }
        const int index = parse_int(words[1], "gate '" + token + "'");
        if (index < 0 || index >= table.order()) {
            throw std::invalid_argument("gate '" + token + "': index out of range for group " +
                                        table.name() + " of order " +
                                        std::to_string(table.order()));
        }
        return index;
    }

    if (name == "CNOT" || name == "CZ") {
        if (words.size() != 3) {
            throw std::invalid_argument("gate '" + token + "': use '" + name +
                                        " <qubit> <qubit>'");
        }
        const int a = parse_int(words[1], "gate '" + token + "'");
        const int b = parse_int(words[2], "gate '" + token + "'");
        if (a < 0 || a >= qubits || b < 0 || b >= qubits || a == b) {
            throw std::invalid_argument("gate '" + token + "': qubits must be distinct and in [0, " +
                                        std::to_string(qubits) + ")");
        }
        if (name == "CNOT") {
            return lookup_element(table, gates::cnot(a, b, qubits), token);
        }
        if (qubits != 2) {
            throw std::invalid_argument("gate '" + token + "': CZ needs a two-qubit group");
        }
        return lookup_element(table, gates::cz(), token);
    }

    if (words.size() == 2) {
        const CMatrix* m = one_qubit_gate(name);
        if (m == nullptr) {
            throw std::invalid_argument("gate '" + token + "': unknown gate name '" + name +
                                        "'");
        }
        const int qubit = parse_int(words[1], "gate '" + token + "'");
        if (qubit < 0 || qubit >= qubits) {
            throw std::invalid_argument("gate '" + token + "': qubit out of range [0, " +
                                        std::to_string(qubits) + ")");
        }
        return lookup_element(table, gates::on_qubit(*m, qubit, qubits), token);
    }

    if (words.size() != 1) {
        throw std::invalid_argument("gate '" + token + "': unrecognized form");
    }

    if (const CMatrix* m = one_qubit_gate(name)) {
        if (qubits != 1) {
            throw std::invalid_argument("gate '" + token + "': specify a qubit, e.g. '" + name +
                                        " 0'");
        }
        return lookup_element(table, *m, token);
    }

    // A full Pauli string, leftmost letter on qubit 0.
    if (static_cast<int>(name.size()) == qubits) {
        CMatrix product = gates::identity(1 << qubits);
        for (int q = 0; q < qubits; ++q) {
            const std::string letter(1, name[static_cast<std::size_t>(q)]);
            const CMatrix* m = one_qubit_gate(letter);
            if (m == nullptr || (letter != "I" && letter != "X" && letter != "Y" &&
                                 letter != "Z")) {
                throw std::invalid_argument("gate '" + token +
                                            "': Pauli strings use letters I, X, Y, Z");
            }
            product = CMatrix(product * gates::on_qubit(*m, q, qubits));
        }
        return lookup_element(table, product, token);
    }

    throw std::invalid_argument("gate '" + token + "': unknown gate name '" + name + "'");
}

// ---------------------------------------------------------------------------
// Circuit files
// ---------------------------------------------------------------------------

Circuit parse_circuit(std::istream& in, const GroupTable& table) {
    Circuit circuit;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        const std::string token = trimmed(line);
        if (token.empty()) {
            continue;
        }
        try {
            circuit.gates.push_back(resolve_gate(table, token));
        } catch (const std::invalid_argument& failure) {
            throw std::invalid_argument("circuit line " + std::to_string(line_number) + ": " +
                                        failure.what());
        }
    }
    return circuit;
}

Circuit load_circuit(const std::string& path, const GroupTable& table) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open circuit file '" + path + "'");
    }
    return parse_circuit(in, table);
}

void write_circuit(std::ostream& out, const Circuit& circuit) {
    for (int gate : circuit.gates) {
        out << "elem " << gate << '\n';
    }
}

// ---------------------------------------------------------------------------
// Error models
// ---------------------------------------------------------------------------

ErrorModel parse_error_model(std::istream& in, const GroupTable& table) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& failure) {
        throw std::invalid_argument(std::string("error model: invalid JSON: ") +
                                    failure.what());
    }
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        throw std::invalid_argument("error model: top level needs a string 'kind'");
    }
    const std::string kind = doc["kind"].get<std::string>();

    if (kind == "independent") {
        if (!doc.contains("faults")) {
            throw std::invalid_argument("error model: independent models need 'faults'");
        }
        return ErrorModel::independent(parse_fault_row(doc["faults"], table));
    }

    if (kind == "gate-conditional") {
        std::vector<double> base(static_cast<std::size_t>(table.order()), 0.0);
        base[0] = 1.0;  // default: gates without a row are fault-free
        if (doc.contains("base")) {
            base = parse_fault_row(doc["base"], table);
        }
        if (!doc.contains("per-gate") || !doc["per-gate"].is_array()) {
            throw std::invalid_argument(
                "error model: gate-conditional models need a 'per-gate' array");
        }
        std::unordered_map<int, std::vector<double>> per_gate;
        for (const nlohmann::json& entry : doc["per-gate"]) {
            if (!entry.is_object() || !entry.contains("gate") || !entry["gate"].is_string() ||
                !entry.contains("faults")) {
                throw std::invalid_argument(
                    "error model: each per-gate row needs a 'gate' and its 'faults'");
            }
            const std::string token = entry["gate"].get<std::string>();
            const int gate = resolve_gate(table, token);
            if (per_gate.count(gate) != 0) {
                throw std::invalid_argument("error model: duplicate per-gate row for '" +
                                            token + "'");
            }
            per_gate.emplace(gate, parse_fault_row(entry["faults"], table));
        }
        return ErrorModel::gate_conditional(std::move(base), std::move(per_gate));
    }

    throw std::invalid_argument("error model: unknown kind '" + kind +
                                "' (use independent or gate-conditional)");
}

ErrorModel load_error_model(const std::string& spec, const GroupTable& table) {
    if (spec == "none") {
        return ErrorModel::none(table);
    }
    const auto rate_after = [&](std::string_view prefix) {
        return parse_double(spec.substr(prefix.size()), "error model '" + spec + "'");
    };
    if (spec.rfind("pauli-channel:", 0) == 0) {
        return ErrorModel::depolarizing(table, rate_after("pauli-channel:"));
    }
    if (spec.rfind("uniform:", 0) == 0) {
        return ErrorModel::uniform_over_group(table, rate_after("uniform:"));
    }
    if (spec.rfind("clifford-channel:", 0) == 0) {
        return ErrorModel::uniform_over_group(table, rate_after("clifford-channel:"));
    }
    std::ifstream in(spec);
    if (!in) {
        throw std::invalid_argument("cannot open error model file '" + spec + "'");
    }
    return parse_error_model(in, table);
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

std::string format_number(double value) { return format_double(value); }

int DataTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

void write_csv(std::ostream& out, const DataTable& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i == 0 ? "" : ",") << table.columns[i];
    }
    out << '\n';
    for (const std::vector<double>& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i == 0 ? "" : ",") << format_double(row[i]);
        }
        out << '\n';
    }
}

void write_json(std::ostream& out, const DataTable& table) {
    nlohmann::json doc;
    doc["columns"] = table.columns;
    doc["rows"] = table.rows;  // non-finite cells render as null
    out << doc.dump(1) << '\n';
}

DataTable read_csv(std::istream& in) {
    DataTable table;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trimmed(line).empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(trimmed(line.substr(start, comma - start)));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (table.columns.empty()) {
            for (const std::string& cell : cells) {
                if (cell.empty()) {
                    throw std::invalid_argument("CSV line 1: empty column name");
                }
            }
            table.columns = cells;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw std::invalid_argument("CSV line " + std::to_string(line_number) + ": got " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(table.columns.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string& cell : cells) {
            row.push_back(parse_double(cell, "CSV line " + std::to_string(line_number)));
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) {
        throw std::invalid_argument("CSV input has no header row");
    }
    return table;
}

DataTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open CSV file '" + path + "'");
    }
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

namespace {

bool is_se_column(const std::string& name) {
    return name.size() > 3 && name.compare(name.size() - 3, 3, "_se") == 0;
}

bool is_grid_column(const std::string& name) { return name == "t" || name == "delta"; }

}  // namespace

AgreementReport compare_tables(const DataTable& a,
                               const DataTable& b,
                               double z_threshold,
                               double se_floor) {
    if (a.rows.size() != b.rows.size()) {
        throw std::invalid_argument("compare: row counts differ (" +
                                    std::to_string(a.rows.size()) + " vs " +
                                    std::to_string(b.rows.size()) + ")");
    }
    for (const char* grid : {"t", "delta"}) {
        const int ca = a.column(grid);
        const int cb = b.column(grid);
        if (ca < 0 || cb < 0) {
            continue;
        }
        for (std::size_t k = 0; k < a.rows.size(); ++k) {
            if (a.rows[k][static_cast<std::size_t>(ca)] !=
                b.rows[k][static_cast<std::size_t>(cb)]) {
                throw std::invalid_argument("compare: grids differ in column '" +
                                            std::string(grid) + "' at row " +
                                            std::to_string(k + 1));
            }
        }
    }

    AgreementReport report;
    report.z_threshold = z_threshold;
    for (const std::string& name : a.columns) {
        if (is_grid_column(name) || is_se_column(name)) {
            continue;
        }
        const int ca = a.column(name);
        const int cb = b.column(name);
        if (cb < 0) {
            continue;
        }
        const int sa = a.column(name + "_se");
        const int sb = b.column(name + "_se");
        ColumnAgreement tally;
        tally.column = name;
        for (std::size_t k = 0; k < a.rows.size(); ++k) {
            const double va = a.rows[k][static_cast<std::size_t>(ca)];
            const double vb = b.rows[k][static_cast<std::size_t>(cb)];
            if (std::isnan(va) || std::isnan(vb)) {
                continue;
            }
            const double ea = sa < 0 ? 0.0 : a.rows[k][static_cast<std::size_t>(sa)];
            const double eb = sb < 0 ? 0.0 : b.rows[k][static_cast<std::size_t>(sb)];
            const double se = std::max(std::sqrt(ea * ea + eb * eb), se_floor);
            const double z = std::abs(va - vb) / se;
            ++tally.points;
            if (z <= z_threshold) {
                ++tally.within;
            }
            if (z > tally.worst_z) {
                tally.worst_z = z;
            }
            if (z > report.worst_z) {
                report.worst_z = z;
                report.worst_location = name + "[row " + std::to_string(k + 1) + "]";
            }
        }
        report.points += tally.points;
        report.within += tally.within;
        report.columns.push_back(std::move(tally));
    }
    if (report.columns.empty()) {
        throw std::invalid_argument("compare: the tables share no value column");
    }
    return report;
}

}  // namespace qerrac
