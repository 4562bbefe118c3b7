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

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qerrac/group.hpp"

using namespace qerrac;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string data_path(const std::string& name) {
    return std::string(QERRAC_SOURCE_DIR) + "/data/" + name;
}

doctest::Approx near(double target, double tol = 1e-12) {
    return doctest::Approx(target).scale(1).epsilon(tol);
}

/// The message of the invalid_argument thrown by `fn`, or "" if none.
template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& failure) {
        return failure.what();
    }
    return "";
}

}  // namespace

TEST_CASE("group specs build the advertised groups") {
    CHECK(make_group("pauli:1").order() == 4);
    CHECK(make_group("pauli:2").order() == 16);
    CHECK(make_group("clifford:1").order() == 24);
    CHECK(qubit_count(make_group("pauli:1")) == 1);
    CHECK(qubit_count(make_group("pauli:2")) == 2);

    CHECK_THROWS_AS(make_group("pauli"), std::invalid_argument);
    CHECK_THROWS_AS(make_group("pauli:x"), std::invalid_argument);
    CHECK_THROWS_AS(make_group("pauli:0"), std::invalid_argument);
    CHECK_THROWS_AS(make_group("pauli:5"), std::invalid_argument);
    CHECK_THROWS_AS(make_group("clifford:3"), std::invalid_argument);
    CHECK_THROWS_AS(make_group("weyl:1"), std::invalid_argument);
}

TEST_CASE("gate tokens resolve to group elements") {
    const GroupTable pauli = make_group("pauli:1");
    const GroupTable clifford = make_group("clifford:1");
    const GroupTable pauli2 = make_group("pauli:2");

    CHECK(resolve_gate(pauli, "I") == 0);
    CHECK(resolve_gate(pauli, "X") == pauli.element_of(gates::pauli_x()));
    CHECK(resolve_gate(pauli, "elem 2") == 2);
    CHECK(resolve_gate(pauli, "X 0") == resolve_gate(pauli, "X"));
    CHECK(resolve_gate(pauli, "  Z   0 ") == pauli.element_of(gates::pauli_z()));

    CHECK(resolve_gate(clifford, "H") == clifford.element_of(gates::hadamard()));
    CHECK(resolve_gate(clifford, "S") == clifford.element_of(gates::phase_s()));

    // Pauli strings put their first letter on qubit 0.
    const CMatrix xz = CMatrix(gates::on_qubit(gates::pauli_x(), 0, 2) *
                               gates::on_qubit(gates::pauli_z(), 1, 2));
    CHECK(resolve_gate(pauli2, "XZ") == pauli2.element_of(xz));
    CHECK(resolve_gate(pauli2, "IX") == resolve_gate(pauli2, "X 1"));
    CHECK(resolve_gate(pauli2, "II") == 0);

    // Two-qubit gate arguments are validated before the membership lookup.
    CHECK_THROWS_AS(resolve_gate(pauli2, "CNOT 0 0"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli2, "CNOT 0 2"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli2, "CNOT 0"), std::invalid_argument);
    // CNOT is not a Pauli product, so membership fails on a Pauli group.
    CHECK(thrown_message([&] { resolve_gate(pauli2, "CNOT 0 1"); })
              .find("not a member") != std::string::npos);
    CHECK_THROWS_AS(resolve_gate(pauli, "H"), std::invalid_argument);

    CHECK_THROWS_AS(resolve_gate(pauli, "W"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli, ""), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli, "elem"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli, "elem 4"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli, "elem -1"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli, "X 1"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli2, "X"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli2, "XZY"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_gate(pauli2, "XQ"), std::invalid_argument);
}

TEST_CASE("circuit files parse with comments and round-trip") {
    const GroupTable clifford = make_group("clifford:1");
    std::istringstream in(
        "# four gates\n"
        "H\n"
        "\n"
        "X 0   # inline comment\n"
        "elem 3\n"
        "Z\n");
    const Circuit circuit = parse_circuit(in, clifford);
    REQUIRE(circuit.tau() == 4);
    CHECK(circuit.gates[0] == resolve_gate(clifford, "H"));
    CHECK(circuit.gates[1] == resolve_gate(clifford, "X"));
    CHECK(circuit.gates[2] == 3);
    CHECK(circuit.gates[3] == resolve_gate(clifford, "Z"));

    // Errors carry the line number.
    std::istringstream bad("H\nQQ\n");
    CHECK(thrown_message([&] { parse_circuit(bad, clifford); }).find("line 2") !=
          std::string::npos);

    std::ostringstream out;
    write_circuit(out, circuit);
    std::istringstream back(out.str());
    CHECK(parse_circuit(back, clifford).gates == circuit.gates);

    CHECK_THROWS_AS(load_circuit("/nonexistent/circuit.txt", clifford),
                    std::invalid_argument);

    // The repeated-(H,X,Y,Z) fixture: 100 gates cycling through the four names.
    const Circuit fixture = load_circuit(data_path("circuit_hxyz25.txt"), clifford);
    REQUIRE(fixture.tau() == 100);
    for (int k = 0; k < 100; k += 4) {
        CHECK(fixture.gates[k] == resolve_gate(clifford, "H"));
        CHECK(fixture.gates[k + 1] == resolve_gate(clifford, "X"));
        CHECK(fixture.gates[k + 2] == resolve_gate(clifford, "Y"));
        CHECK(fixture.gates[k + 3] == resolve_gate(clifford, "Z"));
    }
}

TEST_CASE("error models parse from JSON and spec strings") {
    const GroupTable pauli = make_group("pauli:1");
    const GroupTable clifford = make_group("clifford:1");
    const int z = resolve_gate(pauli, "Z");

    std::istringstream independent(
        R"({"kind": "independent",
            "faults": [{"lambda": "I", "prob": 0.99},
                       {"lambda": "Z", "prob": 0.01}]})");
    const ErrorModel iz = parse_error_model(independent, pauli);
    CHECK_FALSE(iz.is_gate_conditional());
    CHECK(iz.prob(0, 0) == 0.99);
    CHECK(iz.prob(z, 0) == 0.01);
    CHECK(iz.prob(resolve_gate(pauli, "X"), 0) == 0.0);

    std::istringstream conditional(
        R"({"kind": "gate-conditional",
            "per-gate": [{"gate": "X",
                          "faults": [{"lambda": "I", "prob": 0.8},
                                     {"lambda": "Y", "prob": 0.2}]}]})");
    const ErrorModel gc = parse_error_model(conditional, pauli);
    CHECK(gc.is_gate_conditional());
    const int x = resolve_gate(pauli, "X");
    CHECK(gc.prob(0, x) == 0.8);
    CHECK(gc.prob(resolve_gate(pauli, "Y"), x) == 0.2);
    // Gates without a row fall back to the fault-free default base.
    CHECK(gc.prob(0, z) == 1.0);

    const ErrorModel fixture = load_error_model(data_path("single_qubit_iz.json"), pauli);
    CHECK(fixture.prob(0, 0) == 0.99);
    CHECK(fixture.prob(z, 0) == 0.01);

    const ErrorModel gate_dependent =
        load_error_model(data_path("clifford1_gate_dependent_pauli.json"), clifford);
    CHECK(gate_dependent.is_gate_conditional());
    // Every row sums to 1 (the parser leaves validation to the model, so a
    // loaded model is already checked); spot the first row's exact thirds.
    CHECK(gate_dependent.prob(0, 0) == 0.99);
    CHECK(gate_dependent.prob(resolve_gate(clifford, "X"), 0) == near(10.0 / 3000.0, 1e-15));

    // Spec strings.
    const ErrorModel none = load_error_model("none", pauli);
    CHECK(none.prob(0, 0) == 1.0);
    const ErrorModel chan = load_error_model("pauli-channel:0.2", pauli);
    CHECK(chan.prob(0, 0) == near(0.8, 1e-15));
    CHECK(chan.prob(1, 0) == near(0.2 / 3.0, 1e-15));
    const ErrorModel unif = load_error_model("uniform:0.12", clifford);
    CHECK(unif.prob(0, 0) == near(0.88, 1e-15));
    CHECK(unif.prob(7, 0) == near(0.12 / 23.0, 1e-15));
    const ErrorModel alias = load_error_model("clifford-channel:0.12", clifford);
    CHECK(alias.prob(7, 0) == unif.prob(7, 0));

    // Malformed documents.
    const auto parse_str = [&](const std::string& text) {
        std::istringstream in(text);
        return parse_error_model(in, pauli);
    };
    CHECK_THROWS_AS(parse_str("{"), std::invalid_argument);
    CHECK_THROWS_AS(parse_str(R"({"faults": []})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_str(R"({"kind": "mystery", "faults": []})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_str(R"({"kind": "independent", "faults": []})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_str(R"({"kind": "independent",
                      "faults": [{"lambda": "I", "prob": 0.5},
                                 {"lambda": "I", "prob": 0.5}]})"),
        std::invalid_argument);
    CHECK_THROWS_AS(parse_str(R"({"kind": "independent",
                                  "faults": [{"lambda": "I"}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_str(R"({"kind": "independent",
                                  "faults": [{"lambda": "I", "prob": "x"}]})"),
                    std::invalid_argument);
    // A row that does not sum to 1 fails the model's own validation.
    CHECK_THROWS_AS(parse_str(R"({"kind": "independent",
                                  "faults": [{"lambda": "I", "prob": 0.5}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_str(R"({"kind": "gate-conditional",
                      "per-gate": [{"gate": "X", "faults": [{"lambda": "I", "prob": 1.0}]},
                                   {"gate": "X", "faults": [{"lambda": "I", "prob": 1.0}]}]})"),
        std::invalid_argument);

    CHECK_THROWS_AS(load_error_model("pauli-channel:abc", pauli), std::invalid_argument);
    CHECK_THROWS_AS(load_error_model("/nonexistent/model.json", pauli),
                    std::invalid_argument);
}

TEST_CASE("CSV tables round-trip bitwise") {
    DataTable table;
    table.columns = {"t", "p_error"};
    table.rows = {{0.0, 0.1},
                  {1.0, kNaN},
                  {2.0, 1e-17},
                  {3.0, 1.0 / 3.0},
                  {4.0, std::numeric_limits<double>::infinity()},
                  {5.0, -2.5e300}};

    std::ostringstream out;
    write_csv(out, table);
    std::istringstream in(out.str());
    const DataTable back = read_csv(in);
    CHECK(back.columns == table.columns);
    REQUIRE(back.rows.size() == table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const double a = table.rows[r][c];
            const double b = back.rows[r][c];
            if (std::isnan(a)) {
                CHECK(std::isnan(b));
            } else {
                CHECK(a == b);
            }
        }
    }
    CHECK(table.column("t") == 0);
    CHECK(table.column("p_error") == 1);
    CHECK(table.column("missing") == -1);

    // Whitespace around cells is tolerated.
    std::istringstream spaced("a , b\n 1 , 2 \n");
    const DataTable padded = read_csv(spaced);
    CHECK(padded.columns == std::vector<std::string>{"a", "b"});
    CHECK(padded.rows[0] == std::vector<double>{1.0, 2.0});

    const auto read_str = [](const std::string& text) {
        std::istringstream stream(text);
        return read_csv(stream);
    };
    CHECK_THROWS_AS(read_str("a,b\n1\n"), std::invalid_argument);
    CHECK_THROWS_AS(read_str("a,b\n1,zebra\n"), std::invalid_argument);
    CHECK_THROWS_AS(read_str("a,,c\n"), std::invalid_argument);
    CHECK_THROWS_AS(read_str(""), std::invalid_argument);

    // The JSON rendering carries the same cells (non-finite ones as null).
    std::ostringstream json_out;
    write_json(json_out, table);
    const nlohmann::json doc = nlohmann::json::parse(json_out.str());
    CHECK(doc["columns"].get<std::vector<std::string>>() == table.columns);
    CHECK(doc["rows"].size() == table.rows.size());
    CHECK(doc["rows"][0][1].get<double>() == 0.1);
    CHECK(doc["rows"][1][1].is_null());
}

TEST_CASE("agreement reports tally z-scores per column") {
    DataTable analytic;
    analytic.columns = {"t", "p_error"};
    DataTable empirical;
    empirical.columns = {"t", "p_error", "p_error_se"};
    for (int k = 0; k < 10; ++k) {
        const double value = 0.05 * k;
        analytic.rows.push_back({static_cast<double>(k), value});
        // Two points sit 10 standard errors off; the rest within one.
        const double offset = (k == 3 || k == 7) ? 0.10 : 0.005;
        empirical.rows.push_back({static_cast<double>(k), value + offset, 0.01});
    }

    const AgreementReport report = compare_tables(analytic, empirical);
    CHECK(report.points == 10);
    CHECK(report.within == 8);
    CHECK(report.fraction_within() == near(0.8, 1e-15));
    CHECK(report.worst_z == near(10.0, 1e-9));
    CHECK(report.worst_location.find("p_error") != std::string::npos);
    REQUIRE(report.columns.size() == 1);
    CHECK(report.columns[0].column == "p_error");
    CHECK(report.columns[0].within == 8);

    // A table always agrees with itself completely.
    const AgreementReport self = compare_tables(analytic, analytic);
    CHECK(self.points == 10);
    CHECK(self.within == 10);
    CHECK(self.fraction_within() == 1.0);

    // NaN cells are skipped, not failed.
    DataTable censored = empirical;
    censored.rows[2][1] = kNaN;
    CHECK(compare_tables(analytic, censored).points == 9);

    // Standard errors combine in quadrature across the two tables.
    DataTable left;
    left.columns = {"t", "v", "v_se"};
    left.rows = {{0.0, 0.0, 0.03}};
    DataTable right;
    right.columns = {"t", "v", "v_se"};
    right.rows = {{0.0, 0.05, 0.04}};
    CHECK(compare_tables(left, right).worst_z == near(1.0, 1e-12));

    // Grid or shape mismatches are errors, not disagreements.
    DataTable shifted = empirical;
    shifted.rows[4][0] = 99.0;
    CHECK_THROWS_AS(compare_tables(analytic, shifted), std::invalid_argument);
    DataTable shorter = empirical;
    shorter.rows.pop_back();
    CHECK_THROWS_AS(compare_tables(analytic, shorter), std::invalid_argument);
    DataTable renamed = empirical;
    renamed.columns[1] = "q_error";
    renamed.columns[2] = "q_error_se";
    CHECK_THROWS_AS(compare_tables(analytic, renamed), std::invalid_argument);

    // The "delta" grid column is matched exactly when both tables have it.
    DataTable with_delta = analytic;
    with_delta.columns = {"t", "delta", "p_error"};
    for (auto& row : with_delta.rows) {
        row = {row[0], 0.5, row[1]};
    }
    DataTable other_delta = with_delta;
    other_delta.rows[0][1] = 0.25;
    CHECK_THROWS_AS(compare_tables(with_delta, other_delta), std::invalid_argument);
}
