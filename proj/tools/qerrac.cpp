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

// qerrac — error-accumulation analysis for circuits over finite gate groups.
//
// One binary, eight batch subcommands:
//   analyze-random   exact curves for uniformly (or otherwise) drawn gates
//   analyze-fixed    exact curves along a fixed circuit
//   simulate         Monte Carlo counterpart of the two analyses
//   continuous       single-qubit angular-kick walk (series + oracle)
//   anneal           simulated-annealing circuit optimization
//   reachable        count the orbit of an initial state under a group
//   group-info       order/generators of a built-in group, optional JSON dump
//   compare          z-score agreement report between two result tables
//
// Every run is reproducible byte for byte given the same configuration and
// seed, independent of the parallelism level. Data tables go to --out (or
// stdout) as CSV or JSON; human-readable summary lines go to stdout when the
// table is in a file and to stderr when the table owns stdout. Exit codes:
// 0 success, 2 configuration error, 3 numerical-health warning under
// --strict.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qerrac/anneal.hpp"
#include "qerrac/chain.hpp"
#include "qerrac/continuous.hpp"
#include "qerrac/group.hpp"
#include "qerrac/io.hpp"
#include "qerrac/montecarlo.hpp"
#include "qerrac/states.hpp"

using namespace qerrac;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericsError = 3;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Shared plumbing

/// Worker-thread count after applying the QERR_THREADS cap. A request of 0
/// asks for hardware concurrency, which the cap also limits. Throws
/// std::invalid_argument when the variable is set to anything but a positive
/// integer.
int resolve_threads(int requested) {
    const char* env = std::getenv("QERR_THREADS");
    if (env == nullptr) {
        return requested;
    }
    int cap = 0;
    try {
        std::size_t used = 0;
        cap = std::stoi(env, &used);
        if (used != std::string(env).size()) {
            cap = 0;
        }
    } catch (const std::exception&) {
        cap = 0;
    }
    if (cap < 1) {
        throw std::invalid_argument("QERR_THREADS must be a positive integer, got '" +
                                    std::string(env) + "'");
    }
    if (requested == 0) {
        return cap;
    }
    return std::min(requested, cap);
}

/// Parse an initial-state argument: either the ket grammar understood by
/// parse_state ("|0>", "sqrt(7/10)|0>+sqrt(3/10)|1>") or a JSON amplitude
/// list like [[0.6,0],[0,0.8]] (entries are [re,im] pairs or bare reals).
PureState parse_state_arg(const std::string& text) {
    const std::size_t first = text.find_first_not_of(" \t");
    if (first == std::string::npos || text[first] != '[') {
        return parse_state(text);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& failure) {
        throw std::invalid_argument(std::string("state amplitude list: ") + failure.what());
    }
    if (!doc.is_array() || doc.empty()) {
        throw std::invalid_argument("state amplitude list must be a nonempty JSON array");
    }
    CVector amplitudes(static_cast<Eigen::Index>(doc.size()));
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const nlohmann::json& entry = doc[i];
        if (entry.is_number()) {
            amplitudes[static_cast<Eigen::Index>(i)] = entry.get<double>();
        } else if (entry.is_array() && entry.size() == 2 && entry[0].is_number() &&
                   entry[1].is_number()) {
            amplitudes[static_cast<Eigen::Index>(i)] =
                std::complex<double>(entry[0].get<double>(), entry[1].get<double>());
        } else {
            throw std::invalid_argument(
                "state amplitude entries must be numbers or [re,im] pairs");
        }
    }
    return PureState(std::move(amplitudes));
}

/// Parse a gate-distribution spec: "uniform", "point:<gate token>", or a
/// path to a JSON array of per-element probabilities.
GateDistribution parse_kappa(const std::string& spec, const GroupTable& table) {
    if (spec == "uniform") {
        return GateDistribution::uniform(table.order());
    }
    if (spec.rfind("point:", 0) == 0) {
        return GateDistribution::point_mass(table.order(),
                                            resolve_gate(table, spec.substr(6)));
    }
    std::ifstream in(spec);
    if (!in) {
        throw std::invalid_argument("gate distribution '" + spec +
                                    "' is neither 'uniform', 'point:<gate>', nor a "
                                    "readable JSON file");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& failure) {
        throw std::invalid_argument("gate distribution file '" + spec +
                                    "': " + failure.what());
    }
    if (!doc.is_array()) {
        throw std::invalid_argument("gate distribution file '" + spec +
                                    "' must hold a JSON array of probabilities");
    }
    std::vector<double> probs;
    probs.reserve(doc.size());
    for (const nlohmann::json& entry : doc) {
        if (!entry.is_number()) {
            throw std::invalid_argument("gate distribution file '" + spec +
                                        "' must hold numbers only");
        }
        probs.push_back(entry.get<double>());
    }
    if (static_cast<int>(probs.size()) != table.order()) {
        throw std::invalid_argument("gate distribution file '" + spec + "' lists " +
                                    std::to_string(probs.size()) + " probabilities for a " +
                                    std::to_string(table.order()) + "-element group");
    }
    return GateDistribution::from_probabilities(std::move(probs));
}

/// Parse a kick-model file: a JSON array of {"angle","weight"} atoms
/// (one mixture used every step), or {"steps": [[atoms...], ...]} for an
/// explicit per-step list of mixtures. Angles are radians in [0, pi].
KickModel parse_kick_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open kick-model file: " + path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& failure) {
        throw std::invalid_argument("kick-model file '" + path + "': " + failure.what());
    }
    const auto parse_atoms = [&path](const nlohmann::json& atoms) {
        if (!atoms.is_array() || atoms.empty()) {
            throw std::invalid_argument("kick-model file '" + path +
                                        "': each mixture must be a nonempty array");
        }
        std::vector<std::pair<double, double>> parsed;
        parsed.reserve(atoms.size());
        for (const nlohmann::json& atom : atoms) {
            if (!atom.is_object() || !atom.contains("angle") || !atom["angle"].is_number()) {
                throw std::invalid_argument("kick-model file '" + path +
                                            "': atoms need a numeric \"angle\"");
            }
            double weight = 1.0;
            if (atom.contains("weight")) {
                if (!atom["weight"].is_number()) {
                    throw std::invalid_argument("kick-model file '" + path +
                                                "': \"weight\" must be numeric");
                }
                weight = atom["weight"].get<double>();
            } else if (atoms.size() != 1) {
                throw std::invalid_argument("kick-model file '" + path +
                                            "': multi-atom mixtures need explicit weights");
            }
            parsed.emplace_back(atom["angle"].get<double>(), weight);
        }
        return KickModel::mixture(std::move(parsed));
    };
    if (doc.is_array()) {
        return parse_atoms(doc);
    }
    if (doc.is_object() && doc.contains("steps") && doc["steps"].is_array() &&
        !doc["steps"].empty()) {
        std::vector<KickModel> steps;
        steps.reserve(doc["steps"].size());
        for (const nlohmann::json& step : doc["steps"]) {
            steps.push_back(parse_atoms(step));
        }
        return KickModel::per_step(std::move(steps));
    }
    throw std::invalid_argument("kick-model file '" + path +
                                "' must be an atom array or {\"steps\": [[...], ...]}");
}

/// Sorted ascending, deduplicated, all within [0,1].
std::vector<double> normalize_deltas(std::vector<double> deltas) {
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
    for (const double delta : deltas) {
        if (!(delta >= 0.0 && delta <= 1.0)) {
            throw std::invalid_argument("--delta values must lie in [0,1], got " +
                                        format_number(delta));
        }
    }
    return deltas;
}

/// Where the data table and the summary lines go. The summary never shares a
/// stream with the table: stderr while the table owns stdout, stdout once
/// the table is in a file.
struct Output {
    std::ofstream file;
    std::ostream* table = &std::cout;
    std::ostream* summary = &std::cerr;
    std::string path;  // empty when the table goes to stdout
};

/// Table destination options shared by the data-emitting subcommands.
struct TableOptions {
    std::string out;
    std::string format = "csv";
    bool gnuplot = false;

    void attach(CLI::App& sub) {
        sub.add_option("--out", out, "Write the data table to this path (default: stdout)");
        sub.add_option("--format", format, "Table format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        sub.add_flag("--gnuplot", gnuplot,
                     "Also write <out>.gp, a gnuplot script for the table "
                     "(requires --out and --format csv)");
    }

    Output open() const {
        Output output;
        output.path = (out == "-") ? std::string() : out;
        if (gnuplot && output.path.empty()) {
            throw std::invalid_argument("--gnuplot requires --out");
        }
        if (gnuplot && format != "csv") {
            throw std::invalid_argument("--gnuplot requires --format csv");
        }
        if (!output.path.empty()) {
            output.file.open(output.path);
            if (!output.file) {
                throw std::invalid_argument("cannot open output file: " + output.path);
            }
            output.table = &output.file;
            output.summary = &std::cout;
        }
        return output;
    }

    /// Write the table and, when asked, the companion plot script that draws
    /// every non-grid column against `x_column`.
    void emit(Output& output, const DataTable& table, const std::string& x_column) const {
        if (format == "json") {
            write_json(*output.table, table);
        } else {
            write_csv(*output.table, table);
        }
        if (!gnuplot) {
            return;
        }
        std::vector<std::string> value_columns;
        for (const std::string& column : table.columns) {
            if (column != x_column && column != "delta") {
                value_columns.push_back(column);
            }
        }
        const std::string script_path = output.path + ".gp";
        std::ofstream script(script_path);
        if (!script) {
            throw std::invalid_argument("cannot open gnuplot script: " + script_path);
        }
        script << "# Companion plot for " << output.path << ". Run: gnuplot -p "
               << script_path << "\n"
               << "# Paths are relative to the directory the table was written from.\n"
               << "set datafile separator ','\n"
               << "set xlabel '" << x_column << "'\n"
               << "set key outside\n"
               << "plot for [c in \"";
        for (std::size_t i = 0; i < value_columns.size(); ++i) {
            script << (i == 0 ? "" : " ") << value_columns[i];
        }
        script << "\"] '" << output.path << "' using (column('" << x_column
               << "')):(column(c)) with lines title c\n";
    }
};

/// Report recorded probability excursions to stderr; the return value is the
/// process exit code honoring --strict.
int finish_health(const NumericsHealth& health, bool strict) {
    if (health.warning_count == 0) {
        return kOk;
    }
    std::cerr << "numerics: " << health.warning_count
              << " probability excursion(s) beyond "
              << format_number(NumericsHealth::kExcursionTolerance) << ", worst "
              << format_number(health.worst_excursion) << "\n";
    for (const std::string& note : health.notes) {
        std::cerr << "  " << note << "\n";
    }
    if (strict) {
        std::cerr << "escalating to exit status 3 (--strict)\n";
        return kNumericsError;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// analyze-random

struct AnalyzeRandomOptions {
    std::string group;
    std::string state;
    std::string state_faulty;
    std::string kappa = "uniform";
    std::string error;
    std::vector<double> deltas;
    std::vector<double> gammas;
    int tau = 100;
    double p_norm = 1.0;
    bool strict = false;
    TableOptions table;
};

int run_analyze_random(const AnalyzeRandomOptions& opt) {
    const GroupTable table = make_group(opt.group);
    const PureState psi0 = parse_state_arg(opt.state);
    const PureState psi0_faulty =
        opt.state_faulty.empty() ? psi0 : parse_state_arg(opt.state_faulty);
    const GateDistribution kappa = parse_kappa(opt.kappa, table);
    const ErrorModel err = load_error_model(opt.error, table);
    const std::vector<double> deltas = normalize_deltas(opt.deltas);
    for (const double gamma : opt.gammas) {
        if (!(gamma >= 0.0 && gamma <= 1.0)) {
            throw std::invalid_argument("--gamma values must lie in [0,1], got " +
                                        format_number(gamma));
        }
    }

    const CoupledChain chain =
        build_coupled_chain(table, psi0, psi0_faulty, kappa, err, opt.p_norm);
    NumericsHealth health;
    Output output = opt.table.open();

    DataTable result;
    result.columns = {"t", "delta", "p_error", "p_max_error", "e_dist", "lemma2_bound"};
    for (const double delta : deltas) {
        const BadSet bad = bad_set(chain, delta);
        const ChainSweep sweep = sweep_chain(chain, bad, opt.tau, &health);
        for (int t = 0; t <= opt.tau; ++t) {
            result.rows.push_back({static_cast<double>(t), delta, sweep.p_error[t],
                                   sweep.p_max_error[t], sweep.e_dist[t],
                                   sweep.lemma2_bound[t]});
        }
        *output.summary << "expected_hitting delta=" << format_number(delta) << ": "
                        << format_number(sweep.expected_hitting) << "\n";
        for (const double gamma : opt.gammas) {
            const MaxTolerable mt = max_tolerable_gates(chain, bad, gamma, opt.tau, &health);
            *output.summary << "t_star delta=" << format_number(delta)
                            << " gamma=" << format_number(gamma) << ": "
                            << mt.t_star << " (bound "
                            << format_number(mt.hitting_bound) << ")\n";
        }
    }
    opt.table.emit(output, result, "t");
    return finish_health(health, opt.strict);
}

// ---------------------------------------------------------------------------
// analyze-fixed

struct AnalyzeFixedOptions {
    std::string group;
    std::string circuit;
    std::string state;
    std::string state_faulty;
    std::string error;
    std::vector<double> deltas;
    double p_norm = 1.0;
    bool strict = false;
    TableOptions table;
};

int run_analyze_fixed(const AnalyzeFixedOptions& opt) {
    const GroupTable table = make_group(opt.group);
    const PureState psi0 = parse_state_arg(opt.state);
    const PureState psi0_faulty =
        opt.state_faulty.empty() ? psi0 : parse_state_arg(opt.state_faulty);
    const ErrorModel err = load_error_model(opt.error, table);
    const Circuit circuit = load_circuit(opt.circuit, table);
    const std::vector<double> deltas = normalize_deltas(opt.deltas);

    const InhomogeneousChainBuilder builder(table, psi0, psi0_faulty, err, opt.p_norm);
    NumericsHealth health;
    Output output = opt.table.open();

    DataTable result;
    result.columns = {"t", "delta", "p_error", "p_max_error", "e_dist"};
    for (const double delta : deltas) {
        const InhomogeneousChain chain = builder.build(circuit, delta);
        const InhomogeneousSweep sweep = sweep_inhomogeneous(chain, &health);
        for (int t = 0; t <= circuit.tau(); ++t) {
            result.rows.push_back({static_cast<double>(t), delta, sweep.p_error[t],
                                   sweep.p_max_error[t], sweep.e_dist[t]});
        }
    }
    opt.table.emit(output, result, "t");
    return finish_health(health, opt.strict);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string group;
    std::string mode = "random";
    std::string state;
    std::string state_faulty;
    std::string kappa = "uniform";
    std::string error;
    std::string circuit;
    std::vector<double> deltas;
    int tau = 100;
    int runs = 1000;
    std::uint64_t seed = 0;
    int threads = 0;
    double p_norm = 1.0;
    bool strict = false;
    CLI::Option* seed_option = nullptr;
    TableOptions table;
};

int run_simulate(const SimulateOptions& opt) {
    if (opt.strict && opt.seed_option->count() == 0) {
        throw std::invalid_argument("--strict requires an explicit --seed for simulate");
    }
    const GroupTable table = make_group(opt.group);
    const PureState psi0 = parse_state_arg(opt.state);
    const PureState psi0_faulty =
        opt.state_faulty.empty() ? psi0 : parse_state_arg(opt.state_faulty);

    SimConfig cfg(table, psi0, psi0_faulty, parse_kappa(opt.kappa, table),
                  load_error_model(opt.error, table));
    if (opt.mode == "random") {
        cfg.mode = SimMode::kRandomCircuit;
    } else if (opt.mode == "fixed") {
        cfg.mode = SimMode::kFixedCircuit;
        if (opt.circuit.empty()) {
            throw std::invalid_argument("--mode fixed requires --circuit");
        }
        cfg.circuit = load_circuit(opt.circuit, table);
    } else {
        cfg.mode = SimMode::kRandomizedBenchmarking;
    }
    cfg.runs = opt.runs;
    cfg.seed = opt.seed;
    cfg.tau = opt.tau;
    cfg.deltas = normalize_deltas(opt.deltas);
    cfg.p_norm = opt.p_norm;
    cfg.threads = resolve_threads(opt.threads);

    const SimResult sim = simulate(cfg);
    Output output = opt.table.open();

    DataTable result;
    result.columns = {"t",           "delta",       "p_error", "p_error_se",
                      "p_max_error", "p_max_error_se", "e_dist",  "e_dist_se"};
    for (std::size_t d = 0; d < sim.deltas.size(); ++d) {
        for (int t = 0; t <= sim.tau; ++t) {
            result.rows.push_back({static_cast<double>(t), sim.deltas[d],
                                   sim.p_error[d][t], sim.p_error_se[d][t],
                                   sim.p_max_error[d][t], sim.p_max_error_se[d][t],
                                   sim.e_dist[t], sim.e_dist_se[t]});
        }
    }
    opt.table.emit(output, result, "t");
    return kOk;
}

// ---------------------------------------------------------------------------
// continuous

struct ContinuousOptions {
    double alpha = 0.0;
    std::string mixture_file;
    double q = 0.0;
    int t_max = 0;
    double delta = 0.0;
    int truncation = 64;
    int runs = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    bool strict = false;
    CLI::Option* alpha_option = nullptr;
    CLI::Option* mixture_option = nullptr;
    TableOptions table;
};

int run_continuous(const ContinuousOptions& opt) {
    if (opt.alpha_option->count() == 0 && opt.mixture_option->count() == 0) {
        throw std::invalid_argument("continuous needs --alpha or --mixture-file");
    }
    const KickModel kicks = opt.mixture_option->count() > 0
                                ? parse_kick_file(opt.mixture_file)
                                : KickModel::fixed(opt.alpha);
    if (!(opt.delta >= 0.0 && opt.delta <= 1.0)) {
        throw std::invalid_argument("--delta must lie in [0,1], got " +
                                    format_number(opt.delta));
    }

    NumericsHealth health;
    SphereWalkResult oracle;
    if (opt.runs > 0) {
        ContinuousParams params;
        params.q = opt.q;
        params.truncation = opt.truncation;
        params.t = opt.t_max;
        oracle = sphere_walk_oracle(params, kicks, opt.delta, opt.runs, opt.seed,
                                    resolve_threads(opt.threads));
    }
    Output output = opt.table.open();

    DataTable result;
    result.columns = {"t", "e_dt_analytic", "e_dt_mc", "cdf_analytic", "cdf_mc", "max_lb"};
    for (int t = 0; t <= opt.t_max; ++t) {
        ContinuousParams params;
        params.q = opt.q;
        params.truncation = opt.truncation;
        params.t = t;
        const double e_dt = expected_trace_distance(params, kicks, &health).value;
        const double cdf = trace_distance_cdf(opt.delta, params, kicks, &health).value;
        const double max_lb =
            max_trace_distance_lower_bound(opt.delta, params, kicks, &health).value;
        const double e_dt_mc = opt.runs > 0 ? oracle.e_dist[t] : kNaN;
        const double cdf_mc = opt.runs > 0 ? oracle.cdf[t] : kNaN;
        result.rows.push_back({static_cast<double>(t), e_dt, e_dt_mc, cdf, cdf_mc, max_lb});
    }
    opt.table.emit(output, result, "t");
    return finish_health(health, opt.strict);
}

// ---------------------------------------------------------------------------
// anneal

struct AnnealOptions {
    std::string group;
    std::string circuit;
    std::string state;
    std::string state_faulty;
    std::string error;
    std::string objective = "p-error";
    double delta = 0.0;
    double p_norm = 1.0;
    std::string schedule = "c-log";
    double c = 0.004;
    double m = 0.0;
    int iterations = 1000;
    std::uint64_t seed = 0;
    std::string gate_subset;
    std::string out_circuit;
    bool strict = false;
    CLI::Option* seed_option = nullptr;
    CLI::Option* c_option = nullptr;
    CLI::Option* m_option = nullptr;
    TableOptions table;
};

int run_anneal(const AnnealOptions& opt) {
    if (opt.strict && opt.seed_option->count() == 0) {
        throw std::invalid_argument("--strict requires an explicit --seed for anneal");
    }
    if (opt.schedule == "guaranteed" && opt.m_option->count() == 0) {
        throw std::invalid_argument("--schedule guaranteed requires --m");
    }
    if (opt.schedule == "c-log" && opt.m_option->count() > 0) {
        throw std::invalid_argument("--m only applies to --schedule guaranteed");
    }
    if (opt.schedule == "guaranteed" && opt.c_option->count() > 0) {
        throw std::invalid_argument("--c only applies to --schedule c-log");
    }
    if (!(opt.delta >= 0.0 && opt.delta <= 1.0)) {
        throw std::invalid_argument("--delta must lie in [0,1], got " +
                                    format_number(opt.delta));
    }

    const GroupTable table = make_group(opt.group);
    const PureState psi0 = parse_state_arg(opt.state);
    const PureState psi0_faulty =
        opt.state_faulty.empty() ? psi0 : parse_state_arg(opt.state_faulty);
    const Circuit circuit = load_circuit(opt.circuit, table);
    const Objective::Kind kind = opt.objective == "p-error" ? Objective::Kind::kErrorAtEnd
                                                            : Objective::Kind::kMaxError;
    const Objective objective(table, kind, opt.delta, psi0, psi0_faulty,
                              load_error_model(opt.error, table), opt.p_norm);

    AnnealConfig cfg;
    cfg.iterations = opt.iterations;
    cfg.seed = opt.seed;
    cfg.schedule = opt.schedule == "guaranteed" ? CoolingSchedule::guaranteed(opt.m)
                                                : CoolingSchedule::c_log(opt.c);
    const bool limited = !opt.gate_subset.empty();
    if (limited) {
        std::stringstream tokens(opt.gate_subset);
        std::string token;
        while (std::getline(tokens, token, ',')) {
            cfg.gate_subset.push_back(resolve_gate(table, token));
        }
    }

    const AnnealResult result = limited ? anneal_gate_limited(circuit, objective, cfg)
                                        : anneal(circuit, objective, cfg);
    Output output = opt.table.open();

    DataTable trace;
    trace.columns = {"eta", "u_current", "u_best", "temperature", "accepted"};
    for (const AnnealStep& step : result.steps) {
        trace.rows.push_back({static_cast<double>(step.eta), step.u_current, step.u_best,
                              step.temperature, step.accepted ? 1.0 : 0.0});
    }
    opt.table.emit(output, trace, "eta");

    *output.summary << "u_initial: " << format_number(result.u_initial) << "\n";
    *output.summary << "u_best: " << format_number(result.u_best) << "\n";
    if (!opt.out_circuit.empty()) {
        std::ofstream best(opt.out_circuit);
        if (!best) {
            throw std::invalid_argument("cannot open best-circuit file: " +
                                        opt.out_circuit);
        }
        write_circuit(best, result.best);
    } else {
        *output.summary << "best_gates:";
        for (const int gate : result.best.gates) {
            *output.summary << " " << gate;
        }
        *output.summary << "\n";
    }
    if (result.aborted) {
        std::cerr << "error: " << result.warning << "\n";
        return kConfigError;
    }
    if (!result.warning.empty()) {
        std::cerr << "warning: " << result.warning << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// reachable / group-info

struct ReachableOptions {
    std::string group;
    std::string state;
};

int run_reachable(const ReachableOptions& opt) {
    const GroupTable table = make_group(opt.group);
    const StateSet states = reachable_states(table, parse_state_arg(opt.state));
    std::cout << states.size() << "\n";
    return kOk;
}

struct GroupInfoOptions {
    std::string group;
    std::string export_path;
};

int run_group_info(const GroupInfoOptions& opt) {
    const GroupTable table = make_group(opt.group);
    std::cout << "group: " << table.name() << "\n"
              << "qubits: " << table.qubits() << "\n"
              << "order: " << table.order() << "\n"
              << "generators:";
    for (const auto& [name, matrix] : table.generators()) {
        (void)matrix;
        std::cout << " " << name;
    }
    std::cout << "\n";
    if (opt.export_path.empty()) {
        return kOk;
    }
    nlohmann::json doc;
    doc["name"] = table.name();
    doc["qubits"] = table.qubits();
    doc["order"] = table.order();
    nlohmann::json elements = nlohmann::json::array();
    for (int index = 0; index < table.order(); ++index) {
        const CMatrix& m = table.element(index);
        nlohmann::json entries = nlohmann::json::array();
        for (Eigen::Index row = 0; row < m.rows(); ++row) {
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                entries.push_back({m(row, col).real(), m(row, col).imag()});
            }
        }
        elements.push_back(std::move(entries));
    }
    doc["elements"] = std::move(elements);
    std::ofstream out(opt.export_path);
    if (!out) {
        throw std::invalid_argument("cannot open export file: " + opt.export_path);
    }
    out << doc.dump() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
    std::string table_a;
    std::string table_b;
    double z = 3.0;
    double floor = 1e-6;
};

int run_compare(const CompareOptions& opt) {
    const DataTable a = load_csv(opt.table_a);
    const DataTable b = load_csv(opt.table_b);
    const AgreementReport report = compare_tables(a, b, opt.z, opt.floor);
    for (const ColumnAgreement& column : report.columns) {
        std::cout << "column " << column.column << ": within " << column.within << "/"
                  << column.points << ", worst z " << format_number(column.worst_z)
                  << "\n";
    }
    std::cout << "total: within " << report.within << "/" << report.points
              << ", fraction " << format_number(report.fraction_within()) << ", worst z "
              << format_number(report.worst_z);
    if (!report.worst_location.empty()) {
        std::cout << " at " << report.worst_location;
    }
    std::cout << "\n";
    return kOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{
        "qerrac — exact and Monte Carlo error-accumulation analysis for circuits "
        "over finite gate groups"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Read option defaults from an INI file ([subcommand] sections; "
                   "flags override file values)");

    std::function<int()> run;

    // Attachment helpers shared across subcommands.
    const auto add_group = [](CLI::App& sub, std::string& target) {
        sub.add_option("--group", target,
                       "Gate group: pauli:1..4 or clifford:1..2")
            ->required();
    };
    const auto add_states = [](CLI::App& sub, std::string& state, std::string& faulty) {
        sub.add_option("--state", state,
                       "Faultless initial state: ket expression or JSON amplitudes")
            ->required();
        sub.add_option("--state-faulty", faulty,
                       "Faulty initial state (default: same as --state)");
    };
    const auto add_error = [](CLI::App& sub, std::string& target) {
        sub.add_option("--error", target,
                       "Error model: none, pauli-channel:<r>, uniform:<r>, or a JSON file")
            ->required();
    };
    const auto add_p_norm = [](CLI::App& sub, double& target) {
        sub.add_option("--p-norm", target, "Schatten exponent for state distances")
            ->check(CLI::Range(1.0, std::numeric_limits<double>::infinity()));
    };

    // ---- analyze-random
    AnalyzeRandomOptions analyze_random;
    {
        CLI::App* sub = app.add_subcommand(
            "analyze-random", "Exact error curves when every step draws a random gate");
        add_group(*sub, analyze_random.group);
        add_states(*sub, analyze_random.state, analyze_random.state_faulty);
        add_error(*sub, analyze_random.error);
        sub->add_option("--kappa", analyze_random.kappa,
                        "Gate distribution: uniform, point:<gate>, or a JSON file");
        sub->add_option("--delta", analyze_random.deltas,
                        "Distance thresholds (comma separated or repeated)")
            ->required()
            ->delimiter(',');
        sub->add_option("--tau", analyze_random.tau, "Horizon: curves cover t = 0..tau")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--gamma", analyze_random.gammas,
                        "Failure budgets: print the largest tolerable gate count per "
                        "delta/gamma pair")
            ->delimiter(',');
        add_p_norm(*sub, analyze_random.p_norm);
        sub->add_flag("--strict", analyze_random.strict,
                      "Exit 3 when a probability left [0,1] beyond roundoff");
        analyze_random.table.attach(*sub);
        sub->callback([&run, &analyze_random] {
            run = [&analyze_random] { return run_analyze_random(analyze_random); };
        });
    }

    // ---- analyze-fixed
    AnalyzeFixedOptions analyze_fixed;
    {
        CLI::App* sub = app.add_subcommand(
            "analyze-fixed", "Exact error curves along a fixed gate sequence");
        add_group(*sub, analyze_fixed.group);
        sub->add_option("--circuit", analyze_fixed.circuit,
                        "Circuit file, one gate token per line")
            ->required();
        add_states(*sub, analyze_fixed.state, analyze_fixed.state_faulty);
        add_error(*sub, analyze_fixed.error);
        sub->add_option("--delta", analyze_fixed.deltas,
                        "Distance thresholds (comma separated or repeated)")
            ->required()
            ->delimiter(',');
        add_p_norm(*sub, analyze_fixed.p_norm);
        sub->add_flag("--strict", analyze_fixed.strict,
                      "Exit 3 when a probability left [0,1] beyond roundoff");
        analyze_fixed.table.attach(*sub);
        sub->callback([&run, &analyze_fixed] {
            run = [&analyze_fixed] { return run_analyze_fixed(analyze_fixed); };
        });
    }

    // ---- simulate
    SimulateOptions simulate_opt;
    {
        CLI::App* sub = app.add_subcommand(
            "simulate", "Monte Carlo estimates of the same curves, with standard errors");
        add_group(*sub, simulate_opt.group);
        sub->add_option("--mode", simulate_opt.mode,
                        "random: draw gates; fixed: follow --circuit; rb: random gates "
                        "plus a closing inverse that flips every qubit")
            ->check(CLI::IsMember({"random", "fixed", "rb"}));
        add_states(*sub, simulate_opt.state, simulate_opt.state_faulty);
        add_error(*sub, simulate_opt.error);
        sub->add_option("--kappa", simulate_opt.kappa,
                        "Gate distribution: uniform, point:<gate>, or a JSON file");
        sub->add_option("--circuit", simulate_opt.circuit, "Circuit file for --mode fixed");
        sub->add_option("--delta", simulate_opt.deltas,
                        "Distance thresholds (comma separated or repeated)")
            ->required()
            ->delimiter(',');
        sub->add_option("--tau", simulate_opt.tau,
                        "Horizon for random/rb modes (fixed mode uses the circuit length)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--runs", simulate_opt.runs, "Independent trajectories")
            ->check(CLI::PositiveNumber);
        simulate_opt.seed_option =
            sub->add_option("--seed", simulate_opt.seed, "Base seed for the run streams");
        sub->add_option("--threads", simulate_opt.threads,
                        "Worker threads (0 = hardware concurrency; QERR_THREADS caps)")
            ->check(CLI::NonNegativeNumber);
        add_p_norm(*sub, simulate_opt.p_norm);
        sub->add_flag("--strict", simulate_opt.strict, "Require an explicit --seed");
        simulate_opt.table.attach(*sub);
        sub->callback([&run, &simulate_opt] {
            run = [&simulate_opt] { return run_simulate(simulate_opt); };
        });
    }

    // ---- continuous
    ContinuousOptions continuous_opt;
    {
        CLI::App* sub = app.add_subcommand(
            "continuous",
            "Single-qubit angular-kick walk: series curves plus an optional "
            "Monte Carlo oracle");
        continuous_opt.alpha_option = sub->add_option(
            "--alpha", continuous_opt.alpha, "Fixed kick angle in radians, within [0, pi]");
        continuous_opt.mixture_option =
            sub->add_option("--mixture-file", continuous_opt.mixture_file,
                            "JSON kick mixture: atom array or {\"steps\": [[...], ...]}");
        continuous_opt.alpha_option->excludes(continuous_opt.mixture_option);
        sub->add_option("--q", continuous_opt.q, "Depolarization probability per step")
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--t-max", continuous_opt.t_max, "Curves cover t = 0..t-max")
            ->required()
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--delta", continuous_opt.delta, "Distance threshold for the CDF")
            ->required();
        sub->add_option("--truncation", continuous_opt.truncation,
                        "Starting series order (adaptively doubled)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--runs", continuous_opt.runs,
                        "Monte Carlo trajectories (0 = analytic only)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", continuous_opt.seed, "Base seed for the oracle");
        sub->add_option("--threads", continuous_opt.threads,
                        "Worker threads (0 = hardware concurrency; QERR_THREADS caps)")
            ->check(CLI::NonNegativeNumber);
        sub->add_flag("--strict", continuous_opt.strict,
                      "Exit 3 when a series failed to converge or a probability "
                      "left [0,1] beyond roundoff");
        continuous_opt.table.attach(*sub);
        sub->callback([&run, &continuous_opt] {
            run = [&continuous_opt] { return run_continuous(continuous_opt); };
        });
    }

    // ---- anneal
    AnnealOptions anneal_opt;
    {
        CLI::App* sub = app.add_subcommand(
            "anneal",
            "Metropolis annealing over product-preserving pair rewrites of a circuit");
        add_group(*sub, anneal_opt.group);
        sub->add_option("--circuit", anneal_opt.circuit, "Starting circuit file")
            ->required();
        add_states(*sub, anneal_opt.state, anneal_opt.state_faulty);
        add_error(*sub, anneal_opt.error);
        sub->add_option("--objective", anneal_opt.objective,
                        "p-error: P[D_tau > delta]; p-max-error: P[max D > delta]")
            ->check(CLI::IsMember({"p-error", "p-max-error"}));
        sub->add_option("--delta", anneal_opt.delta, "Distance threshold")->required();
        add_p_norm(*sub, anneal_opt.p_norm);
        sub->add_option("--schedule", anneal_opt.schedule,
                        "Cooling schedule: c-log (T = c/ln(eta+1)) or guaranteed "
                        "(T = m*tau/ln(eta))")
            ->check(CLI::IsMember({"c-log", "guaranteed"}));
        anneal_opt.c_option =
            sub->add_option("--c", anneal_opt.c, "Constant of the c-log schedule")
                ->check(CLI::PositiveNumber);
        anneal_opt.m_option =
            sub->add_option("--m", anneal_opt.m, "Constant of the guaranteed schedule")
                ->check(CLI::PositiveNumber);
        sub->add_option("--iterations", anneal_opt.iterations, "Metropolis iterations")
            ->check(CLI::PositiveNumber);
        anneal_opt.seed_option =
            sub->add_option("--seed", anneal_opt.seed, "Seed of the proposal stream");
        sub->add_option("--gate-subset", anneal_opt.gate_subset,
                        "Restrict replacement gates to these comma-separated tokens");
        sub->add_option("--out-circuit", anneal_opt.out_circuit,
                        "Write the best circuit here (default: list it in the summary)");
        sub->add_flag("--strict", anneal_opt.strict, "Require an explicit --seed");
        anneal_opt.table.attach(*sub);
        sub->callback([&run, &anneal_opt] {
            run = [&anneal_opt] { return run_anneal(anneal_opt); };
        });
    }

    // ---- reachable
    ReachableOptions reachable_opt;
    {
        CLI::App* sub = app.add_subcommand(
            "reachable", "Count the states reachable from an initial state under a group");
        sub->add_option("group", reachable_opt.group,
                        "Gate group: pauli:1..4 or clifford:1..2")
            ->required();
        sub->add_option("--state", reachable_opt.state, "Initial state")->required();
        sub->callback([&run, &reachable_opt] {
            run = [&reachable_opt] { return run_reachable(reachable_opt); };
        });
    }

    // ---- group-info
    GroupInfoOptions group_info;
    {
        CLI::App* sub =
            app.add_subcommand("group-info", "Order and generators of a built-in group");
        sub->add_option("group", group_info.group,
                        "Gate group: pauli:1..4 or clifford:1..2")
            ->required();
        sub->add_option("--export", group_info.export_path,
                        "Also dump the element matrices as JSON to this path");
        sub->callback([&run, &group_info] {
            run = [&group_info] { return run_group_info(group_info); };
        });
    }

    // ---- compare
    CompareOptions compare_opt;
    {
        CLI::App* sub = app.add_subcommand(
            "compare", "Z-score agreement report between two result tables");
        sub->add_option("table_a", compare_opt.table_a, "First CSV table")->required();
        sub->add_option("table_b", compare_opt.table_b, "Second CSV table")->required();
        sub->add_option("--z", compare_opt.z, "Agreement threshold in standard errors")
            ->check(CLI::PositiveNumber);
        sub->add_option("--floor", compare_opt.floor,
                        "Minimum standard error when dividing differences")
            ->check(CLI::NonNegativeNumber);
        sub->callback([&run, &compare_opt] {
            run = [&compare_opt] { return run_compare(compare_opt); };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& failure) {
        const int code = app.exit(failure);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        return run();
    } catch (const std::exception& failure) {
        std::cerr << "error: " << failure.what() << "\n";
        return kConfigError;
    }
}
