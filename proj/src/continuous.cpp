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

#include "qerrac/continuous.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "qerrac/parallel.hpp"

namespace qerrac {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kWeightSumTolerance = 1e-12;
constexpr double kSeriesTolerance = 1e-9;
constexpr int kTermCap = 1 << 21;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_angle(double angle) {
    if (!(angle >= 0.0 && angle <= kPi)) {
        throw std::invalid_argument("KickModel: angle must be in [0, pi]");
    }
}

void validate_params(const ContinuousParams& params) {
    if (!(params.q >= 0.0 && params.q <= 1.0)) {
        throw std::invalid_argument("continuous: q must be in [0,1]");
    }
    if (params.truncation < 1) {
        throw std::invalid_argument("continuous: truncation order must be >= 1");
    }
    if (params.t < 0) {
        throw std::invalid_argument("continuous: negative step count");
    }
}

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2: roughly 32 significant
/// digits, enough to survive the cancellation in the alternating
/// exact-coefficient shell-integral form.
struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;
};

DoubleDouble two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

DoubleDouble two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

DoubleDouble dd_from_ll(long long value) {
    const double hi = static_cast<double>(value);
    const double lo = static_cast<double>(value - static_cast<long long>(hi));
    return {hi, lo};
}

DoubleDouble dd_add(const DoubleDouble& a, const DoubleDouble& b) {
    DoubleDouble s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    DoubleDouble result = two_sum(s.hi, s.lo);
    return result;
}

DoubleDouble dd_mul(const DoubleDouble& a, const DoubleDouble& b) {
    DoubleDouble p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return two_sum(p.hi, p.lo);
}

/// Exact power with an integer exponent (sign-correct for negative bases).
double ipow(double base, int exponent) {
    double result = 1.0;
    double factor = base;
    for (int e = exponent; e > 0; e >>= 1) {
        if (e & 1) {
            result *= factor;
        }
        factor *= factor;
    }
    return result;
}

/// Walks P_n(x) upward for a set of abscissas via the three-term recurrence
/// P_{n+1} = ((2n+1) x P_n - n P_{n-1}) / (n+1).
class LegendreLadder {
   public:
    explicit LegendreLadder(std::vector<double> abscissas)
        : x_(std::move(abscissas)),
          prev_(x_.size(), 0.0),
          curr_(x_.size(), 1.0) {}  // P_0 = 1

    int order() const { return n_; }
    double value(std::size_t i) const { return curr_[i]; }

    void advance() {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            const double next =
                ((2.0 * n_ + 1.0) * x_[i] * curr_[i] - n_ * prev_[i]) / (n_ + 1.0);
            prev_[i] = curr_[i];
            curr_[i] = next;
        }
        ++n_;
    }

   private:
    std::vector<double> x_;
    std::vector<double> prev_;
    std::vector<double> curr_;
    int n_ = 0;
};

/// Supplies the accumulated kick coefficient (the product over steps of the
/// mean Legendre value) order by order, together with its n -> infinity
/// limit (the probability that every kick was the zero-angle atom, whose
/// Legendre means are identically 1).
class AccumulatedKick {
   public:
    AccumulatedKick(const KickModel& kicks, int t) : kicks_(&kicks), t_(t) {
        if (t < 0) {
            throw std::invalid_argument("continuous: negative step count");
        }
        if (kicks.is_per_step() && t > kicks.covered_steps()) {
            throw std::invalid_argument(
                "continuous: per-step kick list shorter than the step count");
        }
        groups_ = kicks.is_per_step() ? t : (t > 0 ? 1 : 0);
        std::vector<double> abscissas;
        offsets_.reserve(static_cast<std::size_t>(groups_) + 1);
        offsets_.push_back(0);
        limit_ = 1.0;
        for (int g = 0; g < groups_; ++g) {
            const std::vector<KickModel::Atom>& atoms = kicks.step(g + 1);
            for (const KickModel::Atom& atom : atoms) {
                abscissas.push_back(std::cos(atom.angle));
            }
            offsets_.push_back(static_cast<int>(abscissas.size()));
        }
        for (int s = 1; s <= t; ++s) {
            limit_ *= kicks.zero_weight(s);
        }
        ladder_.emplace(std::move(abscissas));
    }

    /// Product limit of the coefficient as the order grows.
    double limit() const { return limit_; }

    /// Coefficient at the ladder's current order for t steps.
    double current() const {
        if (t_ == 0) {
            return 1.0;
        }
        if (!kicks_->is_per_step()) {
            return ipow(group_mean(0), t_);
        }
        double product = 1.0;
        for (int g = 0; g < groups_; ++g) {
            product *= group_mean(g);
        }
        return product;
    }

    void advance() { ladder_->advance(); }

   private:
    double group_mean(int g) const {
        const std::vector<KickModel::Atom>& atoms = kicks_->step(g + 1);
        double mean = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            mean += atoms[i].weight *
                    ladder_->value(static_cast<std::size_t>(offsets_[static_cast<std::size_t>(g)]) + i);
        }
        return mean;
    }

    const KickModel* kicks_;
    int t_;
    int groups_ = 0;
    std::vector<int> offsets_;
    double limit_ = 1.0;
    std::optional<LegendreLadder> ladder_;
};

/// Adaptively sums sum_{n>=0} (coeff_n - limit) * weight(n), where weight is
/// called exactly once per ascending n. Doubles the retained order until the
/// partial sum moves by less than the tolerance, starting from
/// `start_order`; a cap hit is reported through `health`.
template <typename WeightFn>
SeriesValue kummer_sum(AccumulatedKick& kick,
                       int start_order,
                       WeightFn weight,
                       NumericsHealth* health,
                       const char* context) {
    SeriesValue out;
    double sum = 0.0;
    double checkpoint_sum = 0.0;
    int checkpoint = std::max(start_order, 1);
    int n = 0;
    const double limit = kick.limit();
    while (true) {
        sum += (kick.current() - limit) * weight(n);
        ++n;
        if (n >= checkpoint) {
            const double change = std::abs(sum - checkpoint_sum);
            out.tail_estimate = change;
            out.terms_used = n;
            if (change < kSeriesTolerance) {
                out.converged = true;
                break;
            }
            checkpoint_sum = sum;
            if (2 * checkpoint > kTermCap) {
                out.converged = false;
                if (health != nullptr) {
                    health->report(change, context);
                }
                break;
            }
            checkpoint *= 2;
        }
        kick.advance();
    }
    out.value = sum;
    return out;
}

/// Conditional (pure-walk) probability that the distance is within delta at
/// time t, by the subtracted-limit series. Exact at t = 0 and delta = 1.
SeriesValue conditional_cdf(double delta,
                            const ContinuousParams& params,
                            const KickModel& kicks,
                            int t,
                            NumericsHealth* health) {
    AccumulatedKick kick(kicks, t);
    const double a = 1.0 - 2.0 * delta * delta;
    // Shell weights c_n: c_0 = delta^2, c_n = (P_{n-1}(a) - P_{n+1}(a)) / 2.
    // Their total over all n is exactly 1, which folds the limit term into
    // the constant below.
    double p_prev = 1.0;  // P_{n-1}(a), seeded for the n = 0 call
    double p_curr = 1.0;  // P_n(a)
    int order = 0;
    auto weight = [&](int n) {
        if (n == 0) {
            p_curr = a;  // P_1
            order = 1;
            return delta * delta;
        }
        // Invariant: p_prev = P_{n-1}(a), p_curr = P_n(a), order == n.
        const double p_next =
            ((2.0 * order + 1.0) * a * p_curr - order * p_prev) / (order + 1.0);
        const double c = (p_prev - p_next) / 2.0;
        p_prev = p_curr;
        p_curr = p_next;
        ++order;
        return c;
    };
    SeriesValue series = kummer_sum(kick, params.truncation, weight, health,
                                    "continuous: distance cdf series");
    series.value += kick.limit();
    return series;
}

/// Orthonormal frame completion: two unit vectors spanning the plane
/// orthogonal to v (|v| = 1).
void orthogonal_frame(const std::array<double, 3>& v,
                      std::array<double, 3>* e1,
                      std::array<double, 3>* e2) {
    // Cross with the axis least aligned with v.
    std::array<double, 3> axis = std::abs(v[2]) < 0.9 ? std::array<double, 3>{0.0, 0.0, 1.0}
                                                      : std::array<double, 3>{1.0, 0.0, 0.0};
    std::array<double, 3> first = {v[1] * axis[2] - v[2] * axis[1],
                                   v[2] * axis[0] - v[0] * axis[2],
                                   v[0] * axis[1] - v[1] * axis[0]};
    const double norm =
        std::sqrt(first[0] * first[0] + first[1] * first[1] + first[2] * first[2]);
    for (int i = 0; i < 3; ++i) {
        first[static_cast<std::size_t>(i)] /= norm;
    }
    *e1 = first;
    *e2 = {v[1] * first[2] - v[2] * first[1], v[2] * first[0] - v[0] * first[2],
           v[0] * first[1] - v[1] * first[0]};
}

}  // namespace

// ---------------------------------------------------------------------------
// KickModel
// ---------------------------------------------------------------------------

KickModel KickModel::fixed(double alpha) {
    validate_angle(alpha);
    KickModel model;
    model.steps_.push_back({Atom{alpha, 1.0}});
    model.cumulative_.push_back({1.0});
    model.zero_weight_.push_back(alpha == 0.0 ? 1.0 : 0.0);
    return model;
}

KickModel KickModel::mixture(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) {
        throw std::invalid_argument("KickModel: empty mixture");
    }
    std::vector<Atom> entries;
    std::vector<double> cumulative;
    double total = 0.0;
    double zero = 0.0;
    for (const auto& [angle, weight] : atoms) {
        validate_angle(angle);
        if (!(weight > 0.0)) {
            throw std::invalid_argument("KickModel: weights must be positive");
        }
        total += weight;
        cumulative.push_back(total);
        entries.push_back(Atom{angle, weight});
        if (angle == 0.0) {
            zero += weight;
        }
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
        throw std::invalid_argument("KickModel: weights must sum to 1");
    }
    cumulative.back() = 1.0;
    KickModel model;
    model.steps_.push_back(std::move(entries));
    model.cumulative_.push_back(std::move(cumulative));
    model.zero_weight_.push_back(zero);
    return model;
}

KickModel KickModel::per_step(std::vector<KickModel> entries) {
    if (entries.empty()) {
        throw std::invalid_argument("KickModel: empty per-step list");
    }
    KickModel model;
    model.per_step_ = true;
    for (KickModel& entry : entries) {
        if (entry.per_step_) {
            throw std::invalid_argument("KickModel: per-step entries must be flat");
        }
        model.steps_.push_back(std::move(entry.steps_[0]));
        model.cumulative_.push_back(std::move(entry.cumulative_[0]));
        model.zero_weight_.push_back(entry.zero_weight_[0]);
    }
    return model;
}

const std::vector<KickModel::Atom>& KickModel::step(int s) const {
    if (s < 1) {
        throw std::invalid_argument("KickModel: steps are 1-based");
    }
    if (!per_step_) {
        return steps_[0];
    }
    if (s > static_cast<int>(steps_.size())) {
        throw std::invalid_argument("KickModel: step beyond the per-step list");
    }
    return steps_[static_cast<std::size_t>(s - 1)];
}

double KickModel::zero_weight(int s) const {
    step(s);  // bounds check
    return per_step_ ? zero_weight_[static_cast<std::size_t>(s - 1)] : zero_weight_[0];
}

double KickModel::sample_angle(int s, PhiloxRng& rng) const {
    const std::vector<Atom>& atoms = step(s);
    if (atoms.size() == 1) {
        return atoms[0].angle;  // point mass: no randomness consumed
    }
    const std::vector<double>& cumulative =
        per_step_ ? cumulative_[static_cast<std::size_t>(s - 1)] : cumulative_[0];
    return atoms[rng.sample_cumulative(cumulative)].angle;
}

// ---------------------------------------------------------------------------
// Series building blocks
// ---------------------------------------------------------------------------

double lambda_coeff(int n, int t, const KickModel& kicks) {
    if (n < 0 || t < 0) {
        throw std::invalid_argument("lambda_coeff: negative order or step count");
    }
    AccumulatedKick kick(kicks, t);
    if (n == 0 || t == 0) {
        return 1.0;
    }
    for (int i = 0; i < n; ++i) {
        kick.advance();
    }
    return kick.current();
}

double legendre_integral(int n, double delta) {
    if (n < 0) {
        throw std::invalid_argument("legendre_integral: negative order");
    }
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("legendre_integral: delta must be in [0,1]");
    }
    const double a = 1.0 - 2.0 * delta * delta;
    if (n == 0) {
        return 1.0 - a;
    }
    // March P_k(a) to k = n+1 and apply the derivative identity.
    double p_prev = 1.0;  // P_0
    double p_curr = a;    // P_1
    double p_before_n = 1.0;
    for (int k = 1; k <= n; ++k) {
        if (k == n) {
            p_before_n = p_prev;
        }
        const double next = ((2.0 * k + 1.0) * a * p_curr - k * p_prev) / (k + 1.0);
        p_prev = p_curr;
        p_curr = next;
    }
    return (p_before_n - p_curr) / (2.0 * n + 1.0);
}

double catalan_form_integral(int n, double delta) {
    if (n < 0 || n > 25) {
        throw std::invalid_argument(
            "catalan_form_integral: order outside the numerically exact range");
    }
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("catalan_form_integral: delta must be in [0,1]");
    }
    // Exact integer binomial by the multiplicative rule (each partial
    // product is divisible by the step index).
    auto binom = [](int m, int j) -> long long {
        if (j < 0 || j > m) {
            return 0;
        }
        j = std::min(j, m - j);
        long long b = 1;
        for (int i = 1; i <= j; ++i) {
            b = b * (m - j + i) / i;
        }
        return b;
    };
    // The alternating sum cancels down from coefficients near 2e16, which
    // costs up to ~26 digits at delta near 1; double-double arithmetic
    // (~32 digits) keeps the result good to well below 1e-9 everywhere.
    const DoubleDouble u = two_prod(delta, delta);
    DoubleDouble power = u;  // u^{k+1}
    DoubleDouble sum{0.0, 0.0};
    for (int k = 0; k <= n; ++k) {
        const long long catalan = binom(2 * k, k) / (k + 1);
        const long long coefficient = 2 * catalan * binom(n + k, 2 * k);
        DoubleDouble term = dd_mul(dd_from_ll(coefficient), power);
        if (k % 2 == 1) {
            term.hi = -term.hi;
            term.lo = -term.lo;
        }
        sum = dd_add(sum, term);
        power = dd_mul(power, u);
    }
    return sum.hi + sum.lo;
}

// ---------------------------------------------------------------------------
// Closed-form statistics
// ---------------------------------------------------------------------------

SeriesValue expected_trace_distance(const ContinuousParams& params,
                                    const KickModel& kicks,
                                    NumericsHealth* health) {
    validate_params(params);
    AccumulatedKick kick(kicks, params.t);
    // Weights 1/((2n-1)(2n+3)) telescope to zero over all n, which folds the
    // subtracted limit away exactly (and makes t = 0 exact at order zero).
    auto weight = [](int n) {
        return 1.0 / ((2.0 * n - 1.0) * (2.0 * n + 3.0));
    };
    SeriesValue series = kummer_sum(kick, params.truncation, weight, health,
                                    "continuous: expected distance series");
    const double survive = ipow(1.0 - params.q, params.t);
    series.value = 0.5 - survive * (0.5 + 2.0 * series.value);
    return series;
}

SeriesValue trace_distance_cdf(double delta,
                               const ContinuousParams& params,
                               const KickModel& kicks,
                               NumericsHealth* health) {
    validate_params(params);
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("trace_distance_cdf: delta must be in [0,1]");
    }
    SeriesValue series = conditional_cdf(delta, params, kicks, params.t, health);
    const double survive = ipow(1.0 - params.q, params.t);
    const double depolarized_mass = (delta >= 0.5) ? (1.0 - survive) : 0.0;
    series.value = clamp_probability(depolarized_mass + survive * series.value, health,
                                     "continuous: distance cdf");
    return series;
}

SeriesValue max_trace_distance_lower_bound(double delta,
                                           const ContinuousParams& params,
                                           const KickModel& kicks,
                                           NumericsHealth* health) {
    validate_params(params);
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::invalid_argument(
            "max_trace_distance_lower_bound: delta must be in [0,1]");
    }
    SeriesValue out;
    double sum = 0.0;
    for (int s = 1; s <= params.t; ++s) {
        SeriesValue term = conditional_cdf(delta, params, kicks, s, health);
        sum += term.value;
        out.terms_used = std::max(out.terms_used, term.terms_used);
        out.tail_estimate = std::max(out.tail_estimate, term.tail_estimate);
        out.converged = out.converged && term.converged;
    }
    // The max{0, .} clip is part of the bound itself; only an upside beyond 1
    // is a numerical excursion worth reporting.
    out.value = clamp_probability(std::max(0.0, 1.0 - params.t + sum), health,
                                  "continuous: max-distance lower bound");
    return out;
}

// ---------------------------------------------------------------------------
// Sphere-walk oracle
// ---------------------------------------------------------------------------

SphereWalkResult sphere_walk_oracle(const ContinuousParams& params,
                                    const KickModel& kicks,
                                    double delta,
                                    int runs,
                                    std::uint64_t seed,
                                    int threads) {
    validate_params(params);
    if (runs < 1) {
        throw std::invalid_argument("sphere_walk_oracle: runs must be >= 1");
    }
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("sphere_walk_oracle: delta must be in [0,1]");
    }
    if (kicks.is_per_step() && params.t > kicks.covered_steps()) {
        throw std::invalid_argument(
            "sphere_walk_oracle: per-step kick list shorter than the step count");
    }
    const int nt = params.t + 1;
    const std::size_t stride = static_cast<std::size_t>(nt);
    std::vector<double> dist(static_cast<std::size_t>(runs) * stride);
    std::vector<int> depolarized_at(static_cast<std::size_t>(runs), 0);

    for_each_run(threads, runs, [&](int run) {
        PhiloxRng rng(seed, static_cast<std::uint64_t>(run));
        double* row = dist.data() + static_cast<std::size_t>(run) * stride;
        std::array<double, 3> v = {0.0, 0.0, 1.0};
        row[0] = 0.0;
        int nu = params.t + 1;  // first depolarizing step; t+1 = never
        for (int s = 1; s <= params.t; ++s) {
            if (params.q > 0.0 && rng.uniform() < params.q) {
                nu = s;
                for (int rest = s; rest <= params.t; ++rest) {
                    row[rest] = 0.5;
                }
                break;
            }
            const double alpha = kicks.sample_angle(s, rng);
            const double phi = 2.0 * kPi * rng.uniform();
            std::array<double, 3> e1, e2;
            orthogonal_frame(v, &e1, &e2);
            const double ca = std::cos(alpha), sa = std::sin(alpha);
            const double cp = std::cos(phi), sp = std::sin(phi);
            for (int i = 0; i < 3; ++i) {
                v[static_cast<std::size_t>(i)] =
                    ca * v[static_cast<std::size_t>(i)] +
                    sa * (cp * e1[static_cast<std::size_t>(i)] +
                          sp * e2[static_cast<std::size_t>(i)]);
            }
            const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            for (int i = 0; i < 3; ++i) {
                v[static_cast<std::size_t>(i)] /= norm;
            }
            row[s] = std::sqrt(std::max(0.0, (1.0 - v[2]) / 2.0));
        }
        depolarized_at[static_cast<std::size_t>(run)] = nu;
    });

    SphereWalkResult result;
    result.runs = runs;
    result.seed = seed;
    result.delta = delta;
    result.e_dist.assign(static_cast<std::size_t>(nt), 0.0);
    result.e_dist_se.assign(static_cast<std::size_t>(nt), 0.0);
    result.cdf.assign(static_cast<std::size_t>(nt), 0.0);
    result.cdf_se.assign(static_cast<std::size_t>(nt), 0.0);
    result.max_cdf_conditional.assign(static_cast<std::size_t>(nt), 0.0);
    result.max_cdf_conditional_se.assign(static_cast<std::size_t>(nt), 0.0);
    result.surviving.assign(static_cast<std::size_t>(nt), 0);

    // Counts are exact integers; mean sums run in fixed run order.
    std::vector<long long> within(static_cast<std::size_t>(nt), 0);
    std::vector<long long> survive_within(static_cast<std::size_t>(nt), 0);
    std::vector<long long> survive(static_cast<std::size_t>(nt), 0);
    for (int run = 0; run < runs; ++run) {
        const double* row = dist.data() + static_cast<std::size_t>(run) * stride;
        const int nu = depolarized_at[static_cast<std::size_t>(run)];
        double running = 0.0;
        for (int t = 0; t < nt; ++t) {
            running = std::max(running, row[t]);
            if (row[t] <= delta) {
                ++within[static_cast<std::size_t>(t)];
            }
            if (nu > t) {
                ++survive[static_cast<std::size_t>(t)];
                if (running <= delta) {
                    ++survive_within[static_cast<std::size_t>(t)];
                }
            }
        }
    }
    for (int t = 0; t < nt; ++t) {
        double sum = 0.0;
        for (int run = 0; run < runs; ++run) {
            sum += dist[static_cast<std::size_t>(run) * stride + t];
        }
        const double mean = sum / runs;
        result.e_dist[static_cast<std::size_t>(t)] = mean;
        if (runs >= 2) {
            double ss = 0.0;
            for (int run = 0; run < runs; ++run) {
                const double diff = dist[static_cast<std::size_t>(run) * stride + t] - mean;
                ss += diff * diff;
            }
            result.e_dist_se[static_cast<std::size_t>(t)] =
                std::sqrt(ss / (static_cast<double>(runs) * (runs - 1.0)));
        }
        const double p = static_cast<double>(within[static_cast<std::size_t>(t)]) / runs;
        result.cdf[static_cast<std::size_t>(t)] = p;
        result.cdf_se[static_cast<std::size_t>(t)] = std::sqrt(p * (1.0 - p) / runs);
        const long long alive = survive[static_cast<std::size_t>(t)];
        result.surviving[static_cast<std::size_t>(t)] = static_cast<int>(alive);
        if (alive > 0) {
            const double pc =
                static_cast<double>(survive_within[static_cast<std::size_t>(t)]) /
                static_cast<double>(alive);
            result.max_cdf_conditional[static_cast<std::size_t>(t)] = pc;
            result.max_cdf_conditional_se[static_cast<std::size_t>(t)] =
                std::sqrt(pc * (1.0 - pc) / static_cast<double>(alive));
        } else {
            result.max_cdf_conditional[static_cast<std::size_t>(t)] = kNaN;
            result.max_cdf_conditional_se[static_cast<std::size_t>(t)] = kNaN;
        }
    }
    return result;
}

}  // namespace qerrac
