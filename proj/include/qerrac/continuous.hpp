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

#include <cstdint>
#include <utility>
#include <vector>

#include "qerrac/chain.hpp"
#include "qerrac/rng.hpp"

namespace qerrac {

/// One-qubit continuous error accumulation: a walker on the Bloch sphere
/// receives a random angular kick per step and depolarizes to the maximally
/// mixed state with probability q per step. The trace distance from the
/// start is D_t = sin(Theta_t / 2) while pure and exactly 1/2 once
/// depolarized. Statistics are evaluated as Legendre series in
/// x = cos(Theta); the n-th series coefficient evolves per step by the mean
/// Legendre value of the kick distribution.

/// The per-step distribution of kick angles: one fixed angle, a finite
/// mixture of angles, or an explicit per-step list of either. Angles are in
/// radians within [0, pi]; mixture weights must be positive and sum to 1
/// within 1e-12.
class KickModel {
   public:
    struct Atom {
        double angle = 0.0;
        double weight = 1.0;
    };

    /// Every step kicks by exactly `alpha`.
    static KickModel fixed(double alpha);

    /// Every step draws an angle from the given (angle, weight) atoms.
    static KickModel mixture(std::vector<std::pair<double, double>> atoms);

    /// Step s (1-based) uses entries[s-1]; entries themselves must be
    /// homogeneous models. Evaluations beyond the list length throw.
    static KickModel per_step(std::vector<KickModel> entries);

    /// True when built by per_step().
    bool is_per_step() const { return per_step_; }

    /// Number of explicitly covered steps; 0 means every step is the same.
    int covered_steps() const {
        return per_step_ ? static_cast<int>(steps_.size()) : 0;
    }

    /// Atoms of the step-s distribution (s is 1-based; any s >= 1 for
    /// homogeneous models). Throws std::invalid_argument past the list.
    const std::vector<Atom>& step(int s) const;

    /// Probability that the step-s kick angle is exactly zero: the weight of
    /// the point mass a series must treat separately, since its Legendre
    /// means do not decay.
    double zero_weight(int s) const;

    /// Draw a kick angle for step s. Fixed-angle steps consume no randomness.
    double sample_angle(int s, PhiloxRng& rng) const;

   private:
    KickModel() = default;

    bool per_step_ = false;
    std::vector<std::vector<Atom>> steps_;        // one entry if homogeneous
    std::vector<std::vector<double>> cumulative_; // per step, if mixture
    std::vector<double> zero_weight_;
};

/// Static parameters of the accumulation process.
struct ContinuousParams {
    double q = 0.0;       // depolarization probability per step, in [0,1]
    int truncation = 64;  // starting series order N (adaptively doubled)
    int t = 0;            // step count
};

/// A series evaluation together with its convergence diagnostics. `value` is
/// the result; `terms_used` the highest retained order; `tail_estimate` the
/// last observed change when doubling the order; `converged` false only when
/// the term cap was hit first (also reported to the NumericsHealth argument
/// when one is passed).
struct SeriesValue {
    double value = 0.0;
    int terms_used = 0;
    double tail_estimate = 0.0;
    bool converged = true;
};

/// Mean Legendre value of the accumulated kick after t steps: the product
/// over steps s = 1..t of E[P_n(cos alpha_s)]. Equals (P_n(cos alpha))^t for
/// a fixed angle and 1 whenever n = 0 or t = 0. Throws std::invalid_argument
/// for negative arguments or t beyond a per-step list.
double lambda_coeff(int n, int t, const KickModel& kicks);

/// ∫ over [1-2*delta^2, 1] of P_n(x) dx via the three-term recurrence and
/// the derivative identity (P_{n-1}(a) - P_{n+1}(a)) / (2n+1); stable for
/// all n. Throws std::invalid_argument unless n >= 0 and delta is in [0,1].
double legendre_integral(int n, double delta);

/// The same integral as an exact-coefficient alternating polynomial in
/// delta^2 (integer coefficients, double-double accumulation to absorb the
/// up-to-26-digit cancellation). Kept as a small-order cross-check: throws
/// std::invalid_argument for n > 25, where the coefficients overflow exact
/// 64-bit integers, or delta outside [0,1].
double catalan_form_integral(int n, double delta);

/// E[D_t]: one half minus the survival-weighted Legendre series. Exact for
/// t = 0 (returns 0) and for all-zero-angle kicks at any order, via the
/// subtracted-limit form of the series.
SeriesValue expected_trace_distance(const ContinuousParams& params,
                                    const KickModel& kicks,
                                    NumericsHealth* health = nullptr);

/// P[D_t <= delta]: the depolarized mass when delta >= 1/2 plus the
/// survival-weighted conditional series CDF, clamped to [0,1]. Exact at
/// delta = 1 and for t = 0 at any order. Throws std::invalid_argument for
/// delta outside [0,1].
SeriesValue trace_distance_cdf(double delta,
                               const ContinuousParams& params,
                               const KickModel& kicks,
                               NumericsHealth* health = nullptr);

/// Lower bound on P[max_{s<=t} D_s <= delta | no depolarization up to t]:
/// max{0, 1 - t + sum_{s=1..t} P[D_s <= delta | pure]}. The union-bound sum
/// ignores q by construction (the bound conditions on survival).
SeriesValue max_trace_distance_lower_bound(double delta,
                                           const ContinuousParams& params,
                                           const KickModel& kicks,
                                           NumericsHealth* health = nullptr);

/// Empirical statistics of the sphere walk, from `runs` independent
/// trajectories with per-run substreams keyed by (seed, run index); results
/// are bit-identical for any thread count. Vectors are indexed by t in
/// 0..params.t. The max-CDF is conditional on no depolarization through t
/// and NaN when no run survived that long.
struct SphereWalkResult {
    int runs = 0;
    std::uint64_t seed = 0;
    double delta = 0.0;

    std::vector<double> e_dist;        // empirical mean of D_t
    std::vector<double> e_dist_se;
    std::vector<double> cdf;           // P[D_t <= delta]
    std::vector<double> cdf_se;
    std::vector<double> max_cdf_conditional;  // P[max_{s<=t} D_s <= delta | survive]
    std::vector<double> max_cdf_conditional_se;
    std::vector<int> surviving;        // runs not yet depolarized at t
};

SphereWalkResult sphere_walk_oracle(const ContinuousParams& params,
                                    const KickModel& kicks,
                                    double delta,
                                    int runs,
                                    std::uint64_t seed,
                                    int threads = 0);

}  // namespace qerrac
