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

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qerrac {

/// Counter-based pseudo-random generator (Philox-4x64, 10 rounds).
///
/// Every (key, counter) pair maps to an independent 256-bit block, so a
/// simulation can hand each run its own stream keyed by (seed, run index)
/// and produce identical results no matter how runs are scheduled across
/// threads. The core bijection matches numpy.random.Philox; numpy advances
/// its counter before emitting a block, so numpy's first block for
/// counter=[0,0,0,0] equals block(counter=[1,0,0,0]) here.
class PhiloxRng {
   public:
    using result_type = std::uint64_t;

    /// Stream keyed by (seed, stream). Draws start at counter zero.
    PhiloxRng(std::uint64_t seed, std::uint64_t stream)
        : key0_(seed), key1_(stream), counter_{0, 0, 0, 0}, index_(4) {}

    /// Raw 256-bit block for an explicit counter; the stateless core.
    static std::array<std::uint64_t, 4> block(const std::array<std::uint64_t, 4>& counter,
                                              std::uint64_t key0,
                                              std::uint64_t key1) {
        std::array<std::uint64_t, 4> ctr = counter;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi0, hi1;
            std::uint64_t lo0 = mul_hi_lo(ctr[0], kMultiplier0, &hi0);
            std::uint64_t lo1 = mul_hi_lo(ctr[2], kMultiplier1, &hi1);
            ctr = {hi1 ^ ctr[1] ^ key0, lo1, hi0 ^ ctr[3] ^ key1, lo0};
            key0 += kWeyl0;
            key1 += kWeyl1;
        }
        return ctr;
    }

    std::uint64_t next_u64() {
        if (index_ == 4) {
            buffer_ = block(counter_, key0_, key1_);
            advance_counter();
            index_ = 0;
        }
        return buffer_[index_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Index into a cumulative probability table (last entry ~ 1).
    /// Returns the first i with u < cumulative[i].
    std::size_t sample_cumulative(const std::vector<double>& cumulative) {
        double u = uniform();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cumulative[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return lo;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) {
            throw std::invalid_argument("uniform_index: empty range");
        }
        // Rejection sampling to avoid modulo bias.
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Satisfy UniformRandomBitGenerator so <random> distributions could apply.
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return UINT64_MAX; }
    std::uint64_t operator()() { return next_u64(); }

   private:
    static constexpr std::uint64_t kMultiplier0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMultiplier1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    static std::uint64_t mul_hi_lo(std::uint64_t a, std::uint64_t b, std::uint64_t* hi) {
        __uint128_t product = static_cast<__uint128_t>(a) * b;
        *hi = static_cast<std::uint64_t>(product >> 64);
        return static_cast<std::uint64_t>(product);
    }

    void advance_counter() {
        for (auto& word : counter_) {
            if (++word != 0) {
                break;
            }
        }
    }

    std::uint64_t key0_, key1_;
    std::array<std::uint64_t, 4> counter_;
    std::array<std::uint64_t, 4> buffer_{};
    int index_;
};

}  // namespace qerrac
