// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace avrfn {

// splitmix64 step; used to derive independent sub-seeds from one master seed.
uint64_t splitmix64(uint64_t& state);
uint64_t derive_seed(uint64_t base, uint64_t stream);

// Deterministic random source. mt19937_64 produces the same stream on every
// platform; the distributions are hand-rolled because the standard library
// ones are not bit-portable.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    // uniform in [0,1) with 53-bit resolution
    double uniform();
    double uniform(double lo, double hi);
    // Box-Muller; consumes two uniforms per pair, caches the second draw
    double normal(double mean, double stddev);
    // uniform integer in [0, bound)
    uint64_t below(uint64_t bound);

    // exact serialization, including the cached normal draw
    std::string state() const;
    void restore(const std::string& s);

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace avrfn
