// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "core/common.hpp"

namespace avrfn {

uint64_t splitmix64(uint64_t& state)
{
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t stream)
{
    uint64_t s = base ^ (0x9e3779b97f4a7c15ULL + stream * 0xd1b54a32d192ed03ULL);
    uint64_t a = splitmix64(s);
    return splitmix64(s) ^ a;
}

Rng::Rng(uint64_t seed) : eng_(seed) {}

uint64_t Rng::next_u64()
{
    return eng_();
}

double Rng::uniform()
{
    return double(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal(double mean, double stddev)
{
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0)
        u1 = 0x1.0p-53;
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

uint64_t Rng::below(uint64_t bound)
{
    require(bound > 0, ErrorCode::invalid_argument, "Rng::below: bound must be positive");
    // rejection sampling keeps the draw unbiased
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

std::string Rng::state() const
{
    std::ostringstream os;
    os << eng_ << ' ' << (has_spare_ ? 1 : 0) << ' ' << std::bit_cast<uint64_t>(spare_);
    return os.str();
}

void Rng::restore(const std::string& s)
{
    std::istringstream is(s);
    int flag = 0;
    uint64_t bits = 0;
    is >> eng_ >> flag >> bits;
    require(!is.fail(), ErrorCode::format, "Rng::restore: malformed state string");
    has_spare_ = flag != 0;
    spare_ = std::bit_cast<double>(bits);
}

} // namespace avrfn
