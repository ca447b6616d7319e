// SPDX-License-Identifier: Apache-2.0
//
// cfmimo - cell-free massive MIMO downlink simulator with asynchronous reception
// Copyright (C) 2026 cfmimo contributors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
// except in compliance with the License. You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0.
//
// Unless required by applicable law or agreed to in writing, software distributed under the
// License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
// either express or implied. See the License for the specific language governing permissions
// and limitations under the License.
// ------------------------------------------------------------------------

#include "cfmimo/rng.hpp"

#include <cmath>
#include <numbers>

namespace cfmimo {

namespace {

// SplitMix64 finalizer; good avalanche, cheap, and stable across platforms.
std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_key(std::uint64_t state, std::uint64_t id)
{
    return splitmix64(state ^ (splitmix64(id) + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2)));
}

} // namespace

RngStream::RngStream(std::uint64_t seed) : engine(splitmix64(seed)) {}

RngStream RngStream::derive(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t key = splitmix64(master);
    for (std::uint64_t id : path)
        key = mix_key(key, id);
    return RngStream(key);
}

std::uint64_t RngStream::next_u64() { return engine(); }

double RngStream::uniform()
{
    // 53-bit mantissa in [0, 1)
    return double(engine() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double low, double high) { return low + (high - low) * uniform(); }

double RngStream::normal()
{
    if (has_spare)
    {
        has_spare = false;
        return spare;
    }
    // Box-Muller; reject u1 == 0 so the log is finite.
    double u1 = uniform();
    while (u1 == 0.0)
        u1 = uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare = radius * std::sin(angle);
    has_spare = true;
    return radius * std::cos(angle);
}

double RngStream::normal(double stddev) { return stddev * normal(); }

std::complex<double> RngStream::cnormal()
{
    const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    double re = normal();
    double im = normal();
    return {re * inv_sqrt2, im * inv_sqrt2};
}

arma::cx_vec RngStream::cnormal_vec(std::size_t n)
{
    arma::cx_vec out(n);
    for (std::size_t i = 0; i < n; ++i)
        out(i) = cnormal();
    return out;
}

} // namespace cfmimo
