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

#ifndef CFMIMO_COMMON_HPP
#define CFMIMO_COMMON_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace cfmimo {

inline constexpr const char *version = "0.1.0";
inline constexpr int schema_version = 1;

// speed of light in m/s
inline constexpr double speed_of_light = 299792458.0;

// Power ratios. All internal math is linear; dB/dBm appear only at the
// configuration and output boundaries.
double db_to_linear(double value_db);
double linear_to_db(double value_linear);
double dbm_to_watt(double value_dbm);
double watt_to_dbm(double value_watt);

// Shortest round-trip decimal form of a double (locale-independent).
std::string format_double(double value);

// q-th quantile (q in [0,1]) with linear interpolation between order
// statistics, matching the common "type 7" convention.
double percentile(std::vector<double> values, double q);

// FNV-1a over raw bytes, used for scenario and config digests.
std::uint64_t fnv1a(const void *data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

// Order-insensitive accumulation of scalars into a digest. Doubles are
// hashed by bit pattern, so digests are exact, not tolerance-based.
class HashSink {
  public:
    void add(double value);
    void add(std::uint64_t value);
    void add(std::string_view text);
    std::uint64_t digest() const { return state; }

  private:
    std::uint64_t state = 0xcbf29ce484222325ULL;
};

// Runs fn(0..count-1) on a small thread pool. Work items must be
// independent; results must be written to disjoint, preallocated slots so
// the output is identical to a serial loop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &fn);

} // namespace cfmimo

#endif
